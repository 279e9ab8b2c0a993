#include "infdecomp/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "infdecomp/cluster.hpp"
#include "infdecomp/corpus.hpp"
#include "infdecomp/covote.hpp"
#include "infdecomp/error.hpp"
#include "infdecomp/hashing.hpp"
#include "infdecomp/rng.hpp"
#include "infdecomp/simeval.hpp"
#include "infdecomp/text.hpp"
#include "infdecomp/topics.hpp"

#ifndef INFDECOMP_VERSION
#define INFDECOMP_VERSION "0.0.0"
#endif

namespace infdecomp {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kViews[] = {"comments", "sentences", "generations"};

void write_json(const fs::path& path, const json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_text(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << body;
}

struct EmbeddedItem {
  std::string id;
  std::string parent_id;
  std::string text;
  std::vector<double> vector;
};

void write_embedded(const fs::path& path, const std::vector<EmbeddedItem>& items) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& it : items)
    out << json{{"id", it.id}, {"parent_id", it.parent_id}, {"text", it.text}, {"vector", it.vector}}.dump() << '\n';
}

std::vector<EmbeddedItem> read_embedded(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("missing {}; run the embed stage first", path.string()));
  std::vector<EmbeddedItem> items;
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    const json rec = json::parse(line);
    items.push_back({rec.at("id"), rec.at("parent_id"), rec.at("text"), rec.at("vector").get<std::vector<double>>()});
  }
  return items;
}

std::vector<std::string> texts_of(const CorpusView& v) {
  std::vector<std::string> out;
  out.reserve(v.items.size());
  for (const auto& it : v.items) out.push_back(it.text);
  return out;
}

}  // namespace

PipelineRunner::PipelineRunner(RunConfig config, std::string command)
    : config_(std::move(config)), command_(std::move(command)) {
  fs::create_directories(config_.cache_path());
  fs::create_directories(config_.out_path());

  if (config_.generation.kind == "http") {
    HttpEndpoint ep{config_.generation.url, token_from_env(config_.generation.token_env),
                    std::chrono::seconds(config_.generation.timeout_seconds)};
    RetryPolicy retry;
    retry.max_attempts = config_.generation.max_attempts;
    backend_ = std::make_unique<HttpBackend>(std::move(ep), retry);
  } else {
    backend_ = std::make_unique<MockBackend>();
  }
  if (config_.embedding.kind == "http") {
    HttpEndpoint ep{config_.embedding.url, token_from_env(config_.embedding.token_env),
                    std::chrono::seconds(config_.embedding.timeout_seconds)};
    RetryPolicy retry;
    retry.max_attempts = config_.embedding.max_attempts;
    provider_ = std::make_unique<HttpEmbeddingProvider>(std::move(ep), retry, config_.embedding.model);
  } else {
    provider_ = std::make_unique<HashingProvider>(static_cast<std::size_t>(config_.embedding_dim));
  }
  generation_cache_ = std::make_unique<GenerationCache>(config_.cache_path() / "generations.jsonl");
  embedding_cache_ = std::make_unique<EmbeddingCache>(config_.cache_path() / "embeddings.jsonl");
}

PipelineRunner::~PipelineRunner() = default;

std::vector<Stage> PipelineRunner::all_stages(const RunConfig& c) {
  std::vector<Stage> stages = {Stage::decompose, Stage::embed, Stage::cluster};
  if (c.has_sts()) stages.push_back(Stage::sts);
  if (c.has_legislative()) {
    stages.push_back(Stage::topics);
    stages.push_back(Stage::covote);
  }
  return stages;
}

void PipelineRunner::run_all() {
  for (Stage s : all_stages(config_)) run(s);
}

fs::path PipelineRunner::stage_dir(Stage s) const { return config_.out_path() / std::string(to_string(s)); }

StageStats& PipelineRunner::begin(Stage s) { return stats_[std::string(to_string(s))]; }

void PipelineRunner::run(Stage s) {
  // Each stage writes into a scratch directory that replaces the previous
  // artifacts only once the stage succeeds.
  const fs::path final_dir = stage_dir(s);
  const fs::path scratch = config_.out_path() / ("." + std::string(to_string(s)) + ".partial");
  fs::remove_all(scratch);
  fs::create_directories(scratch);
  const std::size_t calls_before = backend_->calls();
  const std::size_t emb_before = provider_->calls();
  try {
    switch (s) {
      case Stage::decompose: decompose(); break;
      case Stage::embed: embed(); break;
      case Stage::cluster: cluster(); break;
      case Stage::sts: sts(); break;
      case Stage::topics: topics(); break;
      case Stage::covote: covote(); break;
    }
  } catch (...) {
    fs::remove_all(scratch);
    throw;
  }
  fs::remove_all(final_dir);
  fs::rename(scratch, final_dir);
  finish(s, calls_before, emb_before);
}

void PipelineRunner::finish(Stage s, std::size_t calls_before, std::size_t emb_before) {
  StageStats& st = begin(s);
  st.backend_calls = backend_->calls() - calls_before;
  st.embedding_calls = provider_->calls() - emb_before;
}

void PipelineRunner::write_stats() const {
  json doc = json::object();
  std::size_t calls = 0, emb = 0;
  for (const auto& [name, st] : stats_) {
    doc["stages"][name] = {{"backend_calls", st.backend_calls},
                           {"generation_cache_hits", st.generation_cache_hits},
                           {"embedding_calls", st.embedding_calls}};
    calls += st.backend_calls;
    emb += st.embedding_calls;
  }
  doc["backend_calls"] = calls;
  doc["embedding_calls"] = emb;
  doc["generation_cache_warnings"] = generation_cache_->warnings();
  doc["embedding_cache_warnings"] = embedding_cache_->warnings();
  write_json(config_.out_path() / "run_stats.json", doc);
}

void PipelineRunner::write_manifest(Stage s, const std::vector<fs::path>& inputs,
                                    const std::vector<std::string>& outputs) const {
  json in = json::array();
  for (const auto& p : inputs) {
    // Paths inside the output directory are recorded relative to it.
    std::string shown = p.lexically_relative(config_.out_path()).string();
    if (shown.empty() || shown.rfind("..", 0) == 0) shown = p.lexically_relative(config_.base_dir).string();
    in.push_back({{"path", shown}, {"sha256", sha256_file(p)}});
  }
  const json doc = {{"stage", std::string(to_string(s))},
                    {"version", INFDECOMP_VERSION},
                    {"command", command_},
                    {"config_hash", config_.hash()},
                    {"config", config_.to_json()},
                    {"inputs", in},
                    {"outputs", outputs}};
  const fs::path scratch = config_.out_path() / ("." + std::string(to_string(s)) + ".partial");
  write_json(scratch / "manifest.json", doc);
}

void PipelineRunner::decompose() {
  const fs::path dir = config_.out_path() / ".decompose.partial";
  const fs::path corpus_path = config_.resolve(config_.corpus);
  const auto docs = load_corpus(corpus_path);
  const auto comments = comments_view(docs);
  const auto sentences = sentences_view(docs);

  const auto templates = load_templates(config_.resolve(config_.templates));
  PromptConfig pc{find_template(templates, config_.corpus_template), load_exemplars(config_.resolve(config_.corpus_exemplars)),
                  static_cast<std::size_t>(config_.exemplars_per_prompt), derive_seed(config_.seed, "decompose")};
  DecomposeOptions opt{config_.generation.model, {config_.temperature, config_.max_tokens},
                       static_cast<std::size_t>(config_.max_in_flight)};
  const auto result = decompose_corpus(comments, {pc}, opt, *backend_, *generation_cache_);
  begin(Stage::decompose).generation_cache_hits = result.cache_hits;

  write_view(dir / "comments.jsonl", comments);
  write_view(dir / "sentences.jsonl", sentences);
  write_view(dir / "generations.jsonl", generations_view(result.decompositions));
  write_decompositions(dir / "decompositions.jsonl", result.decompositions);
  write_json(dir / "summary.json", {{"documents", docs.size()},
                                    {"sentences", sentences.items.size()},
                                    {"decomposed", result.decompositions.size()},
                                    {"total_generations", result.total_generations},
                                    {"mean_generations", result.mean_generations()},
                                    {"failures", result.failures}});
  write_manifest(Stage::decompose,
                 {corpus_path, config_.resolve(config_.templates), config_.resolve(config_.corpus_exemplars)},
                 {"comments.jsonl", "sentences.jsonl", "generations.jsonl", "decompositions.jsonl", "summary.json"});
}

void PipelineRunner::embed() {
  const fs::path dir = config_.out_path() / ".embed.partial";
  const fs::path src = stage_dir(Stage::decompose);
  std::vector<fs::path> inputs;
  std::vector<std::string> outputs;
  json counts = json::object();
  for (const char* name : kViews) {
    const fs::path in = src / (std::string(name) + ".jsonl");
    if (!fs::exists(in)) throw Error(fmt::format("missing {}; run the decompose stage first", in.string()));
    const auto view = read_view(in, ViewKind::comments);
    const auto vectors = embed_batch(texts_of(view), *provider_, *embedding_cache_,
                                     {static_cast<std::size_t>(config_.batch_size)});
    std::vector<EmbeddedItem> items;
    items.reserve(view.items.size());
    for (std::size_t i = 0; i < view.items.size(); ++i)
      items.push_back({view.items[i].item_id, view.items[i].parent_id, view.items[i].text, vectors[i].values});
    write_embedded(dir / (std::string(name) + ".jsonl"), items);
    inputs.push_back(in);
    outputs.push_back(std::string(name) + ".jsonl");
    counts[name] = items.size();
  }
  write_json(dir / "summary.json", {{"provider_id", provider_->id()}, {"items", counts}});
  outputs.push_back("summary.json");
  write_manifest(Stage::embed, inputs, outputs);
}

void PipelineRunner::cluster() {
  const fs::path dir = config_.out_path() / ".cluster.partial";
  const fs::path src = stage_dir(Stage::embed);
  std::map<std::string, std::vector<EmbeddedItem>> views;
  std::vector<fs::path> inputs;
  for (const char* name : kViews) {
    inputs.push_back(src / (std::string(name) + ".jsonl"));
    views[name] = read_embedded(inputs.back());
  }

  // Every view is subsampled to the size of the comments view.
  const std::size_t n = views["comments"].size();
  json warnings = json::array();
  std::map<std::string, std::vector<EmbeddedItem>> sampled;
  for (const char* name : kViews) {
    auto& items = views[name];
    if (items.size() <= n) {
      if (items.size() < n) warnings.push_back(fmt::format("{} view has {} items, fewer than the {} comments", name, items.size(), n));
      sampled[name] = items;
      continue;
    }
    CorpusView v{ViewKind::comments, {}};
    std::map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < items.size(); ++i) {
      v.items.push_back({items[i].id, items[i].text, items[i].parent_id});
      pos[items[i].id] = i;
    }
    const auto sub = subsample(v, n, derive_seed(config_.seed, std::string("subsample:") + name));
    for (const auto& it : sub.items) sampled[name].push_back(items[pos.at(it.item_id)]);
  }

  std::vector<MetricRow> rows;
  std::vector<std::string> outputs;
  for (int k : config_.k_grid) {
    for (const char* name : kViews) {
      const auto& items = sampled[name];
      if (static_cast<std::size_t>(k) >= items.size())
        throw ClusterError(fmt::format("cluster: K = {} needs more than {} {} items", k, items.size(), name));
      std::vector<std::vector<double>> vecs;
      std::vector<std::string> ids, texts;
      for (const auto& it : items) {
        vecs.push_back(it.vector);
        ids.push_back(it.id);
        texts.push_back(it.text);
      }
      const Matrix x = to_matrix(vecs);
      KMeansOptions opt;
      opt.k = k;
      opt.seed = derive_seed(config_.seed, fmt::format("kmeans:{}:{}", name, k));
      opt.max_iter = config_.kmeans_max_iter;
      opt.tol = config_.kmeans_tol;
      const auto model = kmeans(x, opt, ids);
      rows.push_back({k, name, intrinsic_metrics(x, model.assignments)});

      const std::string stem = fmt::format("{}_k{}", name, k);
      write_cluster_model(dir / ("model_" + stem + ".json"), model);
      outputs.push_back("model_" + stem + ".json");
      if (config_.packets_per_cluster > 0) {
        const auto packets = make_eval_packets(model, texts, config_.packets_per_cluster,
                                               derive_seed(config_.seed, "packets:" + stem));
        for (const auto& w : packets.warnings) warnings.push_back(stem + ": " + w);
        write_packets_jsonl(dir / ("packets_" + stem + ".jsonl"), packets.packets);
        outputs.push_back("packets_" + stem + ".jsonl");
      }
    }
  }
  write_metric_table(dir / "metrics.csv", rows);
  write_json(dir / "summary.json", {{"items_per_view", n}, {"warnings", warnings}});
  outputs.insert(outputs.begin(), {"metrics.csv", "summary.json"});
  write_manifest(Stage::cluster, inputs, outputs);
}

void PipelineRunner::sts() {
  const fs::path dir = config_.out_path() / ".sts.partial";
  std::vector<StsDataset> datasets;
  std::vector<fs::path> inputs;
  for (const auto& src : config_.sts_datasets) {
    inputs.push_back(config_.resolve(src.path));
    datasets.push_back(load_sts_dataset(inputs.back(), src.name, src.task));
  }

  const auto templates = load_templates(config_.resolve(config_.templates));
  std::vector<Exemplar> exemplars;
  if (config_.sts_exemplars_per_prompt > 0) exemplars = load_exemplars(config_.resolve(config_.sts_exemplars));
  PromptConfig pc{find_template(templates, config_.sts_template), exemplars,
                  static_cast<std::size_t>(config_.sts_exemplars_per_prompt), derive_seed(config_.seed, "sts")};
  DecomposeOptions opt{config_.generation.model, {config_.temperature, config_.max_tokens},
                       static_cast<std::size_t>(config_.max_in_flight)};
  const auto result = decompose_corpus(sts_items_view(datasets), {pc}, opt, *backend_, *generation_cache_);
  begin(Stage::sts).generation_cache_hits = result.cache_hits;
  GenerationLookup lookup;
  for (const auto& d : result.decompositions) lookup[d.parent_id] = d.generations;

  const auto baseline = run_sts_benchmark(datasets, StsMode::baseline, *provider_, *embedding_cache_);
  const auto augmented =
      run_sts_benchmark(datasets, StsMode::augmented, *provider_, *embedding_cache_, &lookup, config_.aggregate);
  auto rows = baseline.rows;
  rows.insert(rows.end(), augmented.rows.begin(), augmented.rows.end());
  write_report_csv(dir / "report.csv", rows);
  write_text(dir / "comparison.txt", format_comparison_table(baseline, augmented));
  write_decompositions(dir / "decompositions.jsonl", result.decompositions);
  write_json(dir / "summary.json", {{"provider_id", baseline.provider_id},
                                    {"decomposed_items", result.decompositions.size()},
                                    {"mean_generations", result.mean_generations()},
                                    {"failures", result.failures}});
  inputs.push_back(config_.resolve(config_.templates));
  write_manifest(Stage::sts, inputs, {"report.csv", "comparison.txt", "decompositions.jsonl", "summary.json"});
}

namespace {

std::map<std::string, std::vector<std::string>> tweets_by_legislator(const std::vector<Document>& tweets) {
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& t : tweets) {
    auto it = t.meta.find("legislator");
    if (it == t.meta.end()) throw TopicError(fmt::format("tweet {} has no meta.legislator", t.doc_id));
    out[it->second].push_back(t.doc_id);
  }
  return out;
}

}  // namespace

void PipelineRunner::topics() {
  const fs::path dir = config_.out_path() / ".topics.partial";
  const fs::path tweets_path = config_.resolve(config_.tweets);
  const auto tweets = load_corpus(tweets_path);
  std::vector<std::pair<std::string, std::string>> id_text;
  for (const auto& t : tweets) id_text.emplace_back(t.doc_id, t.text);
  const auto by_leg = tweets_by_legislator(tweets);

  const auto corpus = build_corpus(id_text, config_.tokenizer);
  LdaOptions lda = config_.lda;
  lda.seed = derive_seed(config_.seed, "lda");
  const auto state = fit_lda(corpus, lda);

  std::vector<fs::path> inputs = {tweets_path};
  TopicSelection selection;
  if (!config_.topic_selection.empty()) {
    inputs.push_back(config_.resolve(config_.topic_selection));
    selection = load_topic_selection(inputs.back(), state.num_topics);
  } else {
    for (int t = 0; t < state.num_topics; ++t) {
      selection.topic_ids.insert(t);
      selection.labels[t] = fmt::format("topic {}", t);
    }
  }
  const auto picks = select_top_tweets(state, selection, by_leg, config_.theta_threshold,
                                       static_cast<std::size_t>(config_.tweets_per_topic));

  json selected = json::array();
  std::size_t n_selected = 0;
  for (const auto& [key, ids] : picks) {
    if (ids.empty()) continue;
    selected.push_back({{"legislator", key.first}, {"topic", key.second}, {"tweets", ids}});
    n_selected += ids.size();
  }
  write_json(dir / "selected.json", {{"threshold", config_.theta_threshold}, {"selections", selected}});
  write_topic_words(dir / "topic_words.csv", state, 10, &selection);
  write_theta(dir / "theta.csv", state);
  write_json(dir / "summary.json", {{"documents", corpus.doc_ids.size()},
                                    {"dropped_documents", corpus.dropped_doc_ids},
                                    {"vocabulary", corpus.vocab.size()},
                                    {"selected_tweets", n_selected},
                                    {"selection_from_file", !config_.topic_selection.empty()}});
  write_manifest(Stage::topics, inputs, {"selected.json", "topic_words.csv", "theta.csv", "summary.json"});
}

void PipelineRunner::covote() {
  const fs::path dir = config_.out_path() / ".covote.partial";
  const fs::path selected_path = stage_dir(Stage::topics) / "selected.json";
  if (!fs::exists(selected_path))
    throw Error(fmt::format("missing {}; run the topics stage first", selected_path.string()));
  const json selected = read_json(selected_path);
  const fs::path tweets_path = config_.resolve(config_.tweets);
  const auto tweets = load_corpus(tweets_path);
  std::map<std::string, const Document*> by_id;
  for (const auto& t : tweets) by_id[t.doc_id] = &t;

  std::map<LegislatorTopic, std::vector<std::string>> picks;
  std::set<std::string> used;
  for (const auto& s : selected.at("selections")) {
    auto ids = s.at("tweets").get<std::vector<std::string>>();
    for (const auto& id : ids) {
      if (!by_id.contains(id)) throw CovoteError(fmt::format("selected tweet {} is not in {}", id, tweets_path.string()));
      used.insert(id);
    }
    picks[{s.at("legislator").get<std::string>(), s.at("topic").get<int>()}] = std::move(ids);
  }

  // Two prompts built from disjoint halves of the exemplar pool.
  CorpusView view{ViewKind::comments, {}};
  for (const auto& id : used) view.items.push_back({id, by_id.at(id)->text, id});
  const auto templates = load_templates(config_.resolve(config_.templates));
  const auto& tpl = find_template(templates, config_.tweet_template);
  const auto pool = load_exemplars(config_.resolve(config_.tweet_exemplars));
  const std::size_t half = pool.size() / 2;
  const std::vector<Exemplar> first(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(half));
  const std::vector<Exemplar> second(pool.begin() + static_cast<std::ptrdiff_t>(half), pool.end());
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(config_.exemplars_per_prompt), half);
  const std::vector<PromptConfig> prompts = {{tpl, first, k, derive_seed(config_.seed, "covote:prompt0")},
                                             {tpl, second, k, derive_seed(config_.seed, "covote:prompt1")}};
  DecomposeOptions opt{config_.generation.model, {config_.temperature, config_.max_tokens},
                       static_cast<std::size_t>(config_.max_in_flight)};
  const auto result = decompose_corpus(view, prompts, opt, *backend_, *generation_cache_);
  begin(Stage::covote).generation_cache_hits = result.cache_hits;
  std::map<std::string, std::vector<std::string>> gens;
  for (const auto& d : result.decompositions) gens[d.parent_id] = d.generations;

  std::vector<std::string> tweet_texts;
  for (const auto& it : view.items) tweet_texts.push_back(it.text);
  const auto tweet_vecs = embed_batch(tweet_texts, *provider_, *embedding_cache_, {static_cast<std::size_t>(config_.batch_size)});
  std::map<std::string, const std::vector<double>*> tweet_vec;
  for (std::size_t i = 0; i < view.items.size(); ++i) tweet_vec[view.items[i].item_id] = &tweet_vecs[i].values;

  std::vector<std::string> gen_texts;
  for (const auto& [_, list] : gens) gen_texts.insert(gen_texts.end(), list.begin(), list.end());
  std::map<std::string, std::vector<double>> gen_vec;
  if (!gen_texts.empty()) {
    const auto vecs = embed_batch(gen_texts, *provider_, *embedding_cache_, {static_cast<std::size_t>(config_.batch_size)});
    for (std::size_t i = 0; i < gen_texts.size(); ++i) gen_vec.emplace(gen_texts[i], vecs[i].values);
  }

  TopicEmbeddings utt, dec;
  for (const auto& [key, ids] : picks) {
    for (const auto& id : ids) {
      utt[key].push_back(*tweet_vec.at(id));
      if (auto g = gens.find(id); g != gens.end()) {
        for (const auto& s : g->second) dec[key].push_back(gen_vec.at(s));
      }
    }
  }

  const fs::path votes_path = config_.resolve(config_.votes);
  const fs::path legs_path = config_.resolve(config_.legislators);
  const auto features = build_features(load_votes(votes_path), load_legislators(legs_path), utt, dec, config_.percentile);

  const std::vector<std::string> names = {kSameParty, kSimUtterances, kSimDecompositions};
  LmmOptions lmm;
  lmm.standardize = config_.standardize;
  lmm.seed = derive_seed(config_.seed, "lmm");
  const auto fit = fit_lmm(features.observations, names, lmm);
  const auto rows = coefficient_table(features.observations, names, lmm);

  write_coefficient_table(dir / "coefficients.csv", rows);
  std::string report = fmt::format("{:<22} {}\n", "covariate", "beta (se)  delta BIC");
  for (const auto& r : rows) report += format_coefficient_row(r) + "\n";
  write_text(dir / "report.txt", report);

  std::string obs_csv = "first,second,lambda,n_common,response,same_party,sim_utterances,sim_decompositions\n";
  for (const auto& o : features.observations) {
    obs_csv += fmt::format("{},{},{:.10f},{},{:.10f},{:.0f},{:.10f},{:.10f}\n", o.first, o.second, o.lambda, o.n_common,
                           o.response, o.features.at(kSameParty), o.features.at(kSimUtterances),
                           o.features.at(kSimDecompositions));
  }
  write_text(dir / "observations.csv", obs_csv);

  json beta = json::object();
  for (std::size_t i = 0; i < fit.names.size(); ++i) beta[fit.names[i]] = {{"beta", fit.beta[i]}, {"se", fit.se[i]}};
  write_json(dir / "fit.json", {{"coefficients", beta},
                                {"sigma2_a", fit.sigma2_a},
                                {"sigma2_b", fit.sigma2_b},
                                {"sigma2_e", fit.sigma2_e},
                                {"loglik", fit.loglik},
                                {"bic", fit.bic},
                                {"n_obs", fit.n_obs}});
  write_decompositions(dir / "decompositions.jsonl", result.decompositions);
  write_json(dir / "summary.json", {{"pairs_considered", features.pairs_considered},
                                    {"pairs_used", features.observations.size()},
                                    {"dropped_no_common_votes", features.dropped_no_common_votes},
                                    {"dropped_no_shared_topics", features.dropped_no_shared_topics},
                                    {"warnings", features.warnings},
                                    {"decomposition_failures", result.failures}});
  write_manifest(Stage::covote,
                 {selected_path, tweets_path, votes_path, legs_path, config_.resolve(config_.templates),
                  config_.resolve(config_.tweet_exemplars)},
                 {"coefficients.csv", "report.txt", "observations.csv", "fit.json", "decompositions.jsonl", "summary.json"});
}

}  // namespace infdecomp
