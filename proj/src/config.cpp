#include "infdecomp/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <map>
#include <set>

#include <fmt/format.h>

#include "infdecomp/decomposer.hpp"
#include "infdecomp/error.hpp"
#include "infdecomp/hashing.hpp"
#include "infdecomp/text.hpp"

namespace infdecomp {
namespace {

namespace pt = boost::property_tree;
using nlohmann::json;

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> kKeys = {
      {"run", {"seed", "out_dir", "cache_dir"}},
      {"generation",
       {"provider", "url", "token_env", "model", "temperature", "max_tokens", "max_in_flight", "timeout_seconds",
        "max_attempts"}},
      {"embedding",
       {"provider", "url", "token_env", "model", "dim", "batch_size", "aggregate", "timeout_seconds", "max_attempts"}},
      {"decompose", {"corpus", "templates", "template", "exemplars", "exemplars_per_prompt"}},
      {"cluster", {"k_grid", "packets_per_cluster", "max_iter", "tol"}},
      {"sts", {"datasets", "template", "exemplars", "exemplars_per_prompt"}},
      {"topics",
       {"tweets", "num_topics", "alpha", "beta", "iterations", "min_token_length", "min_count", "selection", "threshold",
        "tweets_per_topic"}},
      {"covote", {"votes", "legislators", "percentile", "template", "exemplars", "standardize"}},
  };
  return kKeys;
}

// Collects field-level problems so one run reports all of them.
class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  std::vector<std::string> errors;

  std::optional<std::string> raw(const std::string& section, const std::string& key) const {
    auto sec = tree_.get_child_optional(section);
    if (!sec) return std::nullopt;
    auto v = sec->get_optional<std::string>(key);
    if (!v) return std::nullopt;
    return text::trim(*v);
  }

  void str(const std::string& section, const std::string& key, std::string& out) const {
    if (auto v = raw(section, key)) out = *v;
  }

  template <typename T>
  void num(const std::string& section, const std::string& key, T& out) {
    auto v = raw(section, key);
    if (!v) return;
    try {
      std::size_t used = 0;
      if constexpr (std::is_same_v<T, double>) {
        out = std::stod(*v, &used);
      } else if constexpr (std::is_same_v<T, std::uint64_t>) {
        if (!v->empty() && (*v)[0] == '-') throw std::invalid_argument("negative");
        out = std::stoull(*v, &used);
      } else {
        out = static_cast<T>(std::stoll(*v, &used));
      }
      if (used != v->size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      errors.push_back(fmt::format("{}.{}: expected a number, got \"{}\"", section, key, *v));
    }
  }

  void boolean(const std::string& section, const std::string& key, bool& out) {
    auto v = raw(section, key);
    if (!v) return;
    const std::string s = text::to_lower(*v);
    if (s == "true" || s == "yes" || s == "1") out = true;
    else if (s == "false" || s == "no" || s == "0") out = false;
    else errors.push_back(fmt::format("{}.{}: expected true or false, got \"{}\"", section, key, *v));
  }

  void provider(const std::string& section, ProviderSettings& p) {
    str(section, "provider", p.kind);
    if (p.kind != "mock" && p.kind != "http")
      errors.push_back(fmt::format("{}.provider: expected mock or http, got \"{}\"", section, p.kind));
    str(section, "url", p.url);
    str(section, "token_env", p.token_env);
    str(section, "model", p.model);
    num(section, "timeout_seconds", p.timeout_seconds);
    num(section, "max_attempts", p.max_attempts);
  }

 private:
  const pt::ptree& tree_;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  for (auto& part : text::split(s, ',')) {
    auto t = text::trim(part);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

json provider_json(const ProviderSettings& p) {
  return {{"provider", p.kind}, {"url", p.url}, {"token_env", p.token_env}, {"model", p.model},
          {"timeout_seconds", p.timeout_seconds}, {"max_attempts", p.max_attempts}};
}

}  // namespace

std::filesystem::path RunConfig::resolve(const std::string& p) const {
  const std::filesystem::path path(p);
  if (path.is_absolute() || base_dir.empty()) return path;
  return base_dir / path;
}

json RunConfig::to_json() const {
  json sts = json::array();
  for (const auto& d : sts_datasets)
    sts.push_back({{"name", d.name}, {"task", d.task == StsTask::similarity ? "similarity" : "paraphrase"}, {"path", d.path}});
  return {
      {"run", {{"seed", seed}, {"out_dir", out_dir}, {"cache_dir", cache_dir}}},
      {"generation",
       {{"settings", provider_json(generation)},
        {"temperature", temperature},
        {"max_tokens", max_tokens},
        {"max_in_flight", max_in_flight}}},
      {"embedding",
       {{"settings", provider_json(embedding)},
        {"dim", embedding_dim},
        {"batch_size", batch_size},
        {"aggregate", aggregate == GenerationAggregate::mean ? "mean" : "sum"}}},
      {"decompose",
       {{"corpus", corpus},
        {"templates", templates},
        {"template", corpus_template},
        {"exemplars", corpus_exemplars},
        {"exemplars_per_prompt", exemplars_per_prompt}}},
      {"cluster",
       {{"k_grid", k_grid}, {"packets_per_cluster", packets_per_cluster}, {"max_iter", kmeans_max_iter}, {"tol", kmeans_tol}}},
      {"sts",
       {{"datasets", sts}, {"template", sts_template}, {"exemplars", sts_exemplars},
        {"exemplars_per_prompt", sts_exemplars_per_prompt}}},
      {"topics",
       {{"tweets", tweets},
        {"num_topics", lda.num_topics},
        {"alpha", lda.alpha},
        {"beta", lda.beta},
        {"iterations", lda.iterations},
        {"min_token_length", tokenizer.min_token_length},
        {"min_count", tokenizer.min_count},
        {"selection", topic_selection},
        {"threshold", theta_threshold},
        {"tweets_per_topic", tweets_per_topic}}},
      {"covote",
       {{"votes", votes},
        {"legislators", legislators},
        {"percentile", percentile},
        {"template", tweet_template},
        {"exemplars", tweet_exemplars},
        {"standardize", standardize}}},
  };
}

std::string RunConfig::hash() const { return sha256_hex(to_json().dump()); }

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::decompose: return "decompose";
    case Stage::embed: return "embed";
    case Stage::cluster: return "cluster";
    case Stage::sts: return "sts";
    case Stage::topics: return "topics";
    case Stage::covote: return "covote";
  }
  return "?";
}

RunConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides) {
  if (!std::filesystem::is_regular_file(path)) throw ConfigError("--config: file not found: " + path.string());
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }

  Reader r(tree);
  for (const auto& [section, child] : tree) {
    auto known = known_keys().find(section);
    if (known == known_keys().end()) {
      r.errors.push_back(fmt::format("[{}]: unknown section", section));
      continue;
    }
    for (const auto& [key, _] : child) {
      if (!known->second.contains(key)) r.errors.push_back(fmt::format("{}.{}: unknown key", section, key));
    }
  }

  RunConfig c;
  c.base_dir = std::filesystem::absolute(path).parent_path();
  r.num("run", "seed", c.seed);
  r.str("run", "out_dir", c.out_dir);
  r.str("run", "cache_dir", c.cache_dir);

  r.provider("generation", c.generation);
  r.num("generation", "temperature", c.temperature);
  r.num("generation", "max_tokens", c.max_tokens);
  r.num("generation", "max_in_flight", c.max_in_flight);

  r.provider("embedding", c.embedding);
  if (!r.raw("embedding", "model")) c.embedding.model = "hash";
  r.num("embedding", "dim", c.embedding_dim);
  r.num("embedding", "batch_size", c.batch_size);
  std::string aggregate = "mean";
  r.str("embedding", "aggregate", aggregate);
  if (aggregate == "mean") c.aggregate = GenerationAggregate::mean;
  else if (aggregate == "sum") c.aggregate = GenerationAggregate::sum;
  else r.errors.push_back(fmt::format("embedding.aggregate: expected mean or sum, got \"{}\"", aggregate));

  r.str("decompose", "corpus", c.corpus);
  r.str("decompose", "templates", c.templates);
  r.str("decompose", "template", c.corpus_template);
  r.str("decompose", "exemplars", c.corpus_exemplars);
  r.num("decompose", "exemplars_per_prompt", c.exemplars_per_prompt);

  if (auto grid = r.raw("cluster", "k_grid")) {
    c.k_grid.clear();
    for (const auto& item : split_list(*grid)) {
      try {
        std::size_t used = 0;
        c.k_grid.push_back(std::stoi(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        r.errors.push_back(fmt::format("cluster.k_grid: \"{}\" is not an integer", item));
      }
    }
  }
  r.num("cluster", "packets_per_cluster", c.packets_per_cluster);
  r.num("cluster", "max_iter", c.kmeans_max_iter);
  r.num("cluster", "tol", c.kmeans_tol);

  if (auto ds = r.raw("sts", "datasets")) {
    for (const auto& item : split_list(*ds)) {
      const auto parts = text::split(item, ':');
      if (parts.size() < 3) {
        r.errors.push_back(fmt::format("sts.datasets: \"{}\" is not name:task:path", item));
        continue;
      }
      StsSource src;
      src.name = text::trim(parts[0]);
      const std::string task = text::trim(parts[1]);
      std::vector<std::string> rest(parts.begin() + 2, parts.end());
      src.path = text::trim(text::join(rest, ":"));
      if (task == "similarity") src.task = StsTask::similarity;
      else if (task == "paraphrase") src.task = StsTask::paraphrase;
      else r.errors.push_back(fmt::format("sts.datasets: task of \"{}\" must be similarity or paraphrase", src.name));
      c.sts_datasets.push_back(std::move(src));
    }
  }
  r.str("sts", "template", c.sts_template);
  r.str("sts", "exemplars", c.sts_exemplars);
  r.num("sts", "exemplars_per_prompt", c.sts_exemplars_per_prompt);

  r.str("topics", "tweets", c.tweets);
  r.num("topics", "num_topics", c.lda.num_topics);
  r.num("topics", "alpha", c.lda.alpha);
  r.num("topics", "beta", c.lda.beta);
  r.num("topics", "iterations", c.lda.iterations);
  r.num("topics", "min_token_length", c.tokenizer.min_token_length);
  r.num("topics", "min_count", c.tokenizer.min_count);
  r.str("topics", "selection", c.topic_selection);
  r.num("topics", "threshold", c.theta_threshold);
  r.num("topics", "tweets_per_topic", c.tweets_per_topic);

  r.str("covote", "votes", c.votes);
  r.str("covote", "legislators", c.legislators);
  r.num("covote", "percentile", c.percentile);
  r.str("covote", "template", c.tweet_template);
  r.str("covote", "exemplars", c.tweet_exemplars);
  r.boolean("covote", "standardize", c.standardize);

  if (overrides.seed) c.seed = *overrides.seed;
  if (overrides.provider) {
    if (*overrides.provider != "mock" && *overrides.provider != "http")
      r.errors.push_back(fmt::format("--provider: expected mock or http, got \"{}\"", *overrides.provider));
    c.generation.kind = *overrides.provider;
    c.embedding.kind = *overrides.provider;
  }
  if (overrides.out_dir) c.out_dir = *overrides.out_dir;

  if (!r.errors.empty()) throw ConfigError(text::join(r.errors, "\n"));
  c.lda.seed = c.seed;
  return c;
}

void validate(const RunConfig& c, const std::vector<Stage>& stages) {
  std::vector<std::string> errors;
  auto require_file = [&](const std::string& field, const std::string& value) {
    if (value.empty()) errors.push_back(field + ": required");
    else if (!std::filesystem::is_regular_file(c.resolve(value)))
      errors.push_back(fmt::format("{}: file not found: {}", field, c.resolve(value).string()));
  };
  auto require_template = [&](const std::string& field, const std::string& id) {
    if (!std::filesystem::is_regular_file(c.resolve(c.templates))) return;  // reported separately
    try {
      find_template(load_templates(c.resolve(c.templates)), id).validate();
    } catch (const Error& e) {
      errors.push_back(fmt::format("{}: {}", field, e.what()));
    }
  };
  auto check_provider = [&](const std::string& section, const ProviderSettings& p) {
    if (p.kind == "http" && p.url.empty()) errors.push_back(section + ".url: required when provider = http");
    if (p.max_attempts < 1) errors.push_back(section + ".max_attempts: must be at least 1");
    if (p.timeout_seconds < 1) errors.push_back(section + ".timeout_seconds: must be at least 1");
  };
  auto has = [&](Stage s) { return std::find(stages.begin(), stages.end(), s) != stages.end(); };
  const bool generates = has(Stage::decompose) || has(Stage::sts) || has(Stage::covote);
  const bool embeds = has(Stage::embed) || has(Stage::sts) || has(Stage::covote);

  if (generates) {
    check_provider("generation", c.generation);
    if (c.temperature < 0) errors.push_back("generation.temperature: must be non-negative");
    if (c.max_tokens < 1) errors.push_back("generation.max_tokens: must be positive");
    if (c.max_in_flight < 1) errors.push_back("generation.max_in_flight: must be positive");
    require_file("decompose.templates", c.templates);
  }
  if (embeds) {
    check_provider("embedding", c.embedding);
    if (c.embedding_dim < 1) errors.push_back("embedding.dim: must be positive");
    if (c.batch_size < 1) errors.push_back("embedding.batch_size: must be positive");
  }
  if (has(Stage::decompose)) {
    require_file("decompose.corpus", c.corpus);
    require_file("decompose.exemplars", c.corpus_exemplars);
    require_template("decompose.template", c.corpus_template);
    if (c.exemplars_per_prompt < 0) errors.push_back("decompose.exemplars_per_prompt: must be non-negative");
  }
  if (has(Stage::cluster)) {
    if (c.k_grid.empty()) errors.push_back("cluster.k_grid: required");
    for (int k : c.k_grid) {
      if (k < 2) errors.push_back(fmt::format("cluster.k_grid: K = {} is below 2", k));
    }
    if (c.packets_per_cluster < 0) errors.push_back("cluster.packets_per_cluster: must be non-negative");
    if (c.kmeans_max_iter < 1) errors.push_back("cluster.max_iter: must be positive");
  }
  if (has(Stage::sts)) {
    if (c.sts_datasets.empty()) errors.push_back("sts.datasets: required");
    for (const auto& d : c.sts_datasets) require_file("sts.datasets[" + d.name + "]", d.path);
    require_template("sts.template", c.sts_template);
    if (c.sts_exemplars_per_prompt > 0) require_file("sts.exemplars", c.sts_exemplars);
  }
  if (has(Stage::topics) || has(Stage::covote)) {
    require_file("topics.tweets", c.tweets);
  }
  if (has(Stage::topics)) {
    if (c.lda.num_topics < 1) errors.push_back("topics.num_topics: must be at least 1");
    if (!(c.lda.alpha > 0)) errors.push_back("topics.alpha: must be positive");
    if (!(c.lda.beta > 0)) errors.push_back("topics.beta: must be positive");
    if (c.lda.iterations < 1) errors.push_back("topics.iterations: must be positive");
    if (!c.topic_selection.empty()) require_file("topics.selection", c.topic_selection);
    if (!(c.theta_threshold > 0 && c.theta_threshold <= 1)) errors.push_back("topics.threshold: must lie in (0, 1]");
    if (c.tweets_per_topic < 1) errors.push_back("topics.tweets_per_topic: must be at least 1");
  }
  if (has(Stage::covote)) {
    require_file("covote.votes", c.votes);
    require_file("covote.legislators", c.legislators);
    require_file("covote.exemplars", c.tweet_exemplars);
    require_template("covote.template", c.tweet_template);
    if (!(c.percentile >= 0 && c.percentile <= 100)) errors.push_back("covote.percentile: must lie in [0, 100]");
  }
  if (!errors.empty()) throw ConfigError(text::join(errors, "\n"));
}

}  // namespace infdecomp
