#include "infdecomp/decomposer.hpp"

#include <algorithm>
#include <chrono>
#include <iterator>
#include <unordered_set>

#include <fmt/chrono.h>
#include <fmt/format.h>

#include "infdecomp/error.hpp"
#include "infdecomp/hashing.hpp"
#include "infdecomp/parallel.hpp"
#include "infdecomp/rng.hpp"
#include "infdecomp/text.hpp"
#include "json.hpp"

namespace infdecomp {
namespace {

using nlohmann::json;

std::size_t count_occurrences(std::string_view hay, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string_view::npos; pos = hay.find(needle, pos + needle.size())) ++n;
  return n;
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
  return s;
}

std::string rstrip_lines(const std::string& s) {
  auto lines = text::split(s, '\n');
  for (auto& l : lines) {
    while (!l.empty() && (l.back() == ' ' || l.back() == '\t' || l.back() == '\r')) l.pop_back();
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return text::join(lines, "\n");
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PromptError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw PromptError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

// Length in bytes of a leading list marker plus following whitespace, or 0.
std::size_t list_marker_length(std::string_view line) {
  std::size_t n = 0;
  if (line.starts_with("-") || line.starts_with("*")) {
    n = 1;
  } else if (line.starts_with("\xE2\x80\xA2")) {  // bullet
    n = 3;
  } else {
    while (n < line.size() && std::isdigit(static_cast<unsigned char>(line[n]))) ++n;
    if (n == 0 || n >= line.size() || (line[n] != '.' && line[n] != ')')) return 0;
    ++n;
  }
  if (n < line.size() && line[n] != ' ' && line[n] != '\t') return 0;
  while (n < line.size() && (line[n] == ' ' || line[n] == '\t')) ++n;
  return n;
}

bool has_alnum(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::isalnum(c) || c >= 0x80; });
}

std::string finish_clause(std::string clause) {
  clause = text::trim(clause);
  while (!clause.empty() && (clause.back() == ',' || clause.back() == ';' || clause.back() == ':')) clause.pop_back();
  clause = text::trim(clause);
  if (clause.empty() || !has_alnum(clause)) return {};
  clause = text::capitalize_first(text::to_lower(clause));
  const char last = clause.back();
  if (last != '.' && last != '!' && last != '?') clause.push_back('.');
  return clause;
}

std::string now_utc() {
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::to_time_t(std::chrono::system_clock::now())));
}

}  // namespace

void PromptTemplate::validate() const {
  if (template_id.empty()) throw PromptError("template without id");
  if (exemplar_format.empty()) {
    if (count_occurrences(instruction, kInputSlot) != 1)
      throw PromptError(fmt::format("template {}: zero-shot instruction must contain {} exactly once", template_id, kInputSlot));
    return;
  }
  if (count_occurrences(exemplar_format, kInputSlot) != 1 || count_occurrences(exemplar_format, kOutputSlot) != 1)
    throw PromptError(fmt::format("template {}: exemplar_format must contain {} and {} exactly once", template_id,
                                  kInputSlot, kOutputSlot));
}

void Exemplar::validate() const {
  if (outputs.empty()) throw PromptError(fmt::format("exemplar {} has no outputs", exemplar_id));
  for (const auto& o : outputs) {
    if (text::trim(o).empty() || o.find('\n') != std::string::npos)
      throw PromptError(fmt::format("exemplar {}: each output must be one non-empty line", exemplar_id));
  }
}

std::vector<PromptTemplate> load_templates(const std::filesystem::path& path) {
  const json doc = read_json_file(path);
  std::vector<PromptTemplate> out;
  try {
    for (const auto& t : doc.at("templates")) {
      PromptTemplate tpl{t.at("id").get<std::string>(), t.at("instruction").get<std::string>(),
                         t.value("exemplar_format", std::string{}), t.value("separator", std::string{"==="})};
      tpl.validate();
      out.push_back(std::move(tpl));
    }
  } catch (const json::exception& e) {
    throw PromptError(fmt::format("{}: {}", path.string(), e.what()));
  }
  return out;
}

std::vector<Exemplar> load_exemplars(const std::filesystem::path& path) {
  const json doc = read_json_file(path);
  std::vector<Exemplar> out;
  std::unordered_set<std::string> ids;
  try {
    for (const auto& e : doc.at("exemplars")) {
      Exemplar ex{e.at("id").get<std::string>(), e.at("input").get<std::string>(),
                  e.at("outputs").get<std::vector<std::string>>()};
      ex.validate();
      if (!ids.insert(ex.exemplar_id).second) throw PromptError("duplicate exemplar id " + ex.exemplar_id);
      out.push_back(std::move(ex));
    }
  } catch (const json::exception& e) {
    throw PromptError(fmt::format("{}: {}", path.string(), e.what()));
  }
  return out;
}

const PromptTemplate& find_template(const std::vector<PromptTemplate>& templates, std::string_view id) {
  for (const auto& t : templates) {
    if (t.template_id == id) return t;
  }
  throw PromptError(fmt::format("unknown template \"{}\"", id));
}

PromptDraw draw_prompt(const PromptTemplate& tpl, const std::vector<Exemplar>& exemplars, std::size_t k,
                       std::uint64_t seed, std::string_view input_text) {
  tpl.validate();
  if (k > exemplars.size())
    throw PromptError(fmt::format("requested {} exemplars but only {} available", k, exemplars.size()));

  PromptDraw draw;
  if (tpl.exemplar_format.empty()) {
    if (k > 0) throw PromptError(fmt::format("template {} is zero-shot and takes no exemplars", tpl.template_id));
    draw.prompt = rstrip_lines(replace_all(tpl.instruction, kInputSlot, input_text));
    return draw;
  }

  Rng rng(seed);
  std::vector<std::string> blocks;
  blocks.push_back(tpl.instruction);
  for (std::size_t idx : rng.sample_without_replacement(exemplars.size(), k)) {
    const Exemplar& ex = exemplars[idx];
    draw.exemplar_ids.push_back(ex.exemplar_id);
    std::string block = replace_all(tpl.exemplar_format, kInputSlot, ex.input);
    blocks.push_back(replace_all(std::move(block), kOutputSlot, text::join(ex.outputs, "\n")));
  }
  blocks.push_back(replace_all(replace_all(tpl.exemplar_format, kInputSlot, input_text), kOutputSlot, ""));
  draw.prompt = rstrip_lines(text::join(blocks, "\n" + tpl.separator + "\n"));
  return draw;
}

std::string build_prompt(const PromptTemplate& tpl, const std::vector<Exemplar>& exemplars, std::size_t k,
                         std::uint64_t seed, std::string_view input_text) {
  return draw_prompt(tpl, exemplars, k, seed, input_text).prompt;
}

std::string request_fingerprint(const GenerationRequest& req) {
  const json canonical = {{"v", 1},
                          {"template_id", req.template_id},
                          {"exemplar_ids", req.exemplar_ids},
                          {"model_id", req.model_id},
                          {"temperature", req.sampling.temperature},
                          {"max_tokens", req.sampling.max_tokens},
                          {"input_text", text::normalize(req.input_text)}};
  return sha256_hex(canonical.dump());
}

std::string MockBackend::decompose_text(std::string_view input) {
  std::vector<std::string> clauses;
  for (const auto& sentence : split_sentences(input)) {
    std::string current;
    for (const auto& word : text::split(sentence, ' ')) {
      std::string bare = text::to_lower(word);
      while (!bare.empty() && (bare.back() == ',' || bare.back() == ';')) bare.pop_back();
      if (bare == "and" || bare == "because" || bare == "but") {
        if (auto c = finish_clause(current); !c.empty()) clauses.push_back(std::move(c));
        current.clear();
        continue;
      }
      if (!current.empty()) current.push_back(' ');
      current += word;
    }
    if (auto c = finish_clause(current); !c.empty()) clauses.push_back(std::move(c));
  }
  return text::join(clauses, "\n");
}

std::string HttpBackend::do_complete(const GenerationRequest& req) {
  const json body = {{"model", req.model_id},
                     {"prompt", req.prompt},
                     {"temperature", req.sampling.temperature},
                     {"max_tokens", req.sampling.max_tokens}};
  const json response = post_json(endpoint_, body, retry_);
  auto it = response.find("text");
  if (it == response.end() || !it->is_string()) throw EmptyCompletionError(endpoint_.url + ": response lacks \"text\"");
  return it->get<std::string>();
}

std::string generate(const GenerationRequest& req, GenerationBackend& backend) {
  std::string raw = backend.complete(req);
  if (text::trim(raw).empty())
    throw EmptyCompletionError(fmt::format("backend {} returned an empty completion", backend.id()));
  return raw;
}

std::vector<std::string> dedup_generations(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& item : items) {
    std::string norm = text::normalize(item);
    if (norm.empty()) continue;
    if (seen.insert(text::fold_case(norm)).second) out.push_back(std::move(norm));
  }
  return out;
}

std::vector<std::string> parse_generations(std::string_view raw) {
  std::vector<std::string> lines;
  for (auto line : text::split(raw, '\n')) {
    line = text::trim(line);
    for (std::size_t m = list_marker_length(line); m > 0; m = list_marker_length(line)) line = text::trim(line.substr(m));
    if (line == "-" || line == "*" || line == "\xE2\x80\xA2") continue;
    lines.push_back(std::move(line));
  }
  auto out = dedup_generations(lines);
  if (out.empty()) throw EmptyDecompositionError("completion contains no generations");
  return out;
}

GenerationCache::GenerationCache(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.empty() || !std::filesystem::exists(path_)) return;
  std::ifstream in(path_, std::ios::binary);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const json rec = json::parse(line);
      Entry e{rec.at("raw").get<std::string>(), rec.at("generations").get<std::vector<std::string>>()};
      entries_[rec.at("fingerprint").get<std::string>()] = std::move(e);
    } catch (const json::exception& ex) {
      warnings_.push_back(fmt::format("{} line {}: ignoring corrupted cache entry ({})", path_.string(), line_no, ex.what()));
    }
  }
}

std::optional<GenerationCache::Entry> GenerationCache::lookup(const std::string& fingerprint) const {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(fingerprint);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void GenerationCache::store(const std::string& fingerprint, const Entry& entry) {
  std::lock_guard lock(mutex_);
  entries_[fingerprint] = entry;
  if (path_.empty()) return;
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw Error("cannot append to cache " + path_.string());
  const json rec = {{"fingerprint", fingerprint}, {"raw", entry.raw}, {"generations", entry.generations}, {"timestamp", now_utc()}};
  out << rec.dump() << '\n';
  out.flush();
}

std::size_t GenerationCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

DecomposeResult decompose_corpus(const CorpusView& view, const std::vector<PromptConfig>& configs,
                                 const DecomposeOptions& options, GenerationBackend& backend,
                                 GenerationCache& cache) {
  if (view.kind != ViewKind::comments) throw PromptError("decompose_corpus expects a comments view");
  if (configs.empty()) throw PromptError("decompose_corpus needs at least one prompt configuration");
  for (const auto& c : configs) {
    c.tpl.validate();
    for (const auto& e : c.exemplars) e.validate();
  }

  const std::size_t calls_before = backend.calls();
  std::vector<std::optional<Decomposition>> results(view.items.size());
  std::vector<std::string> errors(view.items.size());
  std::atomic<std::size_t> hits{0};

  parallel_for(view.items.size(), options.max_in_flight, [&](std::size_t i) {
    const ViewItem& item = view.items[i];
    try {
      std::vector<std::string> merged;
      std::vector<std::string> fingerprints;
      for (const auto& cfg : configs) {
        const auto draw = draw_prompt(cfg.tpl, cfg.exemplars, cfg.k, derive_seed(cfg.seed, item.item_id), item.text);
        GenerationRequest req{cfg.tpl.template_id, draw.exemplar_ids, options.model_id, options.sampling, item.text, draw.prompt};
        const std::string fp = request_fingerprint(req);
        fingerprints.push_back(fp);
        std::vector<std::string> gens;
        if (auto hit = cache.lookup(fp)) {
          ++hits;
          gens = std::move(hit->generations);
        } else {
          std::string raw = generate(req, backend);
          gens = parse_generations(raw);
          cache.store(fp, {std::move(raw), gens});
        }
        merged.insert(merged.end(), std::make_move_iterator(gens.begin()), std::make_move_iterator(gens.end()));
      }
      Decomposition d;
      d.parent_id = item.item_id;
      d.generations = dedup_generations(merged);
      if (d.generations.empty()) throw EmptyDecompositionError("no generations");
      d.request_fingerprint = fingerprints.size() == 1 ? fingerprints.front() : sha256_hex(text::join(fingerprints, ","));
      results[i] = std::move(d);
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });

  DecomposeResult out;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i]) {
      out.total_generations += results[i]->generations.size();
      out.decompositions.push_back(std::move(*results[i]));
    } else {
      out.failures[view.items[i].item_id] = errors[i];
    }
  }
  std::sort(out.decompositions.begin(), out.decompositions.end(),
            [](const Decomposition& a, const Decomposition& b) { return a.parent_id < b.parent_id; });
  out.backend_calls = backend.calls() - calls_before;
  out.cache_hits = hits.load();
  if (!view.items.empty() && out.decompositions.empty()) {
    throw Error(fmt::format("decomposition failed for all {} documents; first error: {}", view.items.size(),
                            out.failures.begin()->second));
  }
  return out;
}

CorpusView generations_view(const std::vector<Decomposition>& decompositions) {
  CorpusView v{ViewKind::generations, {}};
  for (const auto& d : decompositions) {
    for (std::size_t g = 0; g < d.generations.size(); ++g) {
      v.items.push_back({fmt::format("{}#g{}", d.parent_id, g), d.generations[g], d.parent_id});
    }
  }
  return v;
}

void write_decompositions(const std::filesystem::path& path, const std::vector<Decomposition>& decompositions) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& d : decompositions) {
    out << json{{"parent_id", d.parent_id}, {"generations", d.generations}, {"request_fingerprint", d.request_fingerprint}}.dump()
        << '\n';
  }
}

std::vector<Decomposition> read_decompositions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<Decomposition> out;
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    const json rec = json::parse(line);
    out.push_back({rec.at("parent_id").get<std::string>(), rec.at("generations").get<std::vector<std::string>>(),
                   rec.at("request_fingerprint").get<std::string>()});
  }
  return out;
}

}  // namespace infdecomp
