#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "infdecomp/corpus.hpp"
#include "infdecomp/http.hpp"

namespace infdecomp {

inline constexpr std::string_view kInputSlot = "<input>";
inline constexpr std::string_view kOutputSlot = "<output>";

struct PromptTemplate {
  std::string template_id;
  std::string instruction;
  std::string exemplar_format;  // "<input>"/"<output>" placeholders; may be empty for zero-shot templates
  std::string separator = "===";

  // Throws PromptError when the placeholder contract is violated.
  void validate() const;
};

struct Exemplar {
  std::string exemplar_id;
  std::string input;
  std::vector<std::string> outputs;

  void validate() const;
};

struct SamplingParams {
  double temperature = 0.7;
  int max_tokens = 256;
};

struct GenerationRequest {
  std::string template_id;
  std::vector<std::string> exemplar_ids;
  std::string model_id;
  SamplingParams sampling;
  std::string input_text;
  std::string prompt;  // rendered from the fields above; not part of the fingerprint
};

struct Decomposition {
  std::string parent_id;
  std::vector<std::string> generations;
  std::string request_fingerprint;

  bool operator==(const Decomposition&) const = default;
};

std::vector<PromptTemplate> load_templates(const std::filesystem::path& path);
std::vector<Exemplar> load_exemplars(const std::filesystem::path& path);
const PromptTemplate& find_template(const std::vector<PromptTemplate>& templates, std::string_view id);

struct PromptDraw {
  std::string prompt;
  std::vector<std::string> exemplar_ids;  // in sampled order
};

// Samples k exemplars (seeded, without replacement) and renders
//   instruction / sep / exemplar_1 / sep / ... / sep / input block
// where the final block leaves the output slot empty.
PromptDraw draw_prompt(const PromptTemplate& tpl, const std::vector<Exemplar>& exemplars, std::size_t k,
                       std::uint64_t seed, std::string_view input_text);
std::string build_prompt(const PromptTemplate& tpl, const std::vector<Exemplar>& exemplars, std::size_t k,
                         std::uint64_t seed, std::string_view input_text);

// SHA-256 over a canonical encoding of template, exemplar ids, model,
// sampling parameters and the normalized input text.
std::string request_fingerprint(const GenerationRequest& req);

class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;
  virtual std::string id() const = 0;

  std::string complete(const GenerationRequest& req) {
    ++calls_;
    return do_complete(req);
  }
  std::size_t calls() const { return calls_.load(); }

 protected:
  virtual std::string do_complete(const GenerationRequest& req) = 0;

 private:
  std::atomic<std::size_t> calls_{0};
};

// Offline stand-in: splits the input on sentence boundaries and on the
// connectives "and", "because", "but", then lowercases and re-capitalizes
// each clause. A pure function of the request's input text.
class MockBackend : public GenerationBackend {
 public:
  std::string id() const override { return "mock"; }
  static std::string decompose_text(std::string_view input);

 protected:
  std::string do_complete(const GenerationRequest& req) override { return decompose_text(req.input_text); }
};

// POSTs {model, prompt, temperature, max_tokens} and expects {text}.
class HttpBackend : public GenerationBackend {
 public:
  HttpBackend(HttpEndpoint endpoint, RetryPolicy retry) : endpoint_(std::move(endpoint)), retry_(retry) {}
  std::string id() const override { return "http:" + endpoint_.url; }

 protected:
  std::string do_complete(const GenerationRequest& req) override;

 private:
  HttpEndpoint endpoint_;
  RetryPolicy retry_;
};

// Returns the backend's completion verbatim. Throws EmptyCompletionError when
// the completion is blank; transport failures propagate as TransportError.
std::string generate(const GenerationRequest& req, GenerationBackend& backend);

// Newline-split, list markers stripped, trimmed, empties dropped and
// case-insensitive duplicates removed (first occurrence kept).
std::vector<std::string> parse_generations(std::string_view raw);

// Same dedup rule applied to an already-parsed list.
std::vector<std::string> dedup_generations(const std::vector<std::string>& items);

// Append-only JSONL cache {fingerprint, raw, generations, timestamp}; the
// last entry for a fingerprint wins. Unreadable lines are skipped and
// reported through warnings(). An empty path keeps the cache in memory.
class GenerationCache {
 public:
  struct Entry {
    std::string raw;
    std::vector<std::string> generations;
  };

  explicit GenerationCache(std::filesystem::path path = {});

  std::optional<Entry> lookup(const std::string& fingerprint) const;
  void store(const std::string& fingerprint, const Entry& entry);
  std::size_t size() const;
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, Entry> entries_;
  std::vector<std::string> warnings_;
};

struct PromptConfig {
  PromptTemplate tpl;
  std::vector<Exemplar> exemplars;
  std::size_t k = 6;
  std::uint64_t seed = 0;
};

struct DecomposeOptions {
  std::string model_id = "mock";
  SamplingParams sampling;
  std::size_t max_in_flight = 4;
};

struct DecomposeResult {
  std::vector<Decomposition> decompositions;        // sorted by parent_id
  std::map<std::string, std::string> failures;      // doc_id -> error message
  std::size_t backend_calls = 0;
  std::size_t cache_hits = 0;
  std::size_t total_generations = 0;

  double mean_generations() const {
    return decompositions.empty() ? 0.0
                                  : static_cast<double>(total_generations) / static_cast<double>(decompositions.size());
  }
};

// One Decomposition per item of a comments view. Each prompt configuration
// contributes a request per document (exemplars drawn with a per-document
// seed); parsed generations from all configurations are unioned and
// deduplicated. Per-document failures are collected; throws only when every
// document fails.
DecomposeResult decompose_corpus(const CorpusView& view, const std::vector<PromptConfig>& configs,
                                 const DecomposeOptions& options, GenerationBackend& backend,
                                 GenerationCache& cache);

// Generation view (item ids "<parent>#g<n>") built from decompositions.
CorpusView generations_view(const std::vector<Decomposition>& decompositions);

void write_decompositions(const std::filesystem::path& path, const std::vector<Decomposition>& decompositions);
std::vector<Decomposition> read_decompositions(const std::filesystem::path& path);

}  // namespace infdecomp
