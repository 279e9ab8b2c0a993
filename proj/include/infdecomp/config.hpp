#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "infdecomp/cluster.hpp"
#include "infdecomp/embedder.hpp"
#include "infdecomp/simeval.hpp"
#include "infdecomp/topics.hpp"

namespace infdecomp {

struct ProviderSettings {
  std::string kind = "mock";  // mock | http
  std::string url;
  std::string token_env;  // name of the environment variable holding the token
  std::string model = "mock";
  int timeout_seconds = 60;
  int max_attempts = 4;
};

struct StsSource {
  std::string name;
  StsTask task = StsTask::similarity;
  std::string path;  // as written in the config
};

// Paths are kept exactly as written; resolve() anchors them at the config
// file's directory.
struct RunConfig {
  std::filesystem::path base_dir;

  std::uint64_t seed = 0;
  std::string out_dir = "out";
  std::string cache_dir = "cache";

  ProviderSettings generation;
  double temperature = 0.7;
  int max_tokens = 256;
  int max_in_flight = 4;

  ProviderSettings embedding;
  int embedding_dim = 256;
  int batch_size = 64;
  GenerationAggregate aggregate = GenerationAggregate::mean;

  std::string templates = "templates.json";
  std::string corpus;
  std::string corpus_template = "fda_propositions";
  std::string corpus_exemplars;
  int exemplars_per_prompt = 6;

  std::vector<int> k_grid = {15, 25, 50};
  int packets_per_cluster = 2;
  int kmeans_max_iter = 300;
  double kmeans_tol = 1e-6;

  std::vector<StsSource> sts_datasets;
  std::string sts_template = "sts_paraphrase";
  std::string sts_exemplars;
  int sts_exemplars_per_prompt = 0;

  std::string tweets;
  TokenizerOptions tokenizer;
  LdaOptions lda;
  std::string topic_selection;
  double theta_threshold = 0.5;
  int tweets_per_topic = 5;

  std::string votes;
  std::string legislators;
  double percentile = 10.0;
  std::string tweet_template = "legislative_claims";
  std::string tweet_exemplars;
  bool standardize = false;

  std::filesystem::path resolve(const std::string& p) const;
  std::filesystem::path out_path() const { return resolve(out_dir); }
  std::filesystem::path cache_path() const { return resolve(cache_dir); }

  bool has_sts() const { return !sts_datasets.empty(); }
  bool has_legislative() const { return !tweets.empty(); }

  nlohmann::json to_json() const;
  // SHA-256 of the canonical JSON form.
  std::string hash() const;
};

struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> provider;
  std::optional<std::string> out_dir;
};

// Reads an INI file. Unknown sections or keys and malformed values raise a
// ConfigError listing every offending "section.key".
RunConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {});

enum class Stage { decompose, embed, cluster, sts, topics, covote };

std::string_view to_string(Stage s);

// Checks that every field a stage needs is set and every referenced file
// exists. Throws ConfigError naming each failing field.
void validate(const RunConfig& config, const std::vector<Stage>& stages);

}  // namespace infdecomp
