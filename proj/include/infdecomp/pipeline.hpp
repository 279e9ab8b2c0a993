#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "infdecomp/config.hpp"
#include "infdecomp/decomposer.hpp"
#include "infdecomp/embedder.hpp"

namespace infdecomp {

struct StageStats {
  std::size_t backend_calls = 0;
  std::size_t generation_cache_hits = 0;
  std::size_t embedding_calls = 0;
};

// Providers, caches and bookkeeping shared by the stages of one invocation.
class PipelineRunner {
 public:
  // `command` is recorded in every manifest so a stage can be re-run.
  PipelineRunner(RunConfig config, std::string command);
  ~PipelineRunner();

  void run(Stage stage);
  // decompose, embed, cluster, then sts and topics/covote when configured.
  void run_all();
  static std::vector<Stage> all_stages(const RunConfig& config);

  const std::map<std::string, StageStats>& stats() const { return stats_; }
  // run_stats.json under the output directory; kept apart from the numeric
  // outputs because call counts differ between cold and warm runs.
  void write_stats() const;

  const RunConfig& config() const { return config_; }

 private:
  void decompose();
  void embed();
  void cluster();
  void sts();
  void topics();
  void covote();

  std::filesystem::path stage_dir(Stage s) const;
  void write_manifest(Stage s, const std::vector<std::filesystem::path>& inputs,
                      const std::vector<std::string>& outputs) const;
  StageStats& begin(Stage s);
  void finish(Stage s, std::size_t calls_before, std::size_t emb_before);

  RunConfig config_;
  std::string command_;
  std::unique_ptr<GenerationBackend> backend_;
  std::unique_ptr<EmbeddingProvider> provider_;
  std::unique_ptr<GenerationCache> generation_cache_;
  std::unique_ptr<EmbeddingCache> embedding_cache_;
  std::map<std::string, StageStats> stats_;
};

// Writes a small synthetic workspace (comments, STS pairs, tweets, votes,
// legislators, topic labels, templates, exemplars) plus config.ini.
void write_demo_data(const std::filesystem::path& dir, const std::filesystem::path& bundled_data_dir);

}  // namespace infdecomp
