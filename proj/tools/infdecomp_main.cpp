#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "infdecomp/config.hpp"
#include "infdecomp/error.hpp"
#include "infdecomp/pipeline.hpp"

#ifndef INFDECOMP_DATA_DIR
#define INFDECOMP_DATA_DIR "data"
#endif

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitStage = 3;

std::string joined(int argc, char** argv) {
  std::string out = "infdecomp";
  for (int i = 1; i < argc; ++i) {
    out += ' ';
    out += argv[i];
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace infdecomp;

  CLI::App app{"Decomposition-augmented text representations: clustering, STS and co-voting analyses"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> provider;
  std::optional<std::string> out_dir;
  app.add_option("--config", config_path, "INI config file");
  app.add_option("--seed", seed, "override run.seed");
  app.add_option("--provider", provider, "override both providers")->check(CLI::IsMember({"mock", "http"}));
  app.add_option("--out", out_dir, "override run.out_dir");

  const std::vector<std::pair<std::string, std::string>> stage_cmds = {
      {"decompose", "decompose the comment corpus"},
      {"embed", "embed comments, sentences and generations"},
      {"cluster", "k-means over the K grid with intrinsic metrics"},
      {"sts", "baseline vs augmented similarity benchmark"},
      {"topics", "fit LDA on tweets and select top tweets"},
      {"covote", "co-voting mixed model with similarity covariates"},
      {"pipeline", "run every configured stage"}};
  for (const auto& [name, desc] : stage_cmds) app.add_subcommand(name, desc);

  std::string demo_dir;
  std::string data_dir = INFDECOMP_DATA_DIR;
  auto* demo = app.add_subcommand("demo-data", "write a synthetic workspace with config.ini");
  demo->add_option("dir", demo_dir, "target directory")->required();
  demo->add_option("--data", data_dir, "directory holding the bundled templates and exemplars");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  if (cmd == "demo-data") {
    try {
      write_demo_data(demo_dir, data_dir);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitStage;
    }
    std::cout << "wrote demo workspace to " << demo_dir << '\n';
    return 0;
  }

  RunConfig config;
  std::vector<Stage> stages;
  try {
    if (config_path.empty()) throw ConfigError("--config: required");
    config = load_config(config_path, {seed, provider, out_dir});
    if (cmd == "pipeline") {
      stages = PipelineRunner::all_stages(config);
    } else {
      for (Stage s : {Stage::decompose, Stage::embed, Stage::cluster, Stage::sts, Stage::topics, Stage::covote})
        if (to_string(s) == cmd) stages = {s};
    }
    validate(config, stages);
  } catch (const ConfigError& e) {
    std::cerr << "invalid config:\n" << e.what() << '\n';
    return kExitValidation;
  }

  try {
    PipelineRunner runner(config, joined(argc, argv));
    for (Stage s : stages) {
      std::cerr << "[" << to_string(s) << "] running\n";
      runner.run(s);
      const auto& st = runner.stats().at(std::string(to_string(s)));
      std::cerr << "[" << to_string(s) << "] done: " << st.backend_calls << " backend calls, "
                << st.embedding_calls << " embedding calls\n";
    }
    runner.write_stats();
  } catch (const std::exception& e) {
    std::cerr << "stage failed: " << e.what() << '\n';
    return kExitStage;
  }
  return 0;
}
