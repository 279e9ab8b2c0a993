#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>

#include "infdecomp/config.hpp"
#include "infdecomp/error.hpp"
#include "infdecomp/pipeline.hpp"
#include "json.hpp"
#include "test_util.hpp"

using namespace infdecomp;
namespace fs = std::filesystem;

namespace {

std::string config_error(const fs::path& path, const ConfigOverrides& o = {}) {
  try {
    load_config(path, o);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

int cli(const std::string& args) {
  const std::string cmd = std::string("\"") + INFDECOMP_CLI + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config errors name every offending field") {
  testutil::TempDir dir("cfg");
  testutil::write_file(dir / "c.ini",
                       "[run]\nseed = abc\ncolour = red\n[cluster]\nk_grid = 15, x\n[extra]\nfoo = 1\n"
                       "[embedding]\naggregate = median\n");
  const std::string msg = config_error(dir / "c.ini");
  CHECK(msg.find("run.seed") != std::string::npos);
  CHECK(msg.find("run.colour: unknown key") != std::string::npos);
  CHECK(msg.find("cluster.k_grid") != std::string::npos);
  CHECK(msg.find("[extra]: unknown section") != std::string::npos);
  CHECK(msg.find("embedding.aggregate") != std::string::npos);
  CHECK(config_error(dir / "absent.ini").find("--config") != std::string::npos);
}

TEST_CASE("missing corpus is a validation error naming the field") {
  testutil::TempDir dir("cfg");
  testutil::write_file(dir / "c.ini", "[decompose]\ncorpus = nowhere.jsonl\n");
  const auto cfg = load_config(dir / "c.ini");
  std::string msg;
  try {
    validate(cfg, {Stage::decompose});
  } catch (const ConfigError& e) {
    msg = e.what();
  }
  CHECK(msg.find("decompose.corpus: file not found") != std::string::npos);
  CHECK(msg.find("decompose.exemplars") != std::string::npos);
  // cluster alone needs no corpus
  CHECK_NOTHROW(validate(cfg, {Stage::cluster}));
}

TEST_CASE("overrides and config hash") {
  testutil::TempDir dir("cfg");
  testutil::write_file(dir / "c.ini", "[run]\nseed = 3\n[generation]\nprovider = http\nurl = http://x\n");
  const auto base = load_config(dir / "c.ini");
  CHECK(base.seed == 3);
  CHECK(base.generation.kind == "http");
  CHECK(base.embedding.kind == "mock");
  CHECK(base.k_grid == std::vector<int>{15, 25, 50});
  const auto over = load_config(dir / "c.ini", {9, std::string("mock"), std::string("elsewhere")});
  CHECK(over.seed == 9);
  CHECK(over.generation.kind == "mock");
  CHECK(over.out_path() == dir.path() / "elsewhere");
  CHECK(base.hash() != over.hash());
  CHECK(base.hash() == load_config(dir / "c.ini").hash());
  CHECK(config_error(dir / "c.ini", {std::nullopt, std::string("carrier"), std::nullopt}).find("--provider") !=
        std::string::npos);
}

TEST_CASE("stages write manifests and a nine-row metric table") {
  testutil::TempDir dir("pipe");
  write_demo_data(dir.path(), INFDECOMP_DATA_DIR);
  const auto cfg = load_config(dir / "config.ini");
  validate(cfg, PipelineRunner::all_stages(cfg));
  PipelineRunner runner(cfg, "test");
  runner.run(Stage::decompose);
  runner.run(Stage::embed);
  runner.run(Stage::cluster);

  const auto out = cfg.out_path();
  const std::string metrics = testutil::read_file(out / "cluster" / "metrics.csv");
  CHECK(std::count(metrics.begin(), metrics.end(), '\n') == 10);
  const auto manifest = nlohmann::json::parse(testutil::read_file(out / "cluster" / "manifest.json"));
  CHECK(manifest["stage"] == "cluster");
  CHECK(manifest["config_hash"] == cfg.hash());
  CHECK(manifest["command"] == "test");
  CHECK(manifest["inputs"].size() == 3);
  CHECK(manifest["inputs"][0]["sha256"].get<std::string>().size() == 64);
  CHECK(manifest["inputs"][0]["path"] == "embed/comments.jsonl");
  CHECK(runner.stats().at("decompose").backend_calls == 150);

  SUBCASE("a failing stage keeps the previous artifacts") {
    auto bad = cfg;
    bad.k_grid = {400};
    PipelineRunner again(bad, "test");
    CHECK_THROWS_AS(again.run(Stage::cluster), ClusterError);
    CHECK(testutil::read_file(out / "cluster" / "metrics.csv") == metrics);
    CHECK_FALSE(fs::exists(out / ".cluster.partial"));
  }
  SUBCASE("warm caches make no provider calls") {
    PipelineRunner again(cfg, "test");
    again.run(Stage::decompose);
    again.run(Stage::embed);
    CHECK(again.stats().at("decompose").backend_calls == 0);
    CHECK(again.stats().at("decompose").generation_cache_hits == 150);
    CHECK(again.stats().at("embed").embedding_calls == 0);
  }
}

TEST_CASE("cli exit codes") {
  testutil::TempDir dir("cli");
  CHECK(cli("cluster --config \"" + (dir / "absent.ini").string() + "\"") == 2);
  CHECK(cli("cluster") == 2);
  CHECK(cli("--help") == 0);
  CHECK(cli("frobnicate") == 2);
  testutil::write_file(dir / "c.ini", "[decompose]\ncorpus = nowhere.jsonl\n");
  CHECK(cli("decompose --config \"" + (dir / "c.ini").string() + "\"") == 2);
  // embed without a prior decompose run is a stage failure
  testutil::write_file(dir / "e.ini", "[run]\nseed = 1\n");
  CHECK(cli("embed --config \"" + (dir / "e.ini").string() + "\"") == 3);
}
