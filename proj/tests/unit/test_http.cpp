#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "doctest.h"

#include <atomic>
#include <thread>

#include "infdecomp/decomposer.hpp"
#include "infdecomp/embedder.hpp"
#include "infdecomp/error.hpp"
#include "infdecomp/http.hpp"

using namespace infdecomp;

namespace {

// Local server on an ephemeral port, stopped on destruction.
class LocalServer {
 public:
  LocalServer() = default;
  httplib::Server& server() { return server_; }

  int start() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port_;
  }
  ~LocalServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }
  std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

RetryPolicy fast_policy(int attempts = 4) {
  RetryPolicy p;
  p.max_attempts = attempts;
  p.initial_backoff = std::chrono::milliseconds(1);
  p.max_backoff = std::chrono::milliseconds(5);
  return p;
}

}  // namespace

TEST_CASE("backoff grows geometrically and is capped") {
  RetryPolicy p;
  CHECK(p.backoff(1).count() == 200);
  CHECK(p.backoff(2).count() == 400);
  CHECK(p.backoff(3).count() == 800);
  CHECK(p.backoff(10).count() == 5000);
}

TEST_CASE("500 twice then 200 succeeds after retries") {
  LocalServer s;
  std::atomic<int> hits{0};
  std::string seen_auth;
  nlohmann::json seen_body;
  s.server().Post("/v1/generate", [&](const httplib::Request& req, httplib::Response& res) {
    if (++hits <= 2) {
      res.status = 500;
      return;
    }
    seen_auth = req.get_header_value("Authorization");
    seen_body = nlohmann::json::parse(req.body);
    res.set_content(R"({"text":"- One.\n- Two."})", "application/json");
  });
  s.start();

  HttpBackend backend({s.url("/v1/generate"), "secret", std::chrono::seconds(5)}, fast_policy());
  GenerationRequest req{"t", {}, "model-x", {0.2, 64}, "Input.", "PROMPT"};
  const std::string raw = generate(req, backend);
  CHECK(raw == "- One.\n- Two.");
  CHECK(hits == 3);
  CHECK(seen_auth == "Bearer secret");
  CHECK(seen_body["model"] == "model-x");
  CHECK(seen_body["prompt"] == "PROMPT");
  CHECK(seen_body["max_tokens"] == 64);
  CHECK(seen_body["temperature"].get<double>() == doctest::Approx(0.2));
}

TEST_CASE("server down gives a transport error after max attempts") {
  int port = 0;
  {
    LocalServer s;
    port = s.start();
  }
  int attempts = 0;
  HttpEndpoint ep{"http://127.0.0.1:" + std::to_string(port) + "/x", "", std::chrono::seconds(1)};
  CHECK_THROWS_AS(post_json(ep, {{"a", 1}}, fast_policy(3), &attempts), TransportError);
  CHECK(attempts == 3);
}

TEST_CASE("client errors are not retried") {
  LocalServer s;
  std::atomic<int> hits{0};
  s.server().Post("/x", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 400;
  });
  s.start();
  int attempts = 0;
  CHECK_THROWS_AS(post_json({s.url("/x"), "", std::chrono::seconds(5)}, {}, fast_policy(), &attempts), TransportError);
  CHECK(hits == 1);
  CHECK(attempts == 1);
}

TEST_CASE("empty completion from http backend") {
  LocalServer s;
  s.server().Post("/g", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"text":"   "})", "application/json");
  });
  s.start();
  HttpBackend backend({s.url("/g"), "", std::chrono::seconds(5)}, fast_policy());
  GenerationRequest req{"t", {}, "m", {}, "x", "p"};
  CHECK_THROWS_AS(generate(req, backend), EmptyCompletionError);
}

TEST_CASE("http embedding provider pins the dimension") {
  LocalServer s;
  std::atomic<int> calls{0};
  s.server().Post("/embed", [&](const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    const std::size_t dim = ++calls == 1 ? 3 : 4;
    nlohmann::json vectors = nlohmann::json::array();
    for (std::size_t i = 0; i < body["texts"].size(); ++i) vectors.push_back(std::vector<double>(dim, 1.0));
    res.set_content(nlohmann::json{{"vectors", vectors}}.dump(), "application/json");
  });
  s.start();
  HttpEmbeddingProvider provider({s.url("/embed"), "", std::chrono::seconds(5)}, fast_policy(), "enc");
  EmbeddingCache cache;
  const auto first = embed_batch({"a", "b"}, provider, cache);
  CHECK(first.size() == 2);
  CHECK(first[0].dim() == 3);
  CHECK(first[0].provider_id == "http:enc");
  CHECK_THROWS_AS(embed_batch({"c"}, provider, cache), EmbeddingError);
}

TEST_CASE("embedding transport failure names the batch") {
  LocalServer s;
  s.server().Post("/embed", [](const httplib::Request&, httplib::Response& res) { res.status = 503; });
  s.start();
  HttpEmbeddingProvider provider({s.url("/embed"), "", std::chrono::seconds(5)}, fast_policy(2));
  EmbeddingCache cache;
  try {
    embed_batch({"a", "b", "c"}, provider, cache, {2});
    FAIL("expected TransportError");
  } catch (const TransportError& e) {
    CHECK(std::string(e.what()).find("batch") != std::string::npos);
  }
}
