#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "infdecomp/http.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <fmt/format.h>

#include "infdecomp/error.hpp"

namespace infdecomp {
namespace {

struct SplitUrl {
  std::string origin;
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw TransportError("endpoint URL lacks a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

bool is_transient(int status) { return status == 429 || status >= 500; }

}  // namespace

std::chrono::milliseconds RetryPolicy::backoff(int retry) const {
  const double scaled = static_cast<double>(initial_backoff.count()) * std::pow(multiplier, retry - 1);
  const auto capped = std::min(scaled, static_cast<double>(max_backoff.count()));
  return std::chrono::milliseconds(static_cast<long long>(capped));
}

nlohmann::json post_json(const HttpEndpoint& endpoint, const nlohmann::json& body,
                         const RetryPolicy& policy, int* attempts) {
  const auto [origin, path] = split_url(endpoint.url);
  httplib::Client client(origin);
  client.set_connection_timeout(endpoint.timeout);
  client.set_read_timeout(endpoint.timeout);
  client.set_write_timeout(endpoint.timeout);
  httplib::Headers headers;
  if (!endpoint.token.empty()) headers.emplace("Authorization", "Bearer " + endpoint.token);

  const std::string payload = body.dump();
  const int max_attempts = std::max(1, policy.max_attempts);
  std::string last_failure;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    if (attempts) *attempts = attempt;
    if (attempt > 1) std::this_thread::sleep_for(policy.backoff(attempt - 1));
    auto res = client.Post(path, headers, payload, "application/json");
    if (!res) {
      last_failure = "connection error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 200 && res->status < 300) {
      try {
        return nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::parse_error& e) {
        throw TransportError(fmt::format("{}: response is not JSON: {}", endpoint.url, e.what()));
      }
    }
    last_failure = fmt::format("HTTP {}", res->status);
    if (!is_transient(res->status)) {
      throw TransportError(fmt::format("{}: {} (not retried)", endpoint.url, last_failure));
    }
  }
  throw TransportError(fmt::format("{}: giving up after {} attempts, last failure: {}", endpoint.url,
                                   max_attempts, last_failure));
}

std::string token_from_env(const std::string& var) {
  if (var.empty()) return {};
  const char* v = std::getenv(var.c_str());
  return v ? std::string(v) : std::string();
}

}  // namespace infdecomp
