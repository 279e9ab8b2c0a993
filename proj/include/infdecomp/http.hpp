#pragma once

#include <chrono>
#include <functional>
#include <string>

#include "json.hpp"

namespace infdecomp {

struct RetryPolicy {
  int max_attempts = 4;
  std::chrono::milliseconds initial_backoff{200};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{5000};

  // Delay before retry number `retry` (1-based).
  std::chrono::milliseconds backoff(int retry) const;
};

struct HttpEndpoint {
  std::string url;    // e.g. http://127.0.0.1:8080/v1/generate
  std::string token;  // sent as "Authorization: Bearer <token>" when non-empty
  std::chrono::seconds timeout{60};
};

// POSTs `body` as JSON and returns the parsed JSON response. Connection
// failures, 429 and 5xx are retried with exponential backoff until the policy
// is exhausted (TransportError); other non-2xx statuses fail immediately.
// `attempts` (optional) receives the number of requests made.
nlohmann::json post_json(const HttpEndpoint& endpoint, const nlohmann::json& body,
                         const RetryPolicy& policy, int* attempts = nullptr);

// Reads an API token from the named environment variable; empty when unset.
std::string token_from_env(const std::string& var);

}  // namespace infdecomp
