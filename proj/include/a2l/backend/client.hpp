#pragma once

#include <deque>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "a2l/backend/chat.hpp"
#include "a2l/backend/clock.hpp"
#include "a2l/errors.hpp"

namespace a2l::backend {

enum class EndpointFamily { Chat, Completions };

struct BackendConfig {
  std::string endpoint;  // full URL, e.g. https://host/v1/chat/completions
  std::string model;
  EndpointFamily family = EndpointFamily::Chat;
  std::string api_key_env = "A2L_API_KEY";
  double timeout_s = 60.0;
  int max_retries = 3;
  int requests_per_minute = 60;
  double backoff_base_s = 1.0;
  double backoff_max_s = 30.0;
  Capabilities caps;

  void validate() const;
};

/// Wire adapter: sends one request, no retries. Throws a2l::Error with kinds
/// Timeout / RateLimited / ServerError (transient) or Unauthorized /
/// ProtocolError / CapabilityMissing (permanent).
class Transport {
 public:
  virtual ~Transport() = default;
  virtual ChatResponse send(const ChatRequest& req) = 0;
  virtual ScoreResponse score(const ScoreRequest& req) = 0;
};

bool is_transient(ErrorKind kind);

/// Delay before retry `retry_index` (0-based): base * 2^k capped at max.
double backoff_delay(const BackendConfig& cfg, int retry_index);

/// Sliding 60 s window cap on issued requests.
class RateLimiter {
 public:
  RateLimiter(int per_minute, std::shared_ptr<Clock> clock);
  /// Blocks (through the clock) until a request may be issued, then records it.
  void acquire();
  std::vector<double> issued() const;

 private:
  int cap_;
  std::shared_ptr<Clock> clock_;
  mutable std::mutex mu_;
  std::deque<double> window_;
  std::vector<double> history_;
};

/// Thread-safe handle over one transport with retries and rate limiting.
class BackendClient {
 public:
  BackendClient(BackendConfig cfg, std::shared_ptr<Transport> transport,
                std::shared_ptr<Clock> clock);

  ChatResponse complete(ChatRequest req);

  /// Per-token log-probabilities of a forced completion and their mean.
  CompletionScore score_completion(const std::vector<Message>& prompt,
                                   const std::string& completion);

  const BackendConfig& config() const { return cfg_; }
  Clock& clock() { return *clock_; }
  std::shared_ptr<Clock> clock_ptr() const { return clock_; }
  const RateLimiter& limiter() const { return limiter_; }
  /// Delays slept between retries, in order, across all calls.
  std::vector<double> backoff_history() const;

 private:
  template <typename Fn>
  auto with_retries(Fn&& fn) -> decltype(fn(1));

  BackendConfig cfg_;
  std::shared_ptr<Transport> transport_;
  std::shared_ptr<Clock> clock_;
  RateLimiter limiter_;
  mutable std::mutex history_mu_;
  std::vector<double> backoff_history_;
};

}  // namespace a2l::backend
