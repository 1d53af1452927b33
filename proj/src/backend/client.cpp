#include "a2l/backend/client.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace a2l::backend {

namespace {
constexpr double kWindowSeconds = 60.0;
}

void BackendConfig::validate() const {
  if (!(timeout_s > 0)) throw Error(ErrorKind::ConfigError, "timeout must be positive");
  if (max_retries < 0) throw Error(ErrorKind::ConfigError, "max_retries must be >= 0");
  if (requests_per_minute < 1) throw Error(ErrorKind::ConfigError, "requests_per_minute must be >= 1");
  if (!(backoff_base_s >= 0) || backoff_max_s < backoff_base_s) {
    throw Error(ErrorKind::ConfigError, "backoff bounds must satisfy 0 <= base <= max");
  }
}

bool is_transient(ErrorKind kind) {
  return kind == ErrorKind::Timeout || kind == ErrorKind::RateLimited ||
         kind == ErrorKind::ServerError;
}

double backoff_delay(const BackendConfig& cfg, int retry_index) {
  const double d = cfg.backoff_base_s * std::pow(2.0, retry_index);
  return std::min(d, cfg.backoff_max_s);
}

RateLimiter::RateLimiter(int per_minute, std::shared_ptr<Clock> clock)
    : cap_(per_minute), clock_(std::move(clock)) {}

void RateLimiter::acquire() {
  std::lock_guard lock(mu_);
  for (;;) {
    const double now = clock_->now();
    while (!window_.empty() && window_.front() <= now - kWindowSeconds) window_.pop_front();
    if (static_cast<int>(window_.size()) < cap_) {
      window_.push_back(now);
      history_.push_back(now);
      return;
    }
    clock_->sleep_for(window_.front() + kWindowSeconds - now);
  }
}

std::vector<double> RateLimiter::issued() const {
  std::lock_guard lock(mu_);
  return history_;
}

BackendClient::BackendClient(BackendConfig cfg, std::shared_ptr<Transport> transport,
                             std::shared_ptr<Clock> clock)
    : cfg_(std::move(cfg)),
      transport_(std::move(transport)),
      clock_(clock ? std::move(clock) : std::make_shared<SteadyClock>()),
      limiter_(cfg_.requests_per_minute, clock_) {
  cfg_.validate();
  if (!transport_) throw Error(ErrorKind::ConfigError, "backend client needs a transport");
}

template <typename Fn>
auto BackendClient::with_retries(Fn&& fn) -> decltype(fn(1)) {
  for (int attempt = 0;; ++attempt) {
    limiter_.acquire();
    try {
      return fn(attempt + 1);
    } catch (const Error& e) {
      if (!is_transient(e.kind()) || attempt >= cfg_.max_retries) throw;
      const double delay = backoff_delay(cfg_, attempt);
      {
        std::lock_guard lock(history_mu_);
        backoff_history_.push_back(delay);
      }
      clock_->sleep_for(delay);
    }
  }
}

ChatResponse BackendClient::complete(ChatRequest req) {
  if (req.model.empty()) req.model = cfg_.model;
  req.validate();
  if (!cfg_.caps.images) {
    for (const auto& m : req.messages) {
      if (m.image_count() > 0) {
        throw Error(ErrorKind::CapabilityMissing, "backend has no image capability");
      }
    }
  }
  if (req.want_logprobs && !cfg_.caps.logprobs) {
    throw Error(ErrorKind::CapabilityMissing, "backend has no logprobs capability");
  }
  return with_retries([&](int attempts) {
    ChatResponse r = transport_->send(req);
    r.attempts = attempts;
    return r;
  });
}

CompletionScore BackendClient::score_completion(const std::vector<Message>& prompt,
                                                const std::string& completion) {
  if (!cfg_.caps.logprobs) {
    throw Error(ErrorKind::CapabilityMissing, "backend has no logprobs capability");
  }
  if (completion.empty()) throw Error(ErrorKind::Precondition, "nothing to score");
  ScoreRequest req{cfg_.model, prompt, completion};
  const ScoreResponse r = with_retries([&](int) { return transport_->score(req); });
  if (r.logprobs.empty()) throw Error(ErrorKind::ProtocolError, "backend returned no logprobs");
  CompletionScore out;
  out.logprobs = r.logprobs;
  out.mean = std::accumulate(r.logprobs.begin(), r.logprobs.end(), 0.0) /
             static_cast<double>(r.logprobs.size());
  return out;
}

std::vector<double> BackendClient::backoff_history() const {
  std::lock_guard lock(history_mu_);
  return backoff_history_;
}

}  // namespace a2l::backend
