#pragma once

#include <memory>
#include <mutex>
#include <string>

namespace a2l::backend {

/// Time source seam. Everything that waits or measures goes through it so
/// backoff, rate limiting and latency logging can run on virtual time.
class Clock {
 public:
  virtual ~Clock() = default;
  /// Monotonic seconds.
  virtual double now() = 0;
  virtual void sleep_for(double seconds) = 0;
  /// UTC timestamp, ISO-8601 with a trailing Z.
  virtual std::string wall_timestamp() = 0;
};

class SteadyClock final : public Clock {
 public:
  double now() override;
  void sleep_for(double seconds) override;
  std::string wall_timestamp() override;
};

/// Deterministic clock: sleeping advances time instantly.
class VirtualClock final : public Clock {
 public:
  /// `epoch_unix` anchors wall_timestamp(); defaults to 2025-01-01T00:00:00Z.
  explicit VirtualClock(double start = 0.0, long long epoch_unix = 1735689600);

  double now() override;
  void sleep_for(double seconds) override;
  std::string wall_timestamp() override;

  void advance(double seconds) { sleep_for(seconds); }
  double total_slept() const;

 private:
  mutable std::mutex mu_;
  double t_;
  double slept_ = 0.0;
  long long epoch_;
};

std::string format_utc(long long unix_seconds);

}  // namespace a2l::backend
