#include "a2l/backend/clock.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <thread>

namespace a2l::backend {

std::string format_utc(long long unix_seconds) {
  const std::time_t t = static_cast<std::time_t>(unix_seconds);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

double SteadyClock::now() {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count();
}

void SteadyClock::sleep_for(double seconds) {
  if (seconds > 0) std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
}

std::string SteadyClock::wall_timestamp() {
  using namespace std::chrono;
  return format_utc(duration_cast<seconds>(system_clock::now().time_since_epoch()).count());
}

VirtualClock::VirtualClock(double start, long long epoch_unix) : t_(start), epoch_(epoch_unix) {}

double VirtualClock::now() {
  std::lock_guard lock(mu_);
  return t_;
}

void VirtualClock::sleep_for(double seconds) {
  if (seconds <= 0) return;
  std::lock_guard lock(mu_);
  t_ += seconds;
  slept_ += seconds;
}

std::string VirtualClock::wall_timestamp() {
  std::lock_guard lock(mu_);
  return format_utc(epoch_ + static_cast<long long>(std::floor(t_)));
}

double VirtualClock::total_slept() const {
  std::lock_guard lock(mu_);
  return slept_;
}

}  // namespace a2l::backend
