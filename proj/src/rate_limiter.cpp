#include "chainaudit/rate_limiter.hpp"

#include <algorithm>
#include <stdexcept>
#include <thread>

namespace chainaudit {

RateLimiter::RateLimiter(double tokens_per_second, double burst, Clock clock, Sleep sleep)
    : rate_(tokens_per_second), burst_(std::max(1.0, burst)), clock_(std::move(clock)), sleep_(std::move(sleep)) {
  if (!(rate_ > 0)) throw std::invalid_argument("rate must be positive");
  if (!sleep_) sleep_ = [](std::chrono::nanoseconds d) { std::this_thread::sleep_for(d); };
}

std::chrono::nanoseconds RateLimiter::reserve(const std::string& key) {
  std::lock_guard lock(mu_);
  const auto now = clock_();
  auto [it, inserted] = buckets_.try_emplace(key, Bucket{burst_, now});
  Bucket& b = it->second;
  if (now > b.updated) {
    const double elapsed = std::chrono::duration<double>(now - b.updated).count();
    b.tokens = std::min(burst_, b.tokens + elapsed * rate_);
    b.updated = now;
  }
  // Tokens may go negative: later callers queue behind earlier reservations.
  b.tokens -= 1.0;
  if (b.tokens >= 0) return std::chrono::nanoseconds{0};
  return std::chrono::nanoseconds(static_cast<std::int64_t>(-b.tokens / rate_ * 1e9));
}

void RateLimiter::acquire(const std::string& key) {
  auto wait = reserve(key);
  if (wait.count() > 0) sleep_(wait);
}

}  // namespace chainaudit
