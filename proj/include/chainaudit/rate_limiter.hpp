#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <mutex>
#include <string>

namespace chainaudit {

/// Token bucket per key (one key per remote host).
class RateLimiter {
 public:
  using Clock = std::function<std::chrono::steady_clock::time_point()>;
  using Sleep = std::function<void(std::chrono::nanoseconds)>;

  RateLimiter(double tokens_per_second, double burst, Clock clock = std::chrono::steady_clock::now,
              Sleep sleep = nullptr);

  /// Takes one token for `key` and returns how long the caller has to wait
  /// before using it. Never blocks.
  std::chrono::nanoseconds reserve(const std::string& key);
  /// reserve() followed by sleeping the returned delay.
  void acquire(const std::string& key);

 private:
  struct Bucket {
    double tokens;
    std::chrono::steady_clock::time_point updated;
  };

  double rate_;
  double burst_;
  Clock clock_;
  Sleep sleep_;
  std::mutex mu_;
  std::map<std::string, Bucket> buckets_;
};

}  // namespace chainaudit
