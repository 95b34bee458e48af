#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>

#include "chainaudit/rate_limiter.hpp"
#include "chainaudit/transport.hpp"

namespace chainaudit {

struct HttpTransportOptions {
  std::chrono::seconds connect_timeout{10};
  std::chrono::seconds read_timeout{20};
  std::string user_agent = "chainaudit";
  double requests_per_second = 4.0;  // per host
  double burst = 4.0;
  /// IPv4 resolver address for NS queries; the system resolver otherwise.
  std::optional<std::string> dns_server;
  /// Honour https_proxy / HTTPS_PROXY / http_proxy / HTTP_PROXY.
  bool use_proxy_env = true;
};

/// HTTPS over cpp-httplib with OpenSSL, NS lookups over libresolv. Redirects
/// are never followed automatically. When the CHAINAUDIT_FORBID_NETWORK
/// environment variable is set, any use aborts the process.
class HttpTransport final : public Transport {
 public:
  explicit HttpTransport(HttpTransportOptions options = {});
  ~HttpTransport() override;

  HttpResponse get(const HttpRequest& request) override;
  DnsAnswer query_ns(const std::string& domain) override;

 private:
  HttpTransportOptions options_;
  RateLimiter limiter_;
};

}  // namespace chainaudit
