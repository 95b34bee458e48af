#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>

#include "chainaudit/transport.hpp"

namespace chainaudit {

/// In-memory transport replaying canned responses. Any URL or domain without
/// a canned answer raises Error{UnexpectedNetworkAccess}, which makes it the
/// enforcement point for offline runs.
///
/// JSON form:
///   {"http": {"<url>": {"status": 404, "headers": {...}, "body": "..." | {...},
///                       "timeout": true, "transport_error": true}},
///    "dns":  {"<domain>": {"status": "nxdomain", "nameservers": [...],
///                          "transport_error": true}}}
class FixtureTransport final : public Transport {
 public:
  FixtureTransport() = default;

  void add_http(const std::string& url, HttpResponse response);
  void add_http_failure(const std::string& url);
  void add_dns(const std::string& domain, DnsAnswer answer);
  void add_dns_failure(const std::string& domain);
  /// Simulated latency per operation, used to observe concurrency.
  void set_latency(std::chrono::milliseconds latency) { latency_ = latency; }

  /// Throws Error{MalformedJson} or Error{IoError}.
  static std::unique_ptr<FixtureTransport> from_json_text(std::string_view text);
  static std::unique_ptr<FixtureTransport> load(const std::filesystem::path& path);

  HttpResponse get(const HttpRequest& request) override;
  DnsAnswer query_ns(const std::string& domain) override;

  std::size_t hits() const;
  std::size_t hits_for(const std::string& subject) const;
  std::size_t max_in_flight() const;
  /// Every request header seen, for assertions about authentication.
  std::map<std::string, std::string> last_headers(const std::string& url) const;

 private:
  void enter();
  void leave();

  std::map<std::string, HttpResponse> http_;
  std::map<std::string, DnsAnswer> dns_;
  std::set<std::string> failing_;
  std::chrono::milliseconds latency_{0};

  mutable std::mutex mu_;
  std::map<std::string, std::size_t> hit_counts_;
  std::map<std::string, std::map<std::string, std::string>> headers_seen_;
  std::size_t in_flight_ = 0;
  std::size_t max_in_flight_ = 0;
};

}  // namespace chainaudit
