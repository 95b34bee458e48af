#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace chainaudit {

struct HttpRequest {
  std::string url;
  std::map<std::string, std::string> headers;
};

struct HttpResponse {
  int status = 0;
  std::map<std::string, std::string> headers;  // keys lowercased
  std::string body;
  bool timed_out = false;

  std::optional<std::string> header(std::string_view name) const;
};

enum class DnsStatus { has_records, no_records, nxdomain, error };
std::string_view to_string(DnsStatus s);

struct DnsAnswer {
  DnsStatus status = DnsStatus::error;
  std::vector<std::string> nameservers;
};

/// Network boundary for every probe. Implementations throw
/// Error{TransportError} when the network itself is unusable; timeouts and
/// HTTP error statuses are ordinary responses.
class Transport {
 public:
  virtual ~Transport() = default;
  /// GET without following redirects.
  virtual HttpResponse get(const HttpRequest& request) = 0;
  /// NS records for a domain.
  virtual DnsAnswer query_ns(const std::string& domain) = 0;
};

/// Refuses every operation with Error{UnexpectedNetworkAccess}.
class OfflineTransport final : public Transport {
 public:
  HttpResponse get(const HttpRequest& request) override;
  DnsAnswer query_ns(const std::string& domain) override;
};

/// Name of the environment variable that makes the real transport abort the
/// process instead of touching the network.
inline constexpr const char* kForbidNetworkEnv = "CHAINAUDIT_FORBID_NETWORK";

}  // namespace chainaudit
