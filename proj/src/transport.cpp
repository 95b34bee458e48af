#include "chainaudit/transport.hpp"

#include "chainaudit/error.hpp"
#include "chainaudit/text.hpp"

namespace chainaudit {

std::optional<std::string> HttpResponse::header(std::string_view name) const {
  auto it = headers.find(to_lower(name));
  if (it == headers.end()) return std::nullopt;
  return it->second;
}

std::string_view to_string(DnsStatus s) {
  switch (s) {
    case DnsStatus::has_records: return "has_records";
    case DnsStatus::no_records: return "no_records";
    case DnsStatus::nxdomain: return "nxdomain";
    case DnsStatus::error: return "error";
  }
  return "error";
}

HttpResponse OfflineTransport::get(const HttpRequest& request) {
  throw Error(ErrorCode::UnexpectedNetworkAccess, "offline mode: refused GET " + request.url);
}

DnsAnswer OfflineTransport::query_ns(const std::string& domain) {
  throw Error(ErrorCode::UnexpectedNetworkAccess, "offline mode: refused DNS query for " + domain);
}

}  // namespace chainaudit
