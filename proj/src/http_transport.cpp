#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "chainaudit/http_transport.hpp"

#include <arpa/inet.h>
#include <arpa/nameser.h>
#include <netdb.h>
#include <netinet/in.h>
#include <resolv.h>

#include <cstdio>
#include <cstdlib>
#include <httplib.h>

#include "chainaudit/error.hpp"
#include "chainaudit/text.hpp"
#include "chainaudit/url.hpp"

namespace chainaudit {

namespace {

[[noreturn]] void forbidden(const std::string& what) {
  std::fprintf(stderr, "chainaudit: network access attempted while %s is set: %s\n", kForbidNetworkEnv, what.c_str());
  std::fflush(stderr);
  std::abort();
}

bool network_forbidden() {
  const char* v = std::getenv(kForbidNetworkEnv);
  return v && *v && std::string_view(v) != "0";
}

struct Proxy {
  std::string host;
  int port = 0;
  std::string user;
  std::string password;
};

std::optional<Proxy> proxy_from_env(bool https) {
  const char* names_https[] = {"https_proxy", "HTTPS_PROXY"};
  const char* names_http[] = {"http_proxy", "HTTP_PROXY"};
  const char* value = nullptr;
  for (const char* n : https ? names_https : names_http) {
    if ((value = std::getenv(n)) && *value) break;
    value = nullptr;
  }
  if (!value) return std::nullopt;
  std::string_view v = value;
  if (auto s = v.find("://"); s != std::string_view::npos) v.remove_prefix(s + 3);
  if (auto slash = v.find('/'); slash != std::string_view::npos) v = v.substr(0, slash);
  Proxy p;
  if (auto at = v.rfind('@'); at != std::string_view::npos) {
    std::string_view cred = v.substr(0, at);
    v.remove_prefix(at + 1);
    auto colon = cred.find(':');
    p.user = std::string(cred.substr(0, colon));
    if (colon != std::string_view::npos) p.password = std::string(cred.substr(colon + 1));
  }
  auto colon = v.rfind(':');
  if (colon == std::string_view::npos) {
    p.host = std::string(v);
    p.port = https ? 443 : 80;
  } else {
    p.host = std::string(v.substr(0, colon));
    p.port = std::atoi(std::string(v.substr(colon + 1)).c_str());
  }
  if (p.host.empty() || p.port <= 0) return std::nullopt;
  return p;
}

bool bypass_proxy(const std::string& host) {
  const char* no_proxy = std::getenv("no_proxy");
  if (!no_proxy) no_proxy = std::getenv("NO_PROXY");
  if (!no_proxy) return false;
  for (auto entry : split(no_proxy, ',')) {
    entry = trim(entry);
    if (entry.starts_with('.')) entry.remove_prefix(1);
    if (entry == "*") return true;
    if (!entry.empty() && (host == entry || host.ends_with("." + std::string(entry)))) return true;
  }
  return false;
}

}  // namespace

HttpTransport::HttpTransport(HttpTransportOptions options)
    : options_(std::move(options)), limiter_(options_.requests_per_second, options_.burst) {}

HttpTransport::~HttpTransport() = default;

HttpResponse HttpTransport::get(const HttpRequest& request) {
  if (network_forbidden()) forbidden("GET " + request.url);
  auto scheme_end = request.url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorCode::TransportError, "not an absolute URL: " + request.url);
  auto path_start = request.url.find('/', scheme_end + 3);
  std::string origin = request.url.substr(0, path_start);
  std::string path = path_start == std::string::npos ? "/" : request.url.substr(path_start);
  auto parts = parse_url(request.url);
  if (!parts) throw Error(ErrorCode::TransportError, "cannot parse URL: " + request.url);

  limiter_.acquire(parts->host);

  httplib::Client client(origin);
  client.set_connection_timeout(static_cast<time_t>(options_.connect_timeout.count()));
  client.set_read_timeout(static_cast<time_t>(options_.read_timeout.count()));
  client.set_follow_location(false);
  client.set_keep_alive(false);
  if (options_.use_proxy_env && !bypass_proxy(parts->host)) {
    if (auto proxy = proxy_from_env(parts->scheme == "https")) {
      client.set_proxy(proxy->host, proxy->port);
      if (!proxy->user.empty()) client.set_proxy_basic_auth(proxy->user, proxy->password);
    }
  }

  httplib::Headers headers{{"User-Agent", options_.user_agent}};
  for (const auto& [k, v] : request.headers) headers.emplace(k, v);

  auto result = client.Get(path, headers);
  HttpResponse out;
  if (!result) {
    const auto err = result.error();
    if (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout) {
      out.timed_out = true;
      return out;
    }
    throw Error(ErrorCode::TransportError, "GET " + request.url + ": " + httplib::to_string(err));
  }
  out.status = result->status;
  out.body = result->body;
  for (const auto& [k, v] : result->headers) out.headers[to_lower(k)] = v;
  return out;
}

DnsAnswer HttpTransport::query_ns(const std::string& domain) {
  if (network_forbidden()) forbidden("DNS NS " + domain);
  struct __res_state state {};
  if (res_ninit(&state) != 0) throw Error(ErrorCode::TransportError, "resolver initialisation failed");
  struct Closer {
    struct __res_state* s;
    ~Closer() { res_nclose(s); }
  } closer{&state};
  if (options_.dns_server) {
    in_addr addr{};
    if (inet_pton(AF_INET, options_.dns_server->c_str(), &addr) != 1) {
      throw Error(ErrorCode::TransportError, "bad resolver address " + *options_.dns_server);
    }
    state.nsaddr_list[0].sin_family = AF_INET;
    state.nsaddr_list[0].sin_addr = addr;
    state.nsaddr_list[0].sin_port = htons(53);
    state.nscount = 1;
  }

  unsigned char answer[NS_PACKETSZ * 8];
  int len = res_nquery(&state, domain.c_str(), ns_c_in, ns_t_ns, answer, sizeof answer);
  DnsAnswer out;
  if (len < 0) {
    switch (state.res_h_errno) {
      case HOST_NOT_FOUND: out.status = DnsStatus::nxdomain; break;
      case NO_DATA: out.status = DnsStatus::no_records; break;
      default: out.status = DnsStatus::error; break;
    }
    return out;
  }
  ns_msg msg;
  if (ns_initparse(answer, len, &msg) != 0) return out;
  const int count = ns_msg_count(msg, ns_s_an);
  for (int i = 0; i < count; ++i) {
    ns_rr rr;
    if (ns_parserr(&msg, ns_s_an, i, &rr) != 0) continue;
    if (ns_rr_type(rr) != ns_t_ns) continue;
    char name[NS_MAXDNAME];
    if (ns_name_uncompress(ns_msg_base(msg), ns_msg_end(msg), ns_rr_rdata(rr), name, sizeof name) < 0) continue;
    out.nameservers.push_back(to_lower(name));
  }
  std::sort(out.nameservers.begin(), out.nameservers.end());
  out.status = out.nameservers.empty() ? DnsStatus::no_records : DnsStatus::has_records;
  return out;
}

}  // namespace chainaudit
