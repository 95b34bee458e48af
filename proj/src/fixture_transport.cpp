#include "chainaudit/fixture_transport.hpp"

#include <fstream>
#include <iterator>
#include <json.hpp>
#include <thread>

#include "chainaudit/error.hpp"
#include "chainaudit/text.hpp"

namespace chainaudit {

using nlohmann::json;

namespace {

DnsStatus dns_status_from(std::string_view s) {
  if (s == "has_records") return DnsStatus::has_records;
  if (s == "no_records") return DnsStatus::no_records;
  if (s == "nxdomain") return DnsStatus::nxdomain;
  if (s == "error") return DnsStatus::error;
  throw Error(ErrorCode::MalformedJson, "unknown DNS status '" + std::string(s) + "'");
}

}  // namespace

void FixtureTransport::add_http(const std::string& url, HttpResponse response) {
  std::map<std::string, std::string> lowered;
  for (auto& [k, v] : response.headers) lowered[to_lower(k)] = v;
  response.headers = std::move(lowered);
  http_[url] = std::move(response);
}

void FixtureTransport::add_http_failure(const std::string& url) { failing_.insert("http " + url); }

void FixtureTransport::add_dns(const std::string& domain, DnsAnswer answer) { dns_[to_lower(domain)] = std::move(answer); }

void FixtureTransport::add_dns_failure(const std::string& domain) { failing_.insert("dns " + to_lower(domain)); }

std::unique_ptr<FixtureTransport> FixtureTransport::from_json_text(std::string_view text) {
  json doc = json::parse(text.begin(), text.end(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw Error(ErrorCode::MalformedJson, "fixture is not a JSON object");
  auto owned = std::make_unique<FixtureTransport>();
  FixtureTransport& t = *owned;
  try {
    if (auto http = doc.find("http"); http != doc.end()) {
      for (const auto& [url, spec] : http->items()) {
        if (spec.value("transport_error", false)) {
          t.add_http_failure(url);
          continue;
        }
        HttpResponse r;
        r.status = spec.value("status", 0);
        r.timed_out = spec.value("timeout", false);
        if (auto h = spec.find("headers"); h != spec.end()) {
          for (const auto& [k, v] : h->items()) r.headers[k] = v.get<std::string>();
        }
        if (auto b = spec.find("body"); b != spec.end()) r.body = b->is_string() ? b->get<std::string>() : b->dump();
        t.add_http(url, std::move(r));
      }
    }
    if (auto dns = doc.find("dns"); dns != doc.end()) {
      for (const auto& [domain, spec] : dns->items()) {
        if (spec.value("transport_error", false)) {
          t.add_dns_failure(domain);
          continue;
        }
        DnsAnswer a;
        a.status = dns_status_from(spec.value("status", std::string("error")));
        if (auto ns = spec.find("nameservers"); ns != spec.end()) a.nameservers = ns->get<std::vector<std::string>>();
        t.add_dns(domain, std::move(a));
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedJson, std::string("bad fixture: ") + e.what());
  }
  return owned;
}

std::unique_ptr<FixtureTransport> FixtureTransport::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open fixture " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json_text(text);
}

void FixtureTransport::enter() {
  std::lock_guard lock(mu_);
  ++in_flight_;
  max_in_flight_ = std::max(max_in_flight_, in_flight_);
}

void FixtureTransport::leave() {
  std::lock_guard lock(mu_);
  --in_flight_;
}

HttpResponse FixtureTransport::get(const HttpRequest& request) {
  enter();
  struct Guard {
    FixtureTransport* t;
    ~Guard() { t->leave(); }
  } guard{this};
  {
    std::lock_guard lock(mu_);
    ++hit_counts_[request.url];
    headers_seen_[request.url] = request.headers;
  }
  if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
  if (failing_.contains("http " + request.url)) {
    throw Error(ErrorCode::TransportError, "fixture: connection failed for " + request.url);
  }
  auto it = http_.find(request.url);
  if (it == http_.end()) throw Error(ErrorCode::UnexpectedNetworkAccess, "no fixture for GET " + request.url);
  return it->second;
}

DnsAnswer FixtureTransport::query_ns(const std::string& domain) {
  enter();
  struct Guard {
    FixtureTransport* t;
    ~Guard() { t->leave(); }
  } guard{this};
  const std::string key = to_lower(domain);
  {
    std::lock_guard lock(mu_);
    ++hit_counts_["dns:" + key];
  }
  if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
  if (failing_.contains("dns " + key)) throw Error(ErrorCode::TransportError, "fixture: resolver unreachable for " + key);
  auto it = dns_.find(key);
  if (it == dns_.end()) throw Error(ErrorCode::UnexpectedNetworkAccess, "no fixture for DNS " + key);
  return it->second;
}

std::size_t FixtureTransport::hits() const {
  std::lock_guard lock(mu_);
  std::size_t total = 0;
  for (const auto& [k, n] : hit_counts_) total += n;
  return total;
}

std::size_t FixtureTransport::hits_for(const std::string& subject) const {
  std::lock_guard lock(mu_);
  auto it = hit_counts_.find(subject);
  return it == hit_counts_.end() ? 0 : it->second;
}

std::size_t FixtureTransport::max_in_flight() const {
  std::lock_guard lock(mu_);
  return max_in_flight_;
}

std::map<std::string, std::string> FixtureTransport::last_headers(const std::string& url) const {
  std::lock_guard lock(mu_);
  auto it = headers_seen_.find(url);
  return it == headers_seen_.end() ? std::map<std::string, std::string>{} : it->second;
}

}  // namespace chainaudit
