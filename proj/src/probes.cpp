#include "chainaudit/probes.hpp"

#include <cstdlib>
#include <stdexcept>

#include "chainaudit/public_suffix.hpp"
#include "chainaudit/text.hpp"
#include "chainaudit/url.hpp"

namespace chainaudit {

using nlohmann::json;

namespace {

constexpr int kMaxRedirects = 3;

// Registries whose RDAP endpoints are stable enough to ship; everything else
// goes through the IANA bootstrap file.
const std::map<std::string, std::string>& bundled_rdap() {
  static const std::map<std::string, std::string> m = {
      {"com", "https://rdap.verisign.com/com/v1/"},
      {"net", "https://rdap.verisign.com/net/v1/"},
      {"org", "https://rdap.publicinterestregistry.org/rdap/"},
      {"dev", "https://pubapi.registry.google/rdap/"},
      {"app", "https://pubapi.registry.google/rdap/"},
      {"page", "https://pubapi.registry.google/rdap/"},
  };
  return m;
}

std::string with_slash(std::string s) {
  if (s.empty() || s.back() != '/') s += '/';
  return s;
}

std::string resolve_location(const std::string& base_url, const std::string& location) {
  if (location.find("://") != std::string::npos) return location;
  auto scheme_end = base_url.find("://");
  auto path_start = base_url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  std::string origin = base_url.substr(0, path_start);
  if (!location.empty() && location.front() == '/') return origin + location;
  auto last_slash = base_url.rfind('/');
  return base_url.substr(0, last_slash + 1) + location;
}

bool is_redirect(int status) { return status == 301 || status == 302 || status == 303 || status == 307 || status == 308; }

std::optional<std::int64_t> parse_int(const std::optional<std::string>& s) {
  if (!s || s->empty()) return std::nullopt;
  char* end = nullptr;
  long long v = std::strtoll(s->c_str(), &end, 10);
  if (end == s->c_str() || *end != '\0') return std::nullopt;
  return v;
}

std::string describe(const HttpResponse& r) {
  return r.timed_out ? std::string("timeout") : "HTTP " + std::to_string(r.status);
}

Timestamp from_json_time(const json& j) {
  Timestamp t{};
  if (!parse_timestamp(j.get<std::string>(), t)) throw Error(ErrorCode::MalformedJson, "bad timestamp in cache");
  return t;
}

std::vector<Evidence> evidence_from_json(const json& j) {
  std::vector<Evidence> out;
  for (const auto& e : j) {
    out.push_back(Evidence{e.at("probe").get<std::string>(), e.at("observation").get<std::string>(),
                           from_json_time(e.at("timestamp"))});
  }
  return out;
}

AvailabilityState availability_state_from(std::string_view s) {
  if (s == "registered") return AvailabilityState::registered;
  if (s == "available") return AvailabilityState::available;
  if (s == "indeterminate") return AvailabilityState::indeterminate;
  throw Error(ErrorCode::MalformedJson, "unknown availability state");
}

GitHubState github_state_from(std::string_view s) {
  if (s == "exists") return GitHubState::exists;
  if (s == "redirected") return GitHubState::redirected;
  if (s == "user_missing") return GitHubState::user_missing;
  if (s == "repo_missing") return GitHubState::repo_missing;
  throw Error(ErrorCode::MalformedJson, "unknown GitHub state");
}

// Typed cache read; corrupt entries are treated as misses.
template <class T, class F>
std::optional<T> cached(ProbeCache* cache, const std::string& kind, const std::string& subject, F decode) {
  if (!cache) return std::nullopt;
  auto j = cache->get(kind, subject);
  if (!j) return std::nullopt;
  try {
    return decode(*j);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace

std::string_view to_string(AvailabilityState s) {
  switch (s) {
    case AvailabilityState::registered: return "registered";
    case AvailabilityState::available: return "available";
    case AvailabilityState::indeterminate: return "indeterminate";
  }
  return "indeterminate";
}

std::string_view to_string(GitHubState s) {
  switch (s) {
    case GitHubState::exists: return "exists";
    case GitHubState::redirected: return "redirected";
    case GitHubState::user_missing: return "user_missing";
    case GitHubState::repo_missing: return "repo_missing";
  }
  return "exists";
}

std::string_view to_string(Retirement r) { return r == Retirement::unknown ? "unknown" : "not_applicable"; }

bool Availability::has_authoritative_not_found() const {
  return std::any_of(evidence.begin(), evidence.end(),
                     [](const Evidence& e) { return e.observation.starts_with(kNotFoundMarker); });
}

json to_json(const Evidence& e) {
  return json{{"probe", e.probe}, {"observation", e.observation}, {"timestamp", format_timestamp(e.timestamp)}};
}

json to_json(const Availability& a) {
  json ev = json::array();
  for (const auto& e : a.evidence) ev.push_back(to_json(e));
  return json{{"subject", a.subject},
              {"state", std::string(to_string(a.state))},
              {"evidence", std::move(ev)},
              {"checked_at", format_timestamp(a.checked_at)}};
}

json to_json(const GitHubRepoStatus& s) {
  json ev = json::array();
  for (const auto& e : s.evidence) ev.push_back(to_json(e));
  return json{{"namespace", s.namespace_name},
              {"image_name", s.image_name},
              {"state", std::string(to_string(s.state))},
              {"redirect_target", s.redirect_target ? json(*s.redirect_target) : json(nullptr)},
              {"stars", s.stars ? json(*s.stars) : json(nullptr)},
              {"retirement", std::string(to_string(s.retirement))},
              {"evidence", std::move(ev)}};
}

json to_json(const PodOwner& o) {
  return json{{"pod_name", o.pod_name}, {"owner_name", o.owner_name}, {"email", o.email}, {"email_domain", o.email_domain}};
}

Availability availability_from_json(const json& j) {
  Availability a;
  a.subject = j.at("subject").get<std::string>();
  a.state = availability_state_from(j.at("state").get<std::string>());
  a.evidence = evidence_from_json(j.at("evidence"));
  a.checked_at = from_json_time(j.at("checked_at"));
  return a;
}

GitHubRepoStatus github_status_from_json(const json& j) {
  GitHubRepoStatus s;
  s.namespace_name = j.at("namespace").get<std::string>();
  s.image_name = j.at("image_name").get<std::string>();
  s.state = github_state_from(j.at("state").get<std::string>());
  if (!j.at("redirect_target").is_null()) s.redirect_target = j.at("redirect_target").get<std::string>();
  if (!j.at("stars").is_null()) s.stars = j.at("stars").get<std::int64_t>();
  s.retirement = j.at("retirement").get<std::string>() == "unknown" ? Retirement::unknown : Retirement::not_applicable;
  s.evidence = evidence_from_json(j.at("evidence"));
  return s;
}

PodOwner pod_owner_from_json(const json& j) {
  return PodOwner{j.at("pod_name").get<std::string>(), j.at("owner_name").get<std::string>(),
                  j.at("email").get<std::string>(), j.at("email_domain").get<std::string>()};
}

Prober::Prober(Transport& transport, ProbeConfig config, ProbeCache* cache)
    : transport_(transport), config_(std::move(config)), cache_(cache) {}

Evidence Prober::observe(std::string probe, std::string observation) const {
  return Evidence{std::move(probe), std::move(observation), config_.clock()};
}

HttpResponse Prober::fetch(const std::string& url, bool github) {
  HttpRequest req{url, {}};
  if (github) {
    req.headers["Accept"] = "application/vnd.github+json";
    req.headers["X-GitHub-Api-Version"] = "2022-11-28";
    if (config_.github_token) req.headers["Authorization"] = "Bearer " + *config_.github_token;
  }
  return transport_.get(req);
}

std::optional<std::string> Prober::rdap_base_for(const std::string& tld) {
  if (auto it = config_.rdap_overrides.find(tld); it != config_.rdap_overrides.end()) return with_slash(it->second);
  if (auto it = bundled_rdap().find(tld); it != bundled_rdap().end()) return it->second;

  std::lock_guard lock(bootstrap_mu_);
  if (!bootstrap_) {
    HttpResponse r = fetch(config_.rdap_bootstrap);
    std::map<std::string, std::string> map;
    if (!r.timed_out && r.status == 200) {
      json doc = json::parse(r.body, nullptr, false);
      if (!doc.is_discarded() && doc.is_object() && doc.contains("services") && doc["services"].is_array()) {
        for (const auto& service : doc["services"]) {
          if (!service.is_array() || service.size() < 2 || !service[0].is_array() || !service[1].is_array()) continue;
          std::string base;
          for (const auto& u : service[1]) {
            if (!u.is_string()) continue;
            std::string s = u.get<std::string>();
            if (base.empty() || (s.starts_with("https://") && !base.starts_with("https://"))) base = s;
          }
          if (base.empty()) continue;
          for (const auto& t : service[0]) {
            if (t.is_string()) map.emplace(to_lower(t.get<std::string>()), with_slash(base));
          }
        }
      }
    } else {
      // A failed bootstrap is not cached so a later call can retry.
      return std::nullopt;
    }
    bootstrap_ = std::move(map);
  }
  if (auto it = bootstrap_->find(tld); it != bootstrap_->end()) return it->second;
  return std::nullopt;
}

Availability Prober::check_domain(const std::string& input) {
  const std::string domain = registrable_domain(input);
  if (auto hit = cached<Availability>(cache_, "domain", domain, availability_from_json)) return *hit;

  Availability a;
  a.subject = domain;
  a.state = AvailabilityState::indeterminate;

  DnsAnswer dns = transport_.query_ns(domain);
  switch (dns.status) {
    case DnsStatus::has_records: {
      std::string ns;
      for (const auto& n : dns.nameservers) ns += (ns.empty() ? "" : ", ") + n;
      a.evidence.push_back(observe("dns-ns", "NS " + ns));
      break;
    }
    case DnsStatus::no_records: a.evidence.push_back(observe("dns-ns", "no NS records")); break;
    case DnsStatus::nxdomain: a.evidence.push_back(observe("dns-ns", "NXDOMAIN")); break;
    case DnsStatus::error: a.evidence.push_back(observe("dns-ns", "resolver error")); break;
  }

  const std::string tld = domain.substr(domain.rfind('.') + 1);
  auto base = rdap_base_for(tld);
  if (!base) {
    a.evidence.push_back(observe("rdap", "no RDAP service known for ." + tld));
  } else {
    std::string url = *base + "domain/" + domain;
    HttpResponse r = fetch(url);
    for (int hop = 0; hop < kMaxRedirects && !r.timed_out && is_redirect(r.status); ++hop) {
      auto loc = r.header("location");
      if (!loc) break;
      url = resolve_location(url, *loc);
      r = fetch(url);
    }
    if (r.timed_out) {
      a.evidence.push_back(observe("rdap", "timeout from " + url));
    } else if (r.status == 404) {
      a.state = AvailabilityState::available;
      a.evidence.push_back(observe("rdap", std::string(kNotFoundMarker) + " HTTP 404 from " + url));
    } else if (r.status == 200) {
      json doc = json::parse(r.body, nullptr, false);
      if (!doc.is_discarded() && doc.is_object() && doc.value("objectClassName", "") == "domain") {
        a.state = AvailabilityState::registered;
        std::string statuses;
        if (auto st = doc.find("status"); st != doc.end() && st->is_array()) {
          for (const auto& s : *st) {
            if (s.is_string()) statuses += (statuses.empty() ? "" : ", ") + s.get<std::string>();
          }
        }
        a.evidence.push_back(observe("rdap", "domain object from " + url + (statuses.empty() ? "" : " (status: " + statuses + ")")));
      } else {
        a.evidence.push_back(observe("rdap", "HTTP 200 without a domain object from " + url));
      }
    } else {
      a.evidence.push_back(observe("rdap", describe(r) + " from " + url));
    }
  }
  a.checked_at = config_.clock();
  if (cache_) cache_->put("domain", domain, to_json(a));
  return a;
}

GitHubRepoStatus Prober::check_github_repo(const std::string& ns, const std::string& image) {
  if (!is_valid_github_namespace(ns)) throw std::invalid_argument("invalid GitHub namespace '" + ns + "'");
  if (!is_valid_github_repo_name(image)) throw std::invalid_argument("invalid GitHub repository name '" + image + "'");
  const std::string subject = ns + "/" + image;
  if (auto hit = cached<GitHubRepoStatus>(cache_, "github", subject, github_status_from_json)) return *hit;

  auto check_rate_limit = [&](const HttpResponse& r) {
    if (r.status != 403 && r.status != 429) return;
    auto remaining = r.header("x-ratelimit-remaining");
    auto retry_after = parse_int(r.header("retry-after"));
    if ((remaining && *remaining == "0") || retry_after || r.status == 429) {
      std::int64_t reset = 0;
      if (auto v = parse_int(r.header("x-ratelimit-reset"))) reset = *v;
      else reset = config_.clock().time_since_epoch().count() + retry_after.value_or(60);
      throw RateLimitedError(reset, "GitHub API rate limit reached; resets at epoch " + std::to_string(reset));
    }
  };
  auto require_answer = [&](const HttpResponse& r, const std::string& url) {
    if (r.timed_out) throw Error(ErrorCode::TransportError, "timeout from " + url);
    check_rate_limit(r);
  };
  auto repo_json = [&](const HttpResponse& r, const std::string& url) {
    json doc = json::parse(r.body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("full_name") || !doc["full_name"].is_string()) {
      throw Error(ErrorCode::MalformedResponse, "repository object without full_name from " + url);
    }
    return doc;
  };

  GitHubRepoStatus s;
  s.namespace_name = ns;
  s.image_name = image;
  const std::string repo_url = config_.github_api + "/repos/" + ns + "/" + image;
  HttpResponse r = fetch(repo_url, true);
  require_answer(r, repo_url);
  s.evidence.push_back(observe("github-repo", describe(r) + " from " + repo_url));

  std::string url = repo_url;
  for (int hop = 0; hop < kMaxRedirects && is_redirect(r.status); ++hop) {
    auto loc = r.header("location");
    if (!loc) throw Error(ErrorCode::MalformedResponse, "redirect without Location from " + url);
    url = resolve_location(url, *loc);
    r = fetch(url, true);
    require_answer(r, url);
    s.evidence.push_back(observe("github-repo", "redirect followed: " + describe(r) + " from " + url));
  }

  if (r.status == 200) {
    json doc = repo_json(r, url);
    const std::string full_name = doc["full_name"].get<std::string>();
    if (auto stars = doc.find("stargazers_count"); stars != doc.end() && stars->is_number_integer()) {
      s.stars = stars->get<std::int64_t>();
    }
    s.redirect_target = full_name;
    if (to_lower(full_name) == to_lower(subject)) {
      s.state = GitHubState::exists;
      s.retirement = Retirement::not_applicable;
    } else {
      s.state = GitHubState::redirected;
      s.retirement = Retirement::unknown;
      s.evidence.push_back(observe("github-repo", "moved to " + full_name));
    }
  } else if (r.status == 404) {
    const std::string user_url = config_.github_api + "/users/" + ns;
    HttpResponse u = fetch(user_url, true);
    require_answer(u, user_url);
    if (u.status == 404) {
      s.state = GitHubState::user_missing;
      s.retirement = Retirement::unknown;
      s.evidence.push_back(observe("github-user", std::string(kNotFoundMarker) + " HTTP 404 from " + user_url));
    } else if (u.status == 200) {
      s.state = GitHubState::repo_missing;
      s.retirement = Retirement::not_applicable;
      s.evidence.push_back(observe("github-user", "HTTP 200 from " + user_url));
    } else {
      throw Error(ErrorCode::MalformedResponse, "unexpected " + describe(u) + " from " + user_url);
    }
  } else {
    throw Error(ErrorCode::MalformedResponse, "unexpected " + describe(r) + " from " + url);
  }
  if (cache_) cache_->put("github", subject, to_json(s));
  return s;
}

Availability Prober::check_npm_name(const std::string& name) {
  if (auto hit = cached<Availability>(cache_, "npm", name, availability_from_json)) return *hit;
  // Scoped names keep the '@' but encode the separating slash.
  std::string encoded;
  if (name.starts_with('@')) {
    auto slash = name.find('/');
    encoded = "@" + percent_encode(name.substr(1, slash - 1));
    if (slash != std::string::npos) encoded += "%2F" + percent_encode(name.substr(slash + 1));
  } else {
    encoded = percent_encode(name);
  }
  const std::string url = config_.npm_registry + "/" + encoded;
  HttpResponse r = fetch(url);
  Availability a;
  a.subject = name;
  if (!r.timed_out && r.status == 404) {
    a.state = AvailabilityState::available;
    a.evidence.push_back(observe("npm-registry", std::string(kNotFoundMarker) + " HTTP 404 from " + url));
  } else if (!r.timed_out && r.status == 200) {
    a.state = AvailabilityState::registered;
    a.evidence.push_back(observe("npm-registry", "HTTP 200 from " + url));
  } else {
    a.state = AvailabilityState::indeterminate;
    a.evidence.push_back(observe("npm-registry", describe(r) + " from " + url));
  }
  a.checked_at = config_.clock();
  if (cache_) cache_->put("npm", name, to_json(a));
  return a;
}

Availability Prober::check_trunk_name(const std::string& pod_name) {
  if (auto hit = cached<Availability>(cache_, "trunk", pod_name, availability_from_json)) return *hit;
  const std::string url = config_.trunk_api + "/pods/" + percent_encode(pod_name);
  HttpResponse r = fetch(url);
  Availability a;
  a.subject = pod_name;
  if (!r.timed_out && r.status == 404) {
    a.state = AvailabilityState::available;
    a.evidence.push_back(observe("cocoapods-trunk", std::string(kNotFoundMarker) + " HTTP 404 from " + url));
  } else if (!r.timed_out && r.status == 200) {
    a.state = AvailabilityState::registered;
    a.evidence.push_back(observe("cocoapods-trunk", "HTTP 200 from " + url));
  } else {
    a.state = AvailabilityState::indeterminate;
    a.evidence.push_back(observe("cocoapods-trunk", describe(r) + " from " + url));
  }
  a.checked_at = config_.clock();
  if (cache_) cache_->put("trunk", pod_name, to_json(a));
  return a;
}

std::vector<PodOwner> Prober::fetch_pod_owners(const std::string& pod_name, std::vector<std::string>* warnings) {
  if (pod_name.empty()) throw std::invalid_argument("empty pod name");
  auto decode = [](const json& j) {
    std::vector<PodOwner> out;
    for (const auto& o : j.at("owners")) out.push_back(pod_owner_from_json(o));
    return std::make_pair(j.at("found").get<bool>(), out);
  };
  if (auto hit = cached<std::pair<bool, std::vector<PodOwner>>>(cache_, "owners", pod_name, decode)) {
    if (!hit->first && warnings) warnings->push_back("pod " + pod_name + " not found on trunk");
    return hit->second;
  }

  const std::string url = config_.trunk_api + "/pods/" + percent_encode(pod_name);
  HttpResponse r = fetch(url);
  if (r.timed_out) throw Error(ErrorCode::TransportError, "timeout from " + url);
  std::vector<PodOwner> owners;
  bool found = true;
  if (r.status == 404) {
    found = false;
    if (warnings) warnings->push_back("pod " + pod_name + " not found on trunk");
  } else if (r.status == 200) {
    json doc = json::parse(r.body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("owners") || !doc["owners"].is_array()) {
      throw Error(ErrorCode::MalformedResponse, "no owners array in response from " + url);
    }
    for (const auto& o : doc["owners"]) {
      if (!o.is_object() || !o.contains("email") || !o["email"].is_string()) {
        throw Error(ErrorCode::MalformedResponse, "owner without email in response from " + url);
      }
      PodOwner owner;
      owner.pod_name = pod_name;
      owner.owner_name = o.value("name", "");
      owner.email = o["email"].get<std::string>();
      if (std::count(owner.email.begin(), owner.email.end(), '@') != 1 || owner.email.front() == '@') {
        throw Error(ErrorCode::MalformedResponse, "owner email '" + owner.email + "' is not an address");
      }
      try {
        owner.email_domain = registrable_domain(owner.email);
      } catch (const Error& e) {
        throw Error(ErrorCode::MalformedResponse, "owner email '" + owner.email + "': " + e.what());
      }
      owners.push_back(std::move(owner));
    }
  } else {
    throw Error(ErrorCode::TransportError, "unexpected " + describe(r) + " from " + url);
  }
  if (cache_) {
    json arr = json::array();
    for (const auto& o : owners) arr.push_back(to_json(o));
    cache_->put("owners", pod_name, json{{"found", found}, {"owners", std::move(arr)}});
  }
  return owners;
}

}  // namespace chainaudit
