#pragma once

#include <algorithm>
#include <atomic>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "chainaudit/error.hpp"
#include "chainaudit/probe_cache.hpp"
#include "chainaudit/spec_index.hpp"
#include "chainaudit/transport.hpp"

namespace chainaudit {

struct Evidence {
  std::string probe;
  std::string observation;
  Timestamp timestamp{};

  friend bool operator==(const Evidence&, const Evidence&) = default;
};

enum class AvailabilityState { registered, available, indeterminate };
std::string_view to_string(AvailabilityState s);

struct Availability {
  std::string subject;
  AvailabilityState state = AvailabilityState::indeterminate;
  std::vector<Evidence> evidence;
  Timestamp checked_at{};
  /// Whether some evidence entry records an authoritative not-found answer.
  bool has_authoritative_not_found() const;

  friend bool operator==(const Availability&, const Availability&) = default;
};

enum class GitHubState { exists, redirected, user_missing, repo_missing };
std::string_view to_string(GitHubState s);
enum class Retirement { unknown, not_applicable };
std::string_view to_string(Retirement r);

struct GitHubRepoStatus {
  std::string namespace_name;
  std::string image_name;
  GitHubState state = GitHubState::exists;
  std::optional<std::string> redirect_target;  // "ns/image"
  std::optional<std::int64_t> stars;
  Retirement retirement = Retirement::not_applicable;
  std::vector<Evidence> evidence;

  friend bool operator==(const GitHubRepoStatus&, const GitHubRepoStatus&) = default;
};

struct PodOwner {
  std::string pod_name;
  std::string owner_name;
  std::string email;
  std::string email_domain;

  friend bool operator==(const PodOwner&, const PodOwner&) = default;
};

nlohmann::json to_json(const Evidence& e);
nlohmann::json to_json(const Availability& a);
nlohmann::json to_json(const GitHubRepoStatus& s);
nlohmann::json to_json(const PodOwner& o);
Availability availability_from_json(const nlohmann::json& j);
GitHubRepoStatus github_status_from_json(const nlohmann::json& j);
PodOwner pod_owner_from_json(const nlohmann::json& j);

/// Observation prefix marking an authoritative not-found answer.
inline constexpr std::string_view kNotFoundMarker = "not-found:";

struct ProbeConfig {
  std::string github_api = "https://api.github.com";
  std::string npm_registry = "https://registry.npmjs.org";
  std::string trunk_api = "https://trunk.cocoapods.org/api/v1";
  std::string rdap_bootstrap = "https://data.iana.org/rdap/dns.json";
  /// TLD -> RDAP base URL (ending in '/'); consulted before the bundled map.
  std::map<std::string, std::string> rdap_overrides;
  std::optional<std::string> github_token;
  Clock clock = system_now;
};

/// Evidence-gathering clients over a Transport. All public methods are safe
/// to call concurrently. Results are cached when a cache is attached;
/// rate-limit and transport errors are never cached.
class Prober {
 public:
  Prober(Transport& transport, ProbeConfig config = {}, ProbeCache* cache = nullptr);

  /// DNS NS first, then RDAP. Throws Error{TransportError}, Error{NotADomain}
  /// or Error{PublicSuffixOnly}.
  Availability check_domain(const std::string& domain);
  /// Throws RateLimitedError, Error{TransportError} or
  /// Error{MalformedResponse}; std::invalid_argument for invalid names.
  GitHubRepoStatus check_github_repo(const std::string& namespace_name, const std::string& image_name);
  /// Throws Error{TransportError}.
  Availability check_npm_name(const std::string& name);
  /// Trunk pod endpoint; 404 means the name is claimable.
  Availability check_trunk_name(const std::string& pod_name);
  /// Throws Error{TransportError} or Error{MalformedResponse}. A 404 yields
  /// an empty list and a warning.
  std::vector<PodOwner> fetch_pod_owners(const std::string& pod_name, std::vector<std::string>* warnings = nullptr);

  /// RDAP base URL for a TLD, or nullopt when no service is known.
  std::optional<std::string> rdap_base_for(const std::string& tld);

 private:
  HttpResponse fetch(const std::string& url, bool github = false);
  Evidence observe(std::string probe, std::string observation) const;

  Transport& transport_;
  ProbeConfig config_;
  ProbeCache* cache_;
  std::mutex bootstrap_mu_;
  std::optional<std::map<std::string, std::string>> bootstrap_;
};

/// Everything the risk engine may consult, keyed by subject.
struct ProbeResults {
  std::map<std::string, Availability> domains;     // registrable domain
  std::map<std::string, GitHubRepoStatus> github;  // "ns/image"
  std::map<std::string, Availability> npm;         // package name
  std::map<std::string, Availability> trunk;       // pod name
  std::map<std::string, std::vector<PodOwner>> owners;  // pod name
};

template <class T>
struct BulkOutcome {
  std::optional<T> value;
  std::optional<ErrorCode> error_code;
  std::string error;

  bool ok() const { return value.has_value(); }
};

/// Runs `probe(subject)` for every distinct subject with at most `limit`
/// calls in flight. Errors are captured per subject and never abort the
/// batch.
template <class T, class Probe>
std::map<std::string, BulkOutcome<T>> bulk(const std::vector<std::string>& subjects, Probe&& probe, unsigned limit) {
  std::vector<std::string> unique(subjects);
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  std::vector<BulkOutcome<T>> results(unique.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < unique.size(); i = next++) {
      try {
        results[i].value = probe(unique[i]);
      } catch (const Error& e) {
        results[i].error_code = e.code();
        results[i].error = e.what();
      } catch (const std::exception& e) {
        results[i].error = e.what();
      }
    }
  };
  const std::size_t workers = std::min<std::size_t>(std::max(1u, limit), unique.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::map<std::string, BulkOutcome<T>> out;
  for (std::size_t i = 0; i < unique.size(); ++i) out.emplace(unique[i], std::move(results[i]));
  return out;
}

}  // namespace chainaudit
