#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "chainaudit/bundle.hpp"
#include "chainaudit/manifest.hpp"
#include "chainaudit/probes.hpp"
#include "chainaudit/resolution.hpp"
#include "chainaudit/spec_index.hpp"

namespace chainaudit {

enum class RuleId {
  CONFUSION_POD,
  CONFUSION_POD_MANIFEST,
  CONFUSION_NPM,
  HIJACK_OWNER_DOMAIN,
  HIJACK_SOURCE_DOMAIN,
  HIJACK_GITHUB_NAMESPACE,
  PIN_MISSING,
  GO_HIJACK,
};

inline constexpr std::array<RuleId, 8> kAllRules = {
    RuleId::CONFUSION_POD,        RuleId::CONFUSION_POD_MANIFEST, RuleId::CONFUSION_NPM,
    RuleId::HIJACK_OWNER_DOMAIN,  RuleId::HIJACK_SOURCE_DOMAIN,   RuleId::HIJACK_GITHUB_NAMESPACE,
    RuleId::PIN_MISSING,          RuleId::GO_HIJACK,
};

std::string_view to_string(RuleId r);
std::optional<RuleId> rule_from_string(std::string_view s);
/// Anchor of the rule's entry in docs/rules.md, e.g. `rules.md#confusion_pod`.
std::string catalog_section(RuleId r);

enum class Severity { critical, high, medium, low, info };
std::string_view to_string(Severity s);
std::optional<Severity> severity_from_string(std::string_view s);
/// critical = 4 ... info = 0.
int severity_rank(Severity s);
/// One step down the ladder; info stays info.
Severity reduce(Severity s);
/// One step up the ladder; critical stays critical.
Severity escalate(Severity s);

struct EvidenceRef {
  std::string source;  // e.g. "bundle", "spec-index", "rdap", "github-repo"
  std::string detail;

  friend bool operator==(const EvidenceRef&, const EvidenceRef&) = default;
  friend auto operator<=>(const EvidenceRef&, const EvidenceRef&) = default;
};

struct Finding {
  RuleId rule_id = RuleId::CONFUSION_POD;
  Severity severity = Severity::info;
  std::string subject;
  std::vector<EvidenceRef> evidence;
  std::optional<std::string> mitigated_by;
  bool requires_manual_verification = false;
  std::string catalog_section;
  std::optional<std::string> attacker_version_needed;
  std::string rationale;

  friend bool operator==(const Finding&, const Finding&) = default;
};

/// Strict weak order: severity descending, then subject, then rule.
bool severity_order(const Finding& a, const Finding& b);
void sort_findings(std::vector<Finding>& findings);
/// Merges findings equal in (rule_id, subject): evidence is unioned, the
/// higher severity and any manual-verification flag survive. Output is
/// sorted with severity_order.
std::vector<Finding> dedupe(std::vector<Finding> findings);

struct RiskConfig {
  /// Replaces the default base severity of a rule.
  std::map<RuleId, Severity> severity_overrides;
  /// Internal names that never produce CONFUSION_* findings.
  std::set<std::string> private_names;
};

Severity base_severity(RuleId r, const RiskConfig& config = {});

/// CONFUSION_POD from the framework scan; CONFUSION_NPM for npm names the
/// probes report available. `probes` may be null (offline).
std::vector<Finding> evaluate_bundle(const BundleScan& scan, const SpecIndex& index, const ProbeResults* probes,
                                     const RiskConfig& config = {});

/// CONFUSION_POD_MANIFEST for Podfiles and Podfile.locks.
/// Throws Error{WrongManifestKind} for other manifests.
std::vector<Finding> evaluate_pod_manifest(const Manifest& manifest, const SpecIndex& index,
                                           const ProbeResults* probes, const RiskConfig& config = {});

/// Owner-domain, source-domain and GitHub-namespace hijack for one pod.
/// Throws Error{MissingProbe} when a referenced subject has no result.
std::vector<Finding> evaluate_pod_hijack(const PodRecord& record, const std::vector<PodOwner>& owners,
                                         const ProbeResults& probes, const RiskConfig& config = {});

/// GO_HIJACK; replace targets are evaluated instead of the replaced module.
/// Throws Error{WrongManifestKind} or Error{MissingProbe}.
std::vector<Finding> evaluate_go_manifest(const Manifest& manifest, const ProbeResults& probes,
                                          const RiskConfig& config = {});

/// Source-URL hijack for explicit git/source locations in any manifest
/// (Cartfile.resolved, Package.resolved, Podfile, Podfile.lock).
/// Throws Error{MissingProbe}.
std::vector<Finding> evaluate_manifest_sources(const Manifest& manifest, const ProbeResults& probes,
                                               const RiskConfig& config = {});

/// Subjects the probes must cover before the hijack evaluations run.
struct ProbeNeeds {
  std::set<std::string> domains;  // registrable domains
  std::set<std::string> github;   // "ns/image"
};
ProbeNeeds probe_needs_for_pod(const PodRecord& record, const std::vector<PodOwner>& owners);
ProbeNeeds probe_needs_for_manifest(const Manifest& manifest);

}  // namespace chainaudit
