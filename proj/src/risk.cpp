#include "chainaudit/risk.hpp"

#include <algorithm>

#include "chainaudit/error.hpp"
#include "chainaudit/public_suffix.hpp"
#include "chainaudit/text.hpp"
#include "chainaudit/url.hpp"

namespace chainaudit {

namespace {

const char* const kPrepareCommandNote =
    " Some versions declare a prepare_command, which runs shell code on every developer machine at install time;"
    " trunk has rejected new pods using it since May 2025, but existing pods keep it.";

const char* const kConfusionImpactNote =
    " Whoever registers the name ships code that is built into the app.";

// Where a source URL or module path can be taken over.
struct Target {
  enum Kind { none, github, domain } kind = none;
  std::string key;  // "ns/image" or registrable domain
  std::string host;
};

Target target_for_host_path(const std::string& host, std::string_view path) {
  Target t;
  if (host == "github.com" || host == "www.github.com") {
    auto seg = split(path, '/');
    if (seg.size() >= 2) {
      std::string_view image = seg[1];
      if (image.ends_with(".git")) image.remove_suffix(4);
      if (is_valid_github_namespace(seg[0]) && is_valid_github_repo_name(image)) {
        t.kind = Target::github;
        t.key = std::string(seg[0]) + "/" + std::string(image);
        t.host = host;
      }
    }
    return t;
  }
  try {
    t.key = registrable_domain(host);
    t.kind = Target::domain;
    t.host = host;
  } catch (const Error&) {
    t.kind = Target::none;  // IP literals, single-label hosts, bare suffixes
  }
  return t;
}

Target target_for_url(std::string_view url) {
  auto parts = parse_url(url);
  if (!parts) return {};
  return target_for_host_path(parts->host, parts->path);
}

Target target_for_go_module(std::string_view module_path) {
  auto slash = module_path.find('/');
  std::string host = to_lower(module_path.substr(0, slash));
  if (host.find('.') == std::string::npos) return {};
  return target_for_host_path(host, slash == std::string_view::npos ? std::string_view{} : module_path.substr(slash + 1));
}

const Availability& need_domain(const ProbeResults& probes, const std::string& domain) {
  auto it = probes.domains.find(domain);
  if (it == probes.domains.end()) throw Error(ErrorCode::MissingProbe, "no domain probe result for " + domain);
  return it->second;
}

const GitHubRepoStatus& need_github(const ProbeResults& probes, const std::string& key) {
  auto it = probes.github.find(key);
  if (it == probes.github.end()) throw Error(ErrorCode::MissingProbe, "no GitHub probe result for " + key);
  return it->second;
}

void add_probe_evidence(Finding& f, const std::vector<Evidence>& evidence) {
  for (const auto& e : evidence) f.evidence.push_back(EvidenceRef{e.probe, e.observation});
}

bool github_takeover_state(GitHubState s) { return s == GitHubState::user_missing || s == GitHubState::redirected; }

std::string github_state_text(const GitHubRepoStatus& s) {
  if (s.state == GitHubState::user_missing) {
    return "the account " + s.namespace_name + " no longer exists";
  }
  std::string text = "the repository moved to " + s.redirect_target.value_or("?");
  if (s.stars) text += " (" + std::to_string(*s.stars) + " stars)";
  text += ", so the old namespace may be free";
  return text;
}

Finding make(RuleId rule, Severity severity, std::string subject) {
  Finding f;
  f.rule_id = rule;
  f.severity = severity;
  f.subject = std::move(subject);
  f.catalog_section = catalog_section(rule);
  return f;
}

std::string root_pod_name(std::string_view name) { return std::string(name.substr(0, name.find('/'))); }

}  // namespace

std::string_view to_string(RuleId r) {
  switch (r) {
    case RuleId::CONFUSION_POD: return "CONFUSION_POD";
    case RuleId::CONFUSION_POD_MANIFEST: return "CONFUSION_POD_MANIFEST";
    case RuleId::CONFUSION_NPM: return "CONFUSION_NPM";
    case RuleId::HIJACK_OWNER_DOMAIN: return "HIJACK_OWNER_DOMAIN";
    case RuleId::HIJACK_SOURCE_DOMAIN: return "HIJACK_SOURCE_DOMAIN";
    case RuleId::HIJACK_GITHUB_NAMESPACE: return "HIJACK_GITHUB_NAMESPACE";
    case RuleId::PIN_MISSING: return "PIN_MISSING";
    case RuleId::GO_HIJACK: return "GO_HIJACK";
  }
  return "CONFUSION_POD";
}

std::optional<RuleId> rule_from_string(std::string_view s) {
  for (RuleId r : kAllRules) {
    if (to_string(r) == s) return r;
  }
  return std::nullopt;
}

std::string catalog_section(RuleId r) { return "rules.md#" + to_lower(to_string(r)); }

std::string_view to_string(Severity s) {
  switch (s) {
    case Severity::critical: return "critical";
    case Severity::high: return "high";
    case Severity::medium: return "medium";
    case Severity::low: return "low";
    case Severity::info: return "info";
  }
  return "info";
}

std::optional<Severity> severity_from_string(std::string_view s) {
  for (Severity v : {Severity::critical, Severity::high, Severity::medium, Severity::low, Severity::info}) {
    if (to_lower(s) == to_string(v)) return v;
  }
  return std::nullopt;
}

int severity_rank(Severity s) {
  switch (s) {
    case Severity::critical: return 4;
    case Severity::high: return 3;
    case Severity::medium: return 2;
    case Severity::low: return 1;
    case Severity::info: return 0;
  }
  return 0;
}

Severity reduce(Severity s) {
  switch (s) {
    case Severity::critical: return Severity::high;
    case Severity::high: return Severity::medium;
    case Severity::medium: return Severity::low;
    default: return Severity::info;
  }
}

Severity escalate(Severity s) {
  switch (s) {
    case Severity::info: return Severity::low;
    case Severity::low: return Severity::medium;
    case Severity::medium: return Severity::high;
    default: return Severity::critical;
  }
}

bool severity_order(const Finding& a, const Finding& b) {
  if (a.severity != b.severity) return severity_rank(a.severity) > severity_rank(b.severity);
  if (a.subject != b.subject) return a.subject < b.subject;
  return static_cast<int>(a.rule_id) < static_cast<int>(b.rule_id);
}

void sort_findings(std::vector<Finding>& findings) { std::stable_sort(findings.begin(), findings.end(), severity_order); }

std::vector<Finding> dedupe(std::vector<Finding> findings) {
  std::map<std::pair<int, std::string>, Finding> merged;
  for (auto& f : findings) {
    auto key = std::make_pair(static_cast<int>(f.rule_id), f.subject);
    auto it = merged.find(key);
    if (it == merged.end()) {
      merged.emplace(std::move(key), std::move(f));
      continue;
    }
    Finding& m = it->second;
    if (severity_rank(f.severity) > severity_rank(m.severity)) {
      m.severity = f.severity;
      m.mitigated_by = f.mitigated_by;
    }
    m.requires_manual_verification = m.requires_manual_verification || f.requires_manual_verification;
    if (!m.attacker_version_needed) m.attacker_version_needed = f.attacker_version_needed;
    if (m.rationale.empty()) m.rationale = f.rationale;
    for (auto& e : f.evidence) {
      if (std::find(m.evidence.begin(), m.evidence.end(), e) == m.evidence.end()) m.evidence.push_back(std::move(e));
    }
  }
  std::vector<Finding> out;
  out.reserve(merged.size());
  for (auto& [k, f] : merged) out.push_back(std::move(f));
  sort_findings(out);
  return out;
}

Severity base_severity(RuleId r, const RiskConfig& config) {
  if (auto it = config.severity_overrides.find(r); it != config.severity_overrides.end()) return it->second;
  switch (r) {
    case RuleId::HIJACK_OWNER_DOMAIN: return Severity::critical;
    case RuleId::PIN_MISSING: return Severity::low;
    default: return Severity::high;
  }
}

std::vector<Finding> evaluate_bundle(const BundleScan& scan, const SpecIndex& index, const ProbeResults* probes,
                                     const RiskConfig& config) {
  std::vector<Finding> out;
  std::map<std::string, const FrameworkRecord*> by_name;
  for (const auto& fw : scan.frameworks) by_name[fw.framework_name] = &fw;

  for (const auto& v : confusion_report_for_bundle(scan, index)) {
    if (v.classification != Classification::unregistered_confusable) continue;
    if (config.private_names.contains(v.dependency)) continue;
    const FrameworkRecord& fw = *by_name.at(v.dependency);
    Finding f = make(RuleId::CONFUSION_POD, base_severity(RuleId::CONFUSION_POD, config), v.dependency);
    f.evidence.push_back({"bundle", fw.plist_path + " CFBundleIdentifier=" + fw.bundle_identifier.value_or("")});
    if (fw.bundle_version) f.evidence.push_back({"bundle", fw.plist_path + " CFBundleVersion=" + *fw.bundle_version});
    f.evidence.push_back({"spec-index", "no public pod provides framework " + v.dependency});
    if (v.attacker_version_needed) f.attacker_version_needed = v.attacker_version_needed->raw();
    f.rationale = v.rationale + kConfusionImpactNote;
    if (probes) {
      if (auto it = probes->trunk.find(v.dependency); it != probes->trunk.end()) {
        add_probe_evidence(f, it->second.evidence);
        if (it->second.state == AvailabilityState::available) {
          f.severity = escalate(f.severity);
          f.rationale += " The name is unclaimed on trunk, so anyone can publish it today.";
        }
      }
    }
    out.push_back(std::move(f));
  }

  if (probes) {
    for (const auto& npm : scan.npm_names) {
      if (config.private_names.contains(npm.package_name)) continue;
      auto it = probes->npm.find(npm.package_name);
      if (it == probes->npm.end() || it->second.state != AvailabilityState::available) continue;
      Finding f = make(RuleId::CONFUSION_NPM, base_severity(RuleId::CONFUSION_NPM, config), npm.package_name);
      f.evidence.push_back({"bundle", npm.source_path});
      add_probe_evidence(f, it->second.evidence);
      f.rationale = "The bundle ships npm package " + npm.package_name +
                    " but the name is unregistered on the public npm registry; a build that resolves it from the "
                    "public registry would fetch whatever an attacker publishes there.";
      out.push_back(std::move(f));
    }
  }
  return dedupe(std::move(out));
}

std::vector<Finding> evaluate_pod_manifest(const Manifest& manifest, const SpecIndex& index,
                                           const ProbeResults* probes, const RiskConfig& config) {
  std::vector<Finding> out;
  auto escalate_if_claimable = [&](Finding& f, const std::string& name) {
    if (!probes) return;
    auto it = probes->trunk.find(root_pod_name(name));
    if (it == probes->trunk.end()) return;
    add_probe_evidence(f, it->second.evidence);
    if (it->second.state == AvailabilityState::available) {
      f.severity = escalate(f.severity);
      f.rationale += " The name is unclaimed on trunk, so anyone can publish it today.";
    }
  };

  if (manifest.kind == ManifestKind::podfile) {
    for (const auto& v : analyze_podfile(manifest, index)) {
      if (v.classification != Classification::unregistered_confusable &&
          v.classification != Classification::shadowable_multisource) {
        continue;
      }
      if (config.private_names.contains(v.dependency) || config.private_names.contains(root_pod_name(v.dependency))) {
        continue;
      }
      const bool confusable = v.classification == Classification::unregistered_confusable;
      Finding f = make(RuleId::CONFUSION_POD_MANIFEST,
                       confusable ? base_severity(RuleId::CONFUSION_POD_MANIFEST, config) : Severity::info,
                       v.dependency);
      std::string order;
      for (const auto& s : manifest.sources_in_order) order += (order.empty() ? "" : " > ") + s;
      f.evidence.push_back({"podfile", "pod '" + v.dependency + "' without :source, :git or :path"});
      f.evidence.push_back({"podfile", "source order: " + (order.empty() ? std::string("(none, trunk implied)") : order)});
      f.evidence.push_back({"spec-index", confusable ? "no public pod named " + root_pod_name(v.dependency)
                                                     : "public pod " + root_pod_name(v.dependency) + " exists"});
      if (v.attacker_version_needed) f.attacker_version_needed = v.attacker_version_needed->raw();
      f.rationale = v.rationale;
      if (confusable) escalate_if_claimable(f, v.dependency);
      out.push_back(std::move(f));
    }
    return dedupe(std::move(out));
  }

  if (manifest.kind != ManifestKind::podfile_lock) {
    throw Error(ErrorCode::WrongManifestKind,
                "expected a Podfile or Podfile.lock, got " + std::string(to_string(manifest.kind)));
  }
  // A lockfile only tells which spec repo each pod came from. Pods served by
  // a private repo and unknown to the public index are exposed on the next
  // `pod update` if a public copy appears.
  for (const auto& e : manifest.entries) {
    if (e.explicit_location) continue;
    auto repo = e.metadata.find("spec_repo");
    if (repo == e.metadata.end() || e.name.find('/') != std::string::npos) continue;
    if (repo->second == "trunk" || is_public_cocoapods_source(repo->second)) continue;
    if (find_pod(index, e.name) || config.private_names.contains(e.name)) continue;
    Finding f = make(RuleId::CONFUSION_POD_MANIFEST, reduce(base_severity(RuleId::CONFUSION_POD_MANIFEST, config)), e.name);
    f.evidence.push_back({"podfile-lock", "SPEC REPOS " + repo->second + " provides " + e.name});
    f.evidence.push_back({"spec-index", "no public pod named " + e.name});
    if (!e.requirements.empty() && e.requirements.front().version) {
      f.attacker_version_needed = e.requirements.front().version->raw();
    }
    if (auto cs = e.metadata.find("checksum"); cs != e.metadata.end()) {
      f.evidence.push_back({"podfile-lock", "SPEC CHECKSUMS " + e.name + ": " + cs->second});
    }
    f.mitigated_by = "Podfile.lock records the resolved version and spec checksum";
    f.rationale = "Resolved from the private spec repo " + repo->second +
                  " and absent from the public index; if the Podfile also lists the public source first, the next "
                  "`pod update` or lock regeneration can pick up a public copy with a matching version.";
    escalate_if_claimable(f, e.name);
    out.push_back(std::move(f));
  }
  return dedupe(std::move(out));
}

ProbeNeeds probe_needs_for_pod(const PodRecord& record, const std::vector<PodOwner>& owners) {
  ProbeNeeds needs;
  for (const auto& o : owners) needs.domains.insert(o.email_domain);
  for (const auto& v : record.versions) {
    Target t = target_for_url(v.source_url);
    if (t.kind == Target::github) needs.github.insert(t.key);
    else if (t.kind == Target::domain) needs.domains.insert(t.key);
  }
  return needs;
}

ProbeNeeds probe_needs_for_manifest(const Manifest& manifest) {
  ProbeNeeds needs;
  for (const auto& e : manifest.entries) {
    Target t;
    if (manifest.kind == ManifestKind::go_mod) {
      if (e.explicit_location && e.explicit_location->kind == LocationKind::local_path) continue;
      auto replaced = e.metadata.find("replaced_by");
      t = target_for_go_module(replaced != e.metadata.end() ? replaced->second : e.name);
    } else if (e.explicit_location && e.explicit_location->kind != LocationKind::local_path) {
      t = target_for_url(e.explicit_location->value);
    }
    if (t.kind == Target::github) needs.github.insert(t.key);
    else if (t.kind == Target::domain) needs.domains.insert(t.key);
  }
  return needs;
}

std::vector<Finding> evaluate_pod_hijack(const PodRecord& record, const std::vector<PodOwner>& owners,
                                         const ProbeResults& probes, const RiskConfig& config) {
  std::vector<Finding> out;
  const IntegrityProfile profile = integrity_profile(record);
  const bool all_pinned = profile == IntegrityProfile::all_versions_pinned;
  const bool prepare = std::any_of(record.versions.begin(), record.versions.end(),
                                   [](const PodVersionSpec& v) { return v.has_prepare_command; });
  const std::string prepare_note = prepare ? kPrepareCommandNote : "";

  for (const auto& owner : owners) {
    const Availability& a = need_domain(probes, owner.email_domain);
    if (a.state != AvailabilityState::available) continue;
    Finding f = make(RuleId::HIJACK_OWNER_DOMAIN, base_severity(RuleId::HIJACK_OWNER_DOMAIN, config), record.name);
    f.evidence.push_back({"cocoapods-trunk", "owner " + owner.owner_name + " <" + owner.email + ">"});
    add_probe_evidence(f, a.evidence);
    f.rationale = "Owner email domain " + owner.email_domain +
                  " is unregistered. Trunk sessions are granted by an emailed link with no password, so whoever "
                  "registers the domain can take over the pod and push new versions." + prepare_note;
    out.push_back(std::move(f));
  }

  // Source URL takeover, then the unpinned versions that remain exposed.
  std::set<std::string> exposed_versions;
  for (const auto& v : record.versions) {
    Target t = target_for_url(v.source_url);
    if (t.kind == Target::none) continue;
    std::optional<Finding> f;
    if (t.kind == Target::github) {
      const GitHubRepoStatus& s = need_github(probes, t.key);
      if (!github_takeover_state(s.state)) continue;
      f = make(RuleId::HIJACK_GITHUB_NAMESPACE, base_severity(RuleId::HIJACK_GITHUB_NAMESPACE, config), record.name);
      f->requires_manual_verification = true;
      add_probe_evidence(*f, s.evidence);
      f->rationale = "Source " + v.source_url + " points at GitHub where " + github_state_text(s) +
                     ". Re-registering the namespace would serve attacker code unless GitHub has retired the name; "
                     "retirement cannot be checked automatically, so verify manually." + prepare_note;
    } else {
      const Availability& a = need_domain(probes, t.key);
      if (a.state != AvailabilityState::available) continue;
      f = make(RuleId::HIJACK_SOURCE_DOMAIN, base_severity(RuleId::HIJACK_SOURCE_DOMAIN, config), record.name);
      add_probe_evidence(*f, a.evidence);
      f->rationale = "Source " + v.source_url + " is hosted on the unregistered domain " + t.key +
                     "; registering it lets an attacker serve different content at the same URL." + prepare_note;
    }
    f->evidence.insert(f->evidence.begin(), EvidenceRef{"spec-index", record.name + " " + v.version + " source " + v.source_url});
    if (all_pinned) {
      f->severity = reduce(f->severity);
      f->mitigated_by = "commit/archive hash on all versions";
    }
    if (!is_pinned(v)) exposed_versions.insert(v.version);
    out.push_back(std::move(*f));
  }

  if (!exposed_versions.empty()) {
    Finding f = make(RuleId::PIN_MISSING, base_severity(RuleId::PIN_MISSING, config), record.name);
    for (const auto& v : record.versions) {
      if (exposed_versions.contains(v.version)) {
        f.evidence.push_back({"spec-index", record.name + " " + v.version + " has no commit or archive hash (" +
                                                std::string(to_string(v.source_kind)) + " " + v.source_url + ")"});
      }
    }
    f.rationale = "These versions fetch from a takeover-prone URL without a commit or archive hash, so nothing "
                  "detects swapped content.";
    out.push_back(std::move(f));
  }
  return dedupe(std::move(out));
}

std::vector<Finding> evaluate_go_manifest(const Manifest& manifest, const ProbeResults& probes,
                                          const RiskConfig& config) {
  if (manifest.kind != ManifestKind::go_mod) {
    throw Error(ErrorCode::WrongManifestKind, "expected go_mod, got " + std::string(to_string(manifest.kind)));
  }
  std::vector<Finding> out;
  for (const auto& e : manifest.entries) {
    if (e.explicit_location && e.explicit_location->kind == LocationKind::local_path) continue;
    auto replaced = e.metadata.find("replaced_by");
    const std::string module = replaced != e.metadata.end() ? replaced->second : e.name;
    Target t = target_for_go_module(module);
    if (t.kind == Target::none) continue;

    Finding f = make(RuleId::GO_HIJACK, base_severity(RuleId::GO_HIJACK, config), module);
    auto version = e.metadata.find("version");
    f.evidence.push_back({"go.mod", "require " + e.name + (version != e.metadata.end() ? " " + version->second : "")});
    if (replaced != e.metadata.end()) f.evidence.push_back({"go.mod", "replace " + e.name + " => " + module});
    if (t.kind == Target::github) {
      const GitHubRepoStatus& s = need_github(probes, t.key);
      if (!github_takeover_state(s.state)) continue;
      f.requires_manual_verification = true;
      add_probe_evidence(f, s.evidence);
      f.rationale = "Module " + module + " is fetched from GitHub where " + github_state_text(s) +
                    ". GitHub retires popular names, which blocks most such takeovers, but that cannot be checked "
                    "automatically; verify manually.";
    } else {
      const Availability& a = need_domain(probes, t.key);
      if (a.state != AvailabilityState::available) continue;
      add_probe_evidence(f, a.evidence);
      f.rationale = "Module " + module + " resolves through the unregistered domain " + t.key +
                    "; registering it lets an attacker answer the go-get lookup for new versions. go.sum only "
                    "protects versions already recorded.";
    }
    out.push_back(std::move(f));
  }
  return dedupe(std::move(out));
}

std::vector<Finding> evaluate_manifest_sources(const Manifest& manifest, const ProbeResults& probes,
                                               const RiskConfig& config) {
  std::vector<Finding> out;
  for (const auto& e : manifest.entries) {
    if (!e.explicit_location || e.explicit_location->kind == LocationKind::local_path) continue;
    const std::string& url = e.explicit_location->value;
    Target t = target_for_url(url);
    if (t.kind == Target::none) continue;
    std::optional<Finding> f;
    if (t.kind == Target::github) {
      const GitHubRepoStatus& s = need_github(probes, t.key);
      if (!github_takeover_state(s.state)) continue;
      f = make(RuleId::HIJACK_GITHUB_NAMESPACE, base_severity(RuleId::HIJACK_GITHUB_NAMESPACE, config), e.name);
      f->requires_manual_verification = true;
      add_probe_evidence(*f, s.evidence);
      f->rationale = "Dependency " + e.name + " is fetched from " + url + " where " + github_state_text(s) +
                     ". Retirement cannot be checked automatically; verify manually.";
    } else {
      const Availability& a = need_domain(probes, t.key);
      if (a.state != AvailabilityState::available) continue;
      f = make(RuleId::HIJACK_SOURCE_DOMAIN, base_severity(RuleId::HIJACK_SOURCE_DOMAIN, config), e.name);
      add_probe_evidence(*f, a.evidence);
      f->rationale = "Dependency " + e.name + " is fetched from " + url + " on the unregistered domain " + t.key + ".";
    }
    f->evidence.insert(f->evidence.begin(),
                       EvidenceRef{std::string(to_string(manifest.kind)), e.name + " from " + url});
    if (e.pinned_revision && is_commit_hash(*e.pinned_revision)) {
      f->severity = reduce(f->severity);
      f->mitigated_by = "pinned to commit " + *e.pinned_revision;
    } else {
      Finding pin = make(RuleId::PIN_MISSING, base_severity(RuleId::PIN_MISSING, config), e.name);
      auto tag = e.metadata.find("tag");
      pin.evidence.push_back({std::string(to_string(manifest.kind)),
                              e.name + " resolved by " + (tag != e.metadata.end() ? "tag " + tag->second : "mutable ref") +
                                  " without a commit hash"});
      pin.rationale = "The dependency is fetched from a takeover-prone URL by a mutable reference.";
      out.push_back(std::move(pin));
    }
    out.push_back(std::move(*f));
  }
  return dedupe(std::move(out));
}

}  // namespace chainaudit
