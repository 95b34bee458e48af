#include "chainaudit/resolution.hpp"

#include <algorithm>

#include "chainaudit/error.hpp"
#include "chainaudit/text.hpp"

namespace chainaudit {

namespace {

const char* const kUpdateNote =
    " An existing Podfile.lock keeps the locked copy until `pod update` runs or the lock is regenerated.";

// Subspecs such as `Firebase/Analytics` resolve through their root pod.
std::string_view root_pod_name(std::string_view name) { return name.substr(0, name.find('/')); }

VersionString bump_last(const VersionString& v) {
  std::vector<std::uint64_t> c = v.components();
  c.back() += 1;
  return VersionString::from_components(std::move(c));
}

VersionString append_component(const VersionString& v, std::uint64_t value) {
  std::vector<std::uint64_t> c = v.components();
  c.push_back(value);
  return VersionString::from_components(std::move(c));
}

struct SourceOrder {
  std::optional<std::size_t> first_public;
  std::optional<std::size_t> first_private;
  std::optional<std::size_t> last_private;
};

SourceOrder source_order(const Manifest& m) {
  SourceOrder o;
  for (std::size_t i = 0; i < m.sources_in_order.size(); ++i) {
    if (is_public_cocoapods_source(m.sources_in_order[i])) {
      if (!o.first_public) o.first_public = i;
    } else {
      if (!o.first_private) o.first_private = i;
      o.last_private = i;
    }
  }
  return o;
}

std::optional<VersionString> try_target(std::span<const Requirement> reqs, std::string& note) {
  try {
    return attacker_target_version(reqs);
  } catch (const Error& e) {
    note = std::string(" Requirements are unsatisfiable, so no single version would match: ") + e.what() + ".";
    return std::nullopt;
  }
}

}  // namespace

std::string_view to_string(Classification c) {
  switch (c) {
    case Classification::explicit_location_safe: return "explicit_location_safe";
    case Classification::public_only: return "public_only";
    case Classification::unregistered_confusable: return "unregistered_confusable";
    case Classification::shadowable_multisource: return "shadowable_multisource";
    case Classification::local_path_safe: return "local_path_safe";
    case Classification::private_first_safe: return "private_first_safe";
  }
  return "public_only";
}

bool is_public_cocoapods_source(std::string_view url) {
  std::string u = to_lower(trim(url));
  while (!u.empty() && u.back() == '/') u.pop_back();
  if (u == "trunk") return true;
  for (std::string_view scheme : {"https://", "http://"}) {
    if (u.starts_with(scheme)) {
      u.erase(0, scheme.size());
      break;
    }
  }
  if (u.starts_with("www.")) u.erase(0, 4);
  return u == "cdn.cocoapods.org" || u == "github.com/cocoapods/specs" || u == "github.com/cocoapods/specs.git";
}

VersionString attacker_target_version(std::span<const Requirement> requirements) {
  std::vector<VersionString> lower;
  std::vector<VersionString> alternatives;
  for (const auto& r : requirements) {
    if (r.op == RequirementOp::any || !r.version) continue;
    switch (r.op) {
      case RequirementOp::exact:
      case RequirementOp::gte:
      case RequirementOp::pessimistic:
        lower.push_back(*r.version);
        break;
      case RequirementOp::gt:
        lower.push_back(bump_last(*r.version));
        alternatives.push_back(append_component(*r.version, 1));
        break;
      default:
        break;
    }
  }

  const VersionString sentinel = VersionString::from_components({0, 0, 1});
  const VersionString primary = lower.empty() ? sentinel : *std::max_element(lower.begin(), lower.end());
  if (satisfies_all(primary, requirements)) return primary;

  // The rule-of-thumb candidate can overshoot an upper bound (`> 1.0, < 1.1`);
  // fall back to the smallest finer-grained candidate that fits.
  alternatives.push_back(VersionString::from_components({0, 0, 0}));
  for (const auto& base : lower) alternatives.push_back(append_component(base, 1));
  std::optional<VersionString> best;
  for (const auto& c : alternatives) {
    if (satisfies_all(c, requirements) && (!best || c < *best)) best = c;
  }
  if (best) return *best;

  std::string text;
  for (const auto& r : requirements) {
    if (!text.empty()) text += ", ";
    text += r.to_string();
  }
  throw Error(ErrorCode::UnsatisfiableRequirements, "no version satisfies [" + text + "]");
}

std::vector<ResolutionVerdict> analyze_podfile(const Manifest& manifest, const SpecIndex& public_index) {
  if (manifest.kind != ManifestKind::podfile) {
    throw Error(ErrorCode::WrongManifestKind,
                "expected a podfile manifest, got " + std::string(to_string(manifest.kind)));
  }
  const SourceOrder order = source_order(manifest);
  const bool private_first =
      order.first_private && (!order.first_public || *order.first_private < *order.first_public);
  const bool public_shadows =
      manifest.sources_in_order.size() >= 2 && order.first_public && order.last_private &&
      *order.first_public < *order.last_private;

  std::vector<ResolutionVerdict> out;
  for (const auto& e : manifest.entries) {
    ResolutionVerdict v;
    v.dependency = e.name;
    if (e.explicit_location && e.explicit_location->kind == LocationKind::local_path) {
      v.classification = Classification::local_path_safe;
      v.rationale = "Fetched from the local path '" + e.explicit_location->value + "'; no registry is consulted.";
    } else if (e.explicit_location) {
      v.classification = Classification::explicit_location_safe;
      v.rationale = "Pinned to " + std::string(to_string(e.explicit_location->kind)) + " '" +
                    e.explicit_location->value + "', so other sources are not searched for this pod.";
    } else if (!find_pod(public_index, root_pod_name(e.name))) {
      if (private_first) {
        v.classification = Classification::private_first_safe;
        v.rationale = "Not in the public index, but the private source '" +
                      manifest.sources_in_order[*order.first_private] +
                      "' is searched before any public source, so a public copy would not be chosen.";
      } else {
        std::string note;
        v.classification = Classification::unregistered_confusable;
        v.attacker_version_needed = try_target(e.requirements, note);
        v.rationale = "Name is not registered in the public index and the public source is searched first";
        v.rationale += manifest.sources_in_order.empty() ? " (no source declared, trunk is the default)." : ".";
        v.rationale += " Anyone can register it publicly with a matching version." + note + kUpdateNote;
      }
    } else if (public_shadows) {
      std::string note;
      v.classification = Classification::shadowable_multisource;
      v.attacker_version_needed = try_target(e.requirements, note);
      v.rationale = "Registered publicly and the public source precedes a private one; a same-named private pod "
                    "would be shadowed by the public copy." + note;
    } else {
      v.classification = Classification::public_only;
      v.rationale = "Registered in the public index; no private source competes for the name.";
    }
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<ResolutionVerdict> confusion_report_for_bundle(const BundleScan& scan, const SpecIndex& public_index) {
  std::vector<ResolutionVerdict> out;
  for (const auto& fw : scan.frameworks) {
    if (!fw.is_cocoapods) continue;
    ResolutionVerdict v;
    v.dependency = fw.framework_name;
    auto pods = lookup_framework(public_index, fw.framework_name);
    if (pods.empty()) {
      v.classification = Classification::unregistered_confusable;
      if (fw.bundle_version) v.attacker_version_needed = VersionString::parse(*fw.bundle_version);
      v.rationale = "Built by CocoaPods (" + fw.bundle_identifier.value_or("") +
                    ") but no public pod ships a framework with this name";
      v.rationale += fw.bundle_version ? "; the bundle leaks version " + *fw.bundle_version + "." : ".";
    } else {
      v.classification = Classification::public_only;
      std::string names;
      for (const auto& p : pods) names += (names.empty() ? "" : ", ") + p;
      v.rationale = "Provided by public pod(s): " + names + ".";
    }
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace chainaudit
