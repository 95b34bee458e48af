#pragma once

#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chainaudit/bundle.hpp"
#include "chainaudit/manifest.hpp"
#include "chainaudit/spec_index.hpp"
#include "chainaudit/version.hpp"

namespace chainaudit {

enum class Classification {
  explicit_location_safe,
  public_only,
  unregistered_confusable,
  shadowable_multisource,
  local_path_safe,
  private_first_safe,
};
std::string_view to_string(Classification c);

struct ResolutionVerdict {
  std::string dependency;
  Classification classification = Classification::public_only;
  std::optional<VersionString> attacker_version_needed;
  std::string rationale;
};

/// Whether a Podfile `source` URL names the public CocoaPods trunk (CDN or
/// the Specs git repository).
bool is_public_cocoapods_source(std::string_view url);

/// Smallest version that satisfies every requirement; `0.0.1` when nothing
/// constrains it. Throws Error{UnsatisfiableRequirements}.
VersionString attacker_target_version(std::span<const Requirement> requirements);

/// Throws Error{WrongManifestKind} unless the manifest is a Podfile.
std::vector<ResolutionVerdict> analyze_podfile(const Manifest& manifest, const SpecIndex& public_index);

/// One verdict per CocoaPods-built framework in the scan.
std::vector<ResolutionVerdict> confusion_report_for_bundle(const BundleScan& scan, const SpecIndex& public_index);

}  // namespace chainaudit
