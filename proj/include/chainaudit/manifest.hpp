#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chainaudit/version.hpp"

namespace chainaudit {

enum class Ecosystem { cocoapods, carthage, swiftpm, gomod, npm };
enum class LocationKind { source_repo_url, git_url, local_path };
enum class ManifestKind { podfile, podfile_lock, cartfile_resolved, package_resolved, go_mod };

std::string_view to_string(Ecosystem e);
std::string_view to_string(LocationKind k);
std::string_view to_string(ManifestKind k);
std::optional<ManifestKind> manifest_kind_from_string(std::string_view s);

struct ExplicitLocation {
  LocationKind kind;
  std::string value;

  friend bool operator==(const ExplicitLocation&, const ExplicitLocation&) = default;
};

struct DependencyEntry {
  std::string name;
  std::vector<Requirement> requirements;
  std::optional<ExplicitLocation> explicit_location;
  std::optional<std::string> pinned_revision;
  Ecosystem ecosystem = Ecosystem::cocoapods;
  /// Parser-specific extras: `checksum`, `spec_repo`, `tag`, `branch`,
  /// `replaced_by_version`, `go_version`...
  std::map<std::string, std::string> metadata;
  /// Podfile.lock only: dependencies nested under the pod in PODS.
  std::vector<std::string> transitive;
};

struct Manifest {
  ManifestKind kind = ManifestKind::podfile;
  std::vector<std::string> sources_in_order;  // file order is precedence order
  std::vector<DependencyEntry> entries;
  std::vector<std::string> parse_warnings;
  /// File-level extras such as `module`, `go`, `cocoapods_version`.
  std::map<std::string, std::string> metadata;
};

/// Line-oriented Podfile subset: `source` lines and `pod` declarations.
/// Ruby control flow becomes warnings. Never throws.
Manifest parse_podfile(std::string_view text);

/// Throws Error{MalformedLock} when no known section is present.
Manifest parse_podfile_lock(std::string_view text);

/// Never throws; unmatched lines become warnings.
Manifest parse_cartfile_resolved(std::string_view text);

/// Package.resolved schema versions 1, 2 and 3. Throws Error{MalformedJson}
/// or Error{UnknownSchemaVersion}.
Manifest parse_package_resolved(std::string_view text);

/// Never throws; unparseable lines become warnings. Replace directives set
/// the explicit location of the replaced module.
Manifest parse_go_mod(std::string_view text);

Manifest parse_manifest(ManifestKind kind, std::string_view text);

/// Guesses the manifest kind from a file name: `Podfile*`, `*.lock`
/// (Podfile.lock), `Cartfile.resolved`, `Package.resolved`, `go.mod`.
std::optional<ManifestKind> detect_manifest_kind(std::string_view file_name);

/// First path segment of a Go module path (`github.com/a/b` -> `github.com`).
std::string go_module_host(std::string_view module_path);

}  // namespace chainaudit
