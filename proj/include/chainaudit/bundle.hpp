#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace chainaudit {

inline constexpr std::string_view kCocoaPodsIdentifierPrefix = "org.cocoapods.";

/// One `<name>.framework` directory found under a `Frameworks` directory.
struct FrameworkRecord {
  std::string framework_name;
  std::optional<std::string> bundle_identifier;
  std::optional<std::string> bundle_version;
  bool is_cocoapods = false;
  std::string plist_path;  // relative to the bundle root, '/' separated

  friend bool operator==(const FrameworkRecord&, const FrameworkRecord&) = default;
};

/// npm package name leaked through a bundled `node_modules/` or
/// `www/plugins/` path.
struct NpmNameRecord {
  std::string package_name;
  std::string source_path;

  friend bool operator==(const NpmNameRecord&, const NpmNameRecord&) = default;
  friend bool operator<(const NpmNameRecord& a, const NpmNameRecord& b) { return a.package_name < b.package_name; }
};

struct BundleScan {
  std::filesystem::path bundle_path;
  std::vector<FrameworkRecord> frameworks;  // sorted by framework_name
  std::set<NpmNameRecord> npm_names;        // unique by package_name
  std::vector<std::string> scan_warnings;

  friend bool operator==(const BundleScan&, const BundleScan&) = default;
};

/// Walks an extracted app bundle. Throws Error{NotADirectory} or
/// Error{IoError}.
BundleScan scan_bundle(const std::filesystem::path& path);

/// Pure filter over '/'-separated relative paths.
std::set<NpmNameRecord> extract_npm_names(const std::vector<std::string>& paths);

/// Whether the identifier carries the CocoaPods bundle-identifier prefix.
bool is_cocoapods_identifier(std::string_view identifier);

}  // namespace chainaudit
