#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chainaudit/text.hpp"

namespace chainaudit {

enum class SourceKind { git, http_archive, other };
std::string_view to_string(SourceKind k);

struct PodVersionSpec {
  std::string version;  // raw text; may not parse as a VersionString
  SourceKind source_kind = SourceKind::other;
  std::string source_url;
  std::optional<std::string> git_tag;
  std::optional<std::string> git_commit;
  std::optional<std::string> archive_sha;
  std::optional<std::string> module_name;
  std::optional<std::string> header_dir;
  bool has_prepare_command = false;

  friend bool operator==(const PodVersionSpec&, const PodVersionSpec&) = default;
};

/// A version counts as pinned when it names a commit or an archive digest.
bool is_pinned(const PodVersionSpec& v);

struct PodRecord {
  std::string name;
  std::vector<PodVersionSpec> versions;  // ascending, see version_text_less
  std::set<std::string> effective_framework_names;

  friend bool operator==(const PodRecord&, const PodRecord&) = default;
};

/// Sorts versions, drops duplicate version strings (first wins) and fills
/// effective_framework_names.
PodRecord make_pod_record(std::string name, std::vector<PodVersionSpec> versions);

/// Per version: module_name, else header_dir, else the pod name.
std::set<std::string> effective_framework_names(const PodRecord& record);

enum class IntegrityProfile { all_versions_pinned, some_versions_pinned, never_pinned };
std::string_view to_string(IntegrityProfile p);
IntegrityProfile integrity_profile(const PodRecord& record);

struct SpecIndex {
  std::map<std::string, PodRecord> pods;
  std::map<std::string, std::set<std::string>> framework_name_index;
  Timestamp built_at{};
  std::string source_tree_digest;

  friend bool operator==(const SpecIndex&, const SpecIndex&) = default;
};

/// Assembles an index from records and derives framework_name_index.
SpecIndex make_index(std::vector<PodRecord> records, Timestamp built_at, std::string source_tree_digest);

/// True when framework_name_index is exactly the inverse of every pod's
/// effective_framework_names.
bool framework_index_consistent(const SpecIndex& index);

/// Exact, case-sensitive lookup. Empty means no public pod ships a
/// framework by that name.
std::set<std::string> lookup_framework(const SpecIndex& index, std::string_view framework_name);

/// Name lookup helper; nullptr when absent.
const PodRecord* find_pod(const SpecIndex& index, std::string_view pod_name);

/// Parses one `*.podspec.json` document. Throws Error{MalformedJson}.
PodVersionSpec parse_podspec_json(std::string_view text, std::vector<std::string>* warnings = nullptr);

struct IndexBuildResult {
  SpecIndex index;
  std::size_t skipped = 0;  // unreadable or unparseable podspec files
  std::vector<std::string> warnings;
};

using Clock = std::function<Timestamp()>;
Timestamp system_now();

/// Ingests a Specs checkout (sharded or flat). Uses `<root>/Specs` when it
/// exists. Throws Error{NotADirectory} or Error{EmptyTree}.
IndexBuildResult build_index(const std::filesystem::path& specs_tree, const Clock& clock = system_now,
                             unsigned threads = 0);

inline constexpr std::uint16_t kIndexFormatVersion = 1;

std::vector<std::uint8_t> serialize_index(const SpecIndex& index);
/// Throws Error{FormatVersionMismatch} or IoErrorAt.
SpecIndex deserialize_index(std::span<const std::uint8_t> bytes);

/// Throws Error{IoError}.
void save_index(const SpecIndex& index, const std::filesystem::path& path);
/// Throws Error{IoError}, IoErrorAt or Error{FormatVersionMismatch}.
SpecIndex load_index(const std::filesystem::path& path);

}  // namespace chainaudit
