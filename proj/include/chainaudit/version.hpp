#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace chainaudit {

/// A dotted numeric version with an optional trailing remainder.
///
/// `2.27.0-beta.1` parses to components {2, 27, 0} and suffix `-beta.1`.
/// Comparison pads the shorter component list with zeros, and any suffix
/// sorts below the same numeric core, so `1.0-rc < 1.0 == 1.0.0`.
class VersionString {
 public:
  static std::optional<VersionString> parse(std::string_view text);
  /// Builds a version from components alone (no suffix).
  static VersionString from_components(std::vector<std::uint64_t> components);

  const std::string& raw() const { return raw_; }
  const std::vector<std::uint64_t>& components() const { return components_; }
  const std::string& suffix() const { return suffix_; }
  bool is_prerelease() const { return !suffix_.empty(); }

  friend std::weak_ordering operator<=>(const VersionString& a, const VersionString& b);
  friend bool operator==(const VersionString& a, const VersionString& b) {
    return (a <=> b) == std::weak_ordering::equivalent;
  }

 private:
  std::string raw_;
  std::vector<std::uint64_t> components_;
  std::string suffix_;
};

/// Orders raw version strings the way the spec index sorts versions:
/// parseable versions by VersionString order (ties by raw text), then
/// unparseable ones lexicographically.
bool version_text_less(std::string_view a, std::string_view b);

enum class RequirementOp { exact, gt, gte, lt, lte, pessimistic, any };

std::string_view to_string(RequirementOp op);

struct Requirement {
  RequirementOp op = RequirementOp::any;
  std::optional<VersionString> version;  // absent iff op == any

  static Requirement any() { return {}; }
  std::string to_string() const;
};

/// `~> 2.27`, `>= 1.0.0`, `1.4.2` (exact), `= 1.4.2`, empty (any).
/// Throws Error{MalformedRequirement}.
Requirement parse_requirement(std::string_view text);

/// Exclusive upper bound of a pessimistic requirement: drop the last
/// component and bump the new last one (`2.27.3` -> `2.28`, `2.27` -> `3`).
VersionString pessimistic_upper_bound(const VersionString& base);

bool satisfies(const VersionString& version, const Requirement& req);
bool satisfies_all(const VersionString& version, std::span<const Requirement> reqs);

/// Highest version satisfying every requirement; ties between equivalent
/// versions go to the lexicographically greatest raw text.
std::optional<VersionString> best_match(std::span<const VersionString> versions,
                                        std::span<const Requirement> reqs);

}  // namespace chainaudit
