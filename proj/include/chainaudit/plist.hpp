#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace chainaudit {

/// Property-list integer. Binary plists store up to 128-bit values; anything
/// in [-2^63, 2^64) is representable here.
struct PlistInteger {
  bool negative = false;
  std::uint64_t magnitude = 0;

  std::string to_string() const;
  friend bool operator==(const PlistInteger&, const PlistInteger&) = default;
};

struct PlistData {
  std::vector<std::uint8_t> bytes;
  friend bool operator==(const PlistData&, const PlistData&) = default;
};

struct PlistValue;
using PlistArray = std::vector<PlistValue>;
using PlistDict = std::map<std::string, PlistValue>;

struct PlistValue {
  std::variant<std::string, PlistInteger, bool, double, PlistData, PlistArray, PlistDict> value;

  bool is_scalar() const;
  /// Scalar rendering used by parse_plist: strings verbatim, integers in
  /// decimal, booleans as true/false, reals as `<real:...>` and data as
  /// `<data:N bytes>`.
  std::string to_display_string() const;

  friend bool operator==(const PlistValue&, const PlistValue&);
};

/// Decodes an XML plist or a `bplist00` binary plist into a value tree.
/// Throws Error{MalformedPlist} for bad magic or structure and
/// Error{UnsupportedObject} (naming the kind and byte offset) for object
/// kinds outside dictionary, array, string, integer, boolean, real and data.
PlistValue parse_plist_value(std::span<const std::uint8_t> bytes);

/// Top-level dictionary entries whose values are scalars, stringified.
/// A non-dictionary root is MalformedPlist.
std::map<std::string, std::string> parse_plist(std::span<const std::uint8_t> bytes);

std::map<std::string, std::string> parse_plist(std::string_view bytes);

}  // namespace chainaudit
