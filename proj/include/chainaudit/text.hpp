#pragma once

#include <chrono>
#include <string>
#include <string_view>
#include <vector>

namespace chainaudit {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
std::string to_upper(std::string_view s);
bool starts_with_ci(std::string_view s, std::string_view prefix);
std::vector<std::string_view> split(std::string_view s, char sep);
std::vector<std::string_view> split_lines(std::string_view text);

/// True for 7 to 40 lowercase hex characters, the shape of an abbreviated or
/// full git commit id.
bool is_commit_hash(std::string_view s);

using Timestamp = std::chrono::sys_seconds;

/// `YYYY-MM-DDTHH:MM:SSZ`.
std::string format_timestamp(Timestamp t);
/// Inverse of format_timestamp. Returns false on anything else.
bool parse_timestamp(std::string_view s, Timestamp& out);

}  // namespace chainaudit
