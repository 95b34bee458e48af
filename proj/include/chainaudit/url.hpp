#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace chainaudit {

struct UrlParts {
  std::string scheme;  // lowercased; "ssh" for scp-like `git@host:path`
  std::string host;    // lowercased, no port or userinfo
  std::string path;    // without leading '/', query or fragment
};

/// Accepts `scheme://[user@]host[:port]/path`, scp-like `user@host:path`,
/// and bare `host/path` (Go module paths). Returns nullopt for local paths
/// and anything without a host.
std::optional<UrlParts> parse_url(std::string_view url);

struct GitHubRepoRef {
  std::string namespace_name;
  std::string image_name;
};

/// `github.com/<ns>/<img>[.git]` in any of the forms parse_url accepts.
std::optional<GitHubRepoRef> github_repo_from_url(std::string_view url);

/// Letters, digits and single hyphens; no leading or trailing hyphen; at
/// most 39 characters.
bool is_valid_github_namespace(std::string_view ns);
/// Letters, digits, `-`, `_` and `.`, not `.` or `..`, at most 100 characters.
bool is_valid_github_repo_name(std::string_view name);

/// Percent-encodes everything outside the RFC 3986 unreserved set.
std::string percent_encode(std::string_view s);

}  // namespace chainaudit
