#include "chainaudit/url.hpp"

#include "chainaudit/text.hpp"

namespace chainaudit {

namespace {

bool valid_host(std::string_view host) {
  if (host.empty() || host.size() > 253) return false;
  for (char c : host) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' || c == '.' || c == '_';
    if (!ok) return false;
  }
  return host.front() != '.' && host.front() != '-';
}

std::string_view cut_query(std::string_view path) {
  auto q = path.find_first_of("?#");
  return q == std::string_view::npos ? path : path.substr(0, q);
}

}  // namespace

std::optional<UrlParts> parse_url(std::string_view url) {
  url = trim(url);
  if (url.empty() || url.front() == '/' || url.front() == '.' || url.front() == '~') return std::nullopt;
  UrlParts out;
  std::string_view rest;
  auto scheme_end = url.find("://");
  if (scheme_end != std::string_view::npos) {
    out.scheme = to_lower(url.substr(0, scheme_end));
    if (out.scheme == "file") return std::nullopt;
    rest = url.substr(scheme_end + 3);
    auto slash = rest.find('/');
    std::string_view authority = rest.substr(0, slash);
    rest = slash == std::string_view::npos ? std::string_view{} : rest.substr(slash + 1);
    if (auto at = authority.rfind('@'); at != std::string_view::npos) authority.remove_prefix(at + 1);
    if (authority.starts_with('[')) return std::nullopt;  // IP literals carry no domain
    if (auto colon = authority.find(':'); colon != std::string_view::npos) authority = authority.substr(0, colon);
    out.host = to_lower(authority);
  } else {
    auto colon = url.find(':');
    auto slash = url.find('/');
    if (colon != std::string_view::npos && (slash == std::string_view::npos || colon < slash)) {
      // scp-like git@host:path
      std::string_view authority = url.substr(0, colon);
      if (auto at = authority.rfind('@'); at != std::string_view::npos) authority.remove_prefix(at + 1);
      out.scheme = "ssh";
      out.host = to_lower(authority);
      rest = url.substr(colon + 1);
    } else {
      out.host = to_lower(url.substr(0, slash));
      rest = slash == std::string_view::npos ? std::string_view{} : url.substr(slash + 1);
      // A bare word without a dot is a relative path, not a host.
      if (out.host.find('.') == std::string::npos) return std::nullopt;
    }
  }
  while (!out.host.empty() && out.host.back() == '.') out.host.pop_back();
  if (!valid_host(out.host)) return std::nullopt;
  rest = cut_query(rest);
  while (rest.starts_with('/')) rest.remove_prefix(1);
  out.path = std::string(rest);
  return out;
}

std::optional<GitHubRepoRef> github_repo_from_url(std::string_view url) {
  auto parts = parse_url(url);
  if (!parts) return std::nullopt;
  if (parts->host != "github.com" && parts->host != "www.github.com") return std::nullopt;
  auto segments = split(parts->path, '/');
  if (segments.size() < 2 || segments[0].empty() || segments[1].empty()) return std::nullopt;
  std::string_view image = segments[1];
  if (image.ends_with(".git")) image.remove_suffix(4);
  if (!is_valid_github_namespace(segments[0]) || !is_valid_github_repo_name(image)) return std::nullopt;
  return GitHubRepoRef{std::string(segments[0]), std::string(image)};
}

bool is_valid_github_namespace(std::string_view ns) {
  if (ns.empty() || ns.size() > 39 || ns.front() == '-' || ns.back() == '-') return false;
  char prev = 0;
  for (char c : ns) {
    bool alnum = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
    if (!alnum && c != '-') return false;
    if (c == '-' && prev == '-') return false;
    prev = c;
  }
  return true;
}

bool is_valid_github_repo_name(std::string_view name) {
  if (name.empty() || name.size() > 100 || name == "." || name == "..") return false;
  for (char c : name) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
              c == '_' || c == '.';
    if (!ok) return false;
  }
  return true;
}

std::string percent_encode(std::string_view s) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    bool unreserved = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                      c == '.' || c == '_' || c == '~';
    if (unreserved) {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += kHex[c >> 4];
      out += kHex[c & 0xF];
    }
  }
  return out;
}

}  // namespace chainaudit
