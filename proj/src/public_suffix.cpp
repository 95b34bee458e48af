#include "chainaudit/public_suffix.hpp"

#include <unordered_set>

#include "chainaudit/error.hpp"
#include "chainaudit/text.hpp"

namespace chainaudit::detail {
extern const std::string_view kPublicSuffixRules;
}

namespace chainaudit {

namespace {

struct RuleSet {
  std::unordered_set<std::string_view> exact;
  std::unordered_set<std::string_view> wildcard;   // stored without "*."
  std::unordered_set<std::string_view> exception;  // stored without "!"

  RuleSet() {
    for (std::string_view rule : split(detail::kPublicSuffixRules, '\n')) {
      if (rule.empty()) continue;
      if (rule.starts_with("*.")) wildcard.insert(rule.substr(2));
      else if (rule.starts_with('!')) exception.insert(rule.substr(1));
      else exact.insert(rule);
    }
  }
};

const RuleSet& rules() {
  static const RuleSet set;
  return set;
}

bool valid_label(std::string_view label) {
  if (label.empty() || label.size() > 63 || label.front() == '-' || label.back() == '-') return false;
  for (char c : label) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' || c == '_';
    if (!ok) return false;
  }
  return true;
}

}  // namespace

std::string public_suffix(std::string_view host) {
  const RuleSet& r = rules();
  // Walk suffixes from longest to shortest; first hit is the longest match.
  std::size_t pos = 0;
  while (true) {
    std::string_view candidate = host.substr(pos);
    if (r.exception.contains(candidate)) {
      auto dot = candidate.find('.');
      return std::string(candidate.substr(dot + 1));
    }
    if (r.exact.contains(candidate)) return std::string(candidate);
    auto dot = candidate.find('.');
    if (dot != std::string_view::npos && r.wildcard.contains(candidate.substr(dot + 1))) {
      return std::string(candidate);
    }
    if (dot == std::string_view::npos) return std::string(candidate);
    pos += dot + 1;
  }
}

std::string registrable_domain(std::string_view host_or_email) {
  std::string_view input = trim(host_or_email);
  if (auto at = input.rfind('@'); at != std::string_view::npos) input = input.substr(at + 1);
  std::string host = to_lower(input);
  while (!host.empty() && host.back() == '.') host.pop_back();
  if (host.empty()) throw Error(ErrorCode::NotADomain, "empty host in '" + std::string(host_or_email) + "'");
  for (std::string_view label : split(host, '.')) {
    if (!valid_label(label)) throw Error(ErrorCode::NotADomain, "'" + host + "' is not a domain name");
  }
  if (host.find('.') == std::string::npos && !rules().exact.contains(host)) {
    throw Error(ErrorCode::NotADomain, "'" + host + "' has no top-level domain");
  }
  bool numeric = true;
  for (char c : host) numeric = numeric && ((c >= '0' && c <= '9') || c == '.');
  if (numeric) throw Error(ErrorCode::NotADomain, "'" + host + "' is an IP address");

  std::string suffix = public_suffix(host);
  if (suffix.size() >= host.size()) throw Error(ErrorCode::PublicSuffixOnly, "'" + host + "' is a public suffix");
  std::string_view head = std::string_view(host).substr(0, host.size() - suffix.size() - 1);
  auto dot = head.rfind('.');
  std::string_view label = dot == std::string_view::npos ? head : head.substr(dot + 1);
  return std::string(label) + "." + suffix;
}

}  // namespace chainaudit
