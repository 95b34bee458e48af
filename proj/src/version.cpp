#include "chainaudit/version.hpp"

#include <algorithm>
#include <limits>

#include "chainaudit/error.hpp"
#include "chainaudit/text.hpp"

namespace chainaudit {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

}  // namespace

std::optional<VersionString> VersionString::parse(std::string_view text) {
  if (text.empty() || !is_digit(text.front())) return std::nullopt;
  VersionString v;
  v.raw_ = std::string(text);
  std::size_t pos = 0;
  while (true) {
    std::uint64_t value = 0;
    std::size_t start = pos;
    while (pos < text.size() && is_digit(text[pos])) {
      auto digit = static_cast<std::uint64_t>(text[pos] - '0');
      if (value > (std::numeric_limits<std::uint64_t>::max() - digit) / 10) return std::nullopt;
      value = value * 10 + digit;
      ++pos;
    }
    if (pos == start) return std::nullopt;
    v.components_.push_back(value);
    if (pos + 1 < text.size() && text[pos] == '.' && is_digit(text[pos + 1])) {
      ++pos;
      continue;
    }
    break;
  }
  v.suffix_ = std::string(text.substr(pos));
  return v;
}

VersionString VersionString::from_components(std::vector<std::uint64_t> components) {
  VersionString v;
  v.components_ = std::move(components);
  if (v.components_.empty()) v.components_.push_back(0);
  for (std::size_t i = 0; i < v.components_.size(); ++i) {
    if (i) v.raw_ += '.';
    v.raw_ += std::to_string(v.components_[i]);
  }
  return v;
}

std::weak_ordering operator<=>(const VersionString& a, const VersionString& b) {
  const std::size_t n = std::max(a.components_.size(), b.components_.size());
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t x = i < a.components_.size() ? a.components_[i] : 0;
    std::uint64_t y = i < b.components_.size() ? b.components_[i] : 0;
    if (x != y) return x < y ? std::weak_ordering::less : std::weak_ordering::greater;
  }
  if (a.suffix_.empty() != b.suffix_.empty()) {
    return a.suffix_.empty() ? std::weak_ordering::greater : std::weak_ordering::less;
  }
  int c = a.suffix_.compare(b.suffix_);
  if (c == 0) return std::weak_ordering::equivalent;
  return c < 0 ? std::weak_ordering::less : std::weak_ordering::greater;
}

bool version_text_less(std::string_view a, std::string_view b) {
  auto va = VersionString::parse(a);
  auto vb = VersionString::parse(b);
  if (va && vb) {
    auto c = *va <=> *vb;
    if (c != 0) return c < 0;
    return a < b;
  }
  if (va.has_value() != vb.has_value()) return va.has_value();
  return a < b;
}

std::string_view to_string(RequirementOp op) {
  switch (op) {
    case RequirementOp::exact: return "exact";
    case RequirementOp::gt: return "gt";
    case RequirementOp::gte: return "gte";
    case RequirementOp::lt: return "lt";
    case RequirementOp::lte: return "lte";
    case RequirementOp::pessimistic: return "pessimistic";
    case RequirementOp::any: return "any";
  }
  return "any";
}

std::string Requirement::to_string() const {
  if (op == RequirementOp::any || !version) return ">= 0";
  std::string_view sym;
  switch (op) {
    case RequirementOp::exact: sym = "= "; break;
    case RequirementOp::gt: sym = "> "; break;
    case RequirementOp::gte: sym = ">= "; break;
    case RequirementOp::lt: sym = "< "; break;
    case RequirementOp::lte: sym = "<= "; break;
    case RequirementOp::pessimistic: sym = "~> "; break;
    case RequirementOp::any: break;
  }
  return std::string(sym) + version->raw();
}

Requirement parse_requirement(std::string_view text) {
  std::string_view s = trim(text);
  if (s.empty()) return Requirement::any();

  RequirementOp op = RequirementOp::exact;
  static constexpr std::pair<std::string_view, RequirementOp> kOps[] = {
      {"~>", RequirementOp::pessimistic}, {">=", RequirementOp::gte}, {"<=", RequirementOp::lte},
      {"==", RequirementOp::exact},       {">", RequirementOp::gt},   {"<", RequirementOp::lt},
      {"=", RequirementOp::exact},
  };
  for (const auto& [sym, kind] : kOps) {
    if (s.substr(0, sym.size()) == sym) {
      op = kind;
      s = trim(s.substr(sym.size()));
      break;
    }
  }
  if (s.empty()) {
    throw Error(ErrorCode::MalformedRequirement, "operator without version in '" + std::string(text) + "'");
  }
  auto version = VersionString::parse(s);
  if (!version) {
    throw Error(ErrorCode::MalformedRequirement, "unparseable version in '" + std::string(text) + "'");
  }
  if (op == RequirementOp::pessimistic && version->components().size() < 2) {
    throw Error(ErrorCode::MalformedRequirement,
                "pessimistic requirement needs at least two components: '" + std::string(text) + "'");
  }
  return Requirement{op, std::move(version)};
}

VersionString pessimistic_upper_bound(const VersionString& base) {
  std::vector<std::uint64_t> c = base.components();
  if (c.size() >= 2) c.pop_back();
  c.back() += 1;
  return VersionString::from_components(std::move(c));
}

bool satisfies(const VersionString& version, const Requirement& req) {
  if (req.op == RequirementOp::any || !req.version) return true;
  const VersionString& bound = *req.version;
  auto c = version <=> bound;
  switch (req.op) {
    case RequirementOp::exact: return c == 0;
    case RequirementOp::gt: return c > 0;
    case RequirementOp::gte: return c >= 0;
    case RequirementOp::lt: return c < 0;
    case RequirementOp::lte: return c <= 0;
    case RequirementOp::pessimistic: return c >= 0 && version < pessimistic_upper_bound(bound);
    case RequirementOp::any: return true;
  }
  return false;
}

bool satisfies_all(const VersionString& version, std::span<const Requirement> reqs) {
  return std::all_of(reqs.begin(), reqs.end(), [&](const Requirement& r) { return satisfies(version, r); });
}

std::optional<VersionString> best_match(std::span<const VersionString> versions,
                                        std::span<const Requirement> reqs) {
  const VersionString* best = nullptr;
  for (const auto& v : versions) {
    if (!satisfies_all(v, reqs)) continue;
    if (!best) {
      best = &v;
      continue;
    }
    auto c = v <=> *best;
    if (c > 0 || (c == 0 && v.raw() > best->raw())) best = &v;
  }
  if (!best) return std::nullopt;
  return *best;
}

}  // namespace chainaudit
