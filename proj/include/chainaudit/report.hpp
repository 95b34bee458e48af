#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "chainaudit/risk.hpp"
#include "chainaudit/text.hpp"

namespace chainaudit {

inline constexpr int kReportSchema = 1;
std::string_view tool_version();

struct ReportInput {
  std::string kind;  // "bundle", "manifest:podfile", "domain", ...
  std::string path_or_name;

  friend bool operator==(const ReportInput&, const ReportInput&) = default;
};

struct Report {
  std::string tool_version;
  std::vector<ReportInput> inputs;
  std::vector<Finding> findings;  // severity_order
  std::map<RuleId, std::size_t> stats;
  Timestamp generated_at{};
  std::vector<std::string> warnings;

  friend bool operator==(const Report&, const Report&) = default;
};

/// Deduplicates and sorts the findings and fills stats for every rule.
Report make_report(std::vector<ReportInput> inputs, std::vector<Finding> findings, Timestamp generated_at,
                   std::vector<std::string> warnings = {});

nlohmann::json to_json(const Finding& f);
Finding finding_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Report& r);
/// Throws Error{MalformedJson}.
Report report_from_json(const nlohmann::json& j);

/// Sorted keys, two-space indent, trailing newline.
std::string render_json(const Report& r);
/// One line per finding plus a stats footer.
std::string render_text(const Report& r);

/// 1 when some finding is at or above `fail_on`, else 0.
int exit_code_for(const std::vector<Finding>& findings, Severity fail_on);

}  // namespace chainaudit
