#include "chainaudit/report.hpp"

#include <algorithm>

#include "chainaudit/error.hpp"

namespace chainaudit {

using nlohmann::json;

std::string_view tool_version() { return "0.1.0"; }

Report make_report(std::vector<ReportInput> inputs, std::vector<Finding> findings, Timestamp generated_at,
                   std::vector<std::string> warnings) {
  Report r;
  r.tool_version = std::string(tool_version());
  r.inputs = std::move(inputs);
  r.findings = dedupe(std::move(findings));
  for (RuleId rule : kAllRules) r.stats[rule] = 0;
  for (const auto& f : r.findings) ++r.stats[f.rule_id];
  r.generated_at = generated_at;
  r.warnings = std::move(warnings);
  return r;
}

json to_json(const Finding& f) {
  json evidence = json::array();
  for (const auto& e : f.evidence) evidence.push_back(json{{"source", e.source}, {"detail", e.detail}});
  return json{{"rule_id", std::string(to_string(f.rule_id))},
              {"severity", std::string(to_string(f.severity))},
              {"subject", f.subject},
              {"evidence", std::move(evidence)},
              {"mitigated_by", f.mitigated_by ? json(*f.mitigated_by) : json(nullptr)},
              {"requires_manual_verification", f.requires_manual_verification},
              {"catalog_section", f.catalog_section},
              {"attacker_version_needed", f.attacker_version_needed ? json(*f.attacker_version_needed) : json(nullptr)},
              {"rationale", f.rationale}};
}

Finding finding_from_json(const json& j) {
  Finding f;
  auto rule = rule_from_string(j.at("rule_id").get<std::string>());
  auto severity = severity_from_string(j.at("severity").get<std::string>());
  if (!rule || !severity) throw Error(ErrorCode::MalformedJson, "unknown rule or severity in finding");
  f.rule_id = *rule;
  f.severity = *severity;
  f.subject = j.at("subject").get<std::string>();
  for (const auto& e : j.at("evidence")) {
    f.evidence.push_back(EvidenceRef{e.at("source").get<std::string>(), e.at("detail").get<std::string>()});
  }
  if (!j.at("mitigated_by").is_null()) f.mitigated_by = j.at("mitigated_by").get<std::string>();
  f.requires_manual_verification = j.at("requires_manual_verification").get<bool>();
  f.catalog_section = j.at("catalog_section").get<std::string>();
  if (!j.at("attacker_version_needed").is_null()) {
    f.attacker_version_needed = j.at("attacker_version_needed").get<std::string>();
  }
  f.rationale = j.at("rationale").get<std::string>();
  return f;
}

json to_json(const Report& r) {
  json inputs = json::array();
  for (const auto& in : r.inputs) inputs.push_back(json{{"kind", in.kind}, {"path_or_name", in.path_or_name}});
  json findings = json::array();
  for (const auto& f : r.findings) findings.push_back(to_json(f));
  json stats = json::object();
  for (const auto& [rule, n] : r.stats) stats[std::string(to_string(rule))] = n;
  return json{{"schema", kReportSchema},
              {"tool_version", r.tool_version},
              {"inputs", std::move(inputs)},
              {"findings", std::move(findings)},
              {"stats", std::move(stats)},
              {"generated_at", format_timestamp(r.generated_at)},
              {"warnings", r.warnings}};
}

Report report_from_json(const json& j) {
  try {
    if (j.at("schema").get<int>() != kReportSchema) throw Error(ErrorCode::MalformedJson, "unsupported report schema");
    Report r;
    r.tool_version = j.at("tool_version").get<std::string>();
    for (const auto& in : j.at("inputs")) {
      r.inputs.push_back(ReportInput{in.at("kind").get<std::string>(), in.at("path_or_name").get<std::string>()});
    }
    for (const auto& f : j.at("findings")) r.findings.push_back(finding_from_json(f));
    for (const auto& [k, v] : j.at("stats").items()) {
      auto rule = rule_from_string(k);
      if (!rule) throw Error(ErrorCode::MalformedJson, "unknown rule in stats: " + k);
      r.stats[*rule] = v.get<std::size_t>();
    }
    if (!parse_timestamp(j.at("generated_at").get<std::string>(), r.generated_at)) {
      throw Error(ErrorCode::MalformedJson, "bad generated_at");
    }
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedJson, std::string("malformed report: ") + e.what());
  }
}

std::string render_json(const Report& r) { return to_json(r).dump(2) + "\n"; }

std::string render_text(const Report& r) {
  std::string out;
  for (const auto& f : r.findings) {
    std::string sev = to_upper(to_string(f.severity));
    out += sev + " " + std::string(to_string(f.rule_id)) + " " + f.subject + " — " + f.rationale;
    if (f.attacker_version_needed) out += " [attacker version " + *f.attacker_version_needed + "]";
    if (f.mitigated_by) out += " [mitigated by " + *f.mitigated_by + "]";
    if (f.requires_manual_verification) out += " [manual verification required]";
    out += " (see " + f.catalog_section + ")\n";
  }
  for (const auto& w : r.warnings) out += "warning: " + w + "\n";
  out += "-- " + std::to_string(r.findings.size()) + " finding(s):";
  for (const auto& [rule, n] : r.stats) out += " " + std::string(to_string(rule)) + "=" + std::to_string(n);
  out += "\n";
  return out;
}

int exit_code_for(const std::vector<Finding>& findings, Severity fail_on) {
  const int threshold = severity_rank(fail_on);
  return std::any_of(findings.begin(), findings.end(),
                     [&](const Finding& f) { return severity_rank(f.severity) >= threshold; })
             ? 1
             : 0;
}

}  // namespace chainaudit
