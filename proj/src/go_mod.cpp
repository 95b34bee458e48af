#include <map>

#include "chainaudit/manifest.hpp"
#include "chainaudit/text.hpp"

namespace chainaudit {

namespace {

std::string_view strip_line_comment(std::string_view line) {
  bool in_quote = false;
  for (std::size_t i = 0; i + 1 < line.size(); ++i) {
    if (line[i] == '"') in_quote = !in_quote;
    if (!in_quote && line[i] == '/' && line[i + 1] == '/') return line.substr(0, i);
  }
  return line;
}

std::vector<std::string> fields(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    if (i >= s.size()) break;
    std::size_t start = i;
    if (s[i] == '"' || s[i] == '`') {
      const char q = s[i];
      auto close = s.find(q, i + 1);
      if (close == std::string_view::npos) close = s.size() - 1;
      out.emplace_back(s.substr(start + 1, close - start - 1));
      i = close + 1;
      continue;
    }
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    out.emplace_back(s.substr(start, i - start));
  }
  return out;
}

std::string strip_v(std::string_view v) {
  if (v.starts_with('v')) v.remove_prefix(1);
  return std::string(v);
}

bool is_local_path(std::string_view p) {
  return p.starts_with("./") || p.starts_with("../") || p.starts_with("/") || p == "." || p == "..";
}

struct Replacement {
  std::string old_version;  // empty: all versions
  std::string target;
  std::string target_version;
};

}  // namespace

Manifest parse_go_mod(std::string_view text) {
  Manifest m;
  m.kind = ManifestKind::go_mod;
  std::vector<std::pair<std::string, Replacement>> replacements;
  std::map<std::string, std::vector<std::string>> excluded;
  std::string block;  // directive of the open `(` block
  std::size_t line_no = 0;
  bool indirect = false;  // current line carries `// indirect`

  auto warn = [&](const std::string& what) {
    m.parse_warnings.push_back("line " + std::to_string(line_no) + ": " + what);
  };

  auto handle = [&](const std::string& verb, const std::vector<std::string>& args) {
    if (verb == "module") {
      if (args.size() == 1) m.metadata["module"] = args[0];
      else warn("module expects one path");
    } else if (verb == "go" || verb == "toolchain") {
      if (args.size() == 1) m.metadata[verb] = args[0];
      else warn(verb + " expects one value");
    } else if (verb == "require") {
      if (args.size() < 2 || args[0].empty()) {
        warn("require expects a module path and version");
        return;
      }
      DependencyEntry e;
      e.name = args[0];
      e.ecosystem = Ecosystem::gomod;
      std::string version = strip_v(args[1]);
      if (auto v = VersionString::parse(version)) e.requirements.push_back(Requirement{RequirementOp::exact, v});
      else e.requirements.push_back(Requirement::any());
      e.pinned_revision = args[1];
      e.metadata["host"] = go_module_host(e.name);
      e.metadata["version"] = args[1];
      if (indirect) e.metadata["indirect"] = "true";
      m.entries.push_back(std::move(e));
    } else if (verb == "replace") {
      // old [v] => new [v]
      std::size_t arrow = 0;
      while (arrow < args.size() && args[arrow] != "=>") ++arrow;
      if (arrow == 0 || arrow > 2 || arrow + 1 >= args.size() || args.size() - arrow - 1 > 2) {
        warn("replace expects `old [version] => new [version]`");
        return;
      }
      Replacement r;
      if (arrow == 2) r.old_version = args[1];
      r.target = args[arrow + 1];
      if (arrow + 2 < args.size()) r.target_version = args[arrow + 2];
      replacements.emplace_back(args[0], std::move(r));
    } else if (verb == "exclude") {
      if (args.size() == 2) excluded[args[0]].push_back(args[1]);
      else warn("exclude expects a module path and version");
    } else if (verb == "retract" || verb == "godebug") {
      // No dependency information.
    } else {
      warn("unrecognised directive: " + verb);
    }
  };

  for (std::string_view raw : split_lines(text)) {
    ++line_no;
    std::string_view code = strip_line_comment(raw);
    std::string_view comment = trim(raw.substr(code.size()));
    if (comment.starts_with("//")) comment = trim(comment.substr(2));
    indirect = comment == "indirect" || comment.starts_with("indirect;");
    std::string_view line = trim(code);
    if (line.empty()) continue;
    auto f = fields(line);
    if (f.empty()) continue;

    if (!block.empty()) {
      if (f.size() == 1 && f[0] == ")") {
        block.clear();
        continue;
      }
      handle(block, f);
      continue;
    }
    std::string verb = f[0];
    std::vector<std::string> args(f.begin() + 1, f.end());
    if (args.size() == 1 && args[0] == "(") {
      block = verb;
      continue;
    }
    if (!args.empty() && args[0].starts_with('(')) {
      // Single-line block: `require ( a v1 )`.
      std::string inner(line.substr(line.find('(') + 1));
      auto close = inner.rfind(')');
      if (close == std::string::npos) {
        warn("unterminated block");
        continue;
      }
      auto inner_fields = fields(std::string_view(inner).substr(0, close));
      if (!inner_fields.empty()) handle(verb, inner_fields);
      continue;
    }
    handle(verb, args);
  }
  if (!block.empty()) m.parse_warnings.push_back("unterminated " + block + " block");

  for (auto& e : m.entries) {
    if (auto it = excluded.find(e.name); it != excluded.end()) {
      for (const auto& v : it->second) {
        if (v == e.metadata["version"]) e.metadata["excluded"] = "true";
      }
    }
    // A version-specific replace wins over a blanket one.
    const Replacement* chosen = nullptr;
    for (const auto& [old_path, r] : replacements) {
      if (old_path != e.name) continue;
      if (!r.old_version.empty() && r.old_version != e.metadata["version"]) continue;
      if (!chosen || !r.old_version.empty()) chosen = &r;
    }
    if (!chosen) continue;
    if (is_local_path(chosen->target)) {
      e.explicit_location = ExplicitLocation{LocationKind::local_path, chosen->target};
    } else {
      e.explicit_location = ExplicitLocation{LocationKind::source_repo_url, chosen->target};
      e.metadata["replaced_by_host"] = go_module_host(chosen->target);
    }
    e.metadata["replaced_by"] = chosen->target;
    if (!chosen->target_version.empty()) e.metadata["replaced_by_version"] = chosen->target_version;
  }
  return m;
}

}  // namespace chainaudit
