#include "chainaudit/manifest.hpp"
#include "chainaudit/text.hpp"

namespace chainaudit {

namespace {

// Splits `kind "a" "b"` into {kind, a, b}. Returns false on any other shape.
bool tokenize(std::string_view line, std::string& kind, std::vector<std::string>& quoted) {
  std::size_t i = 0;
  while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
  kind = std::string(line.substr(0, i));
  quoted.clear();
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i >= line.size()) break;
    if (line[i] != '"') return false;
    auto close = line.find('"', i + 1);
    if (close == std::string_view::npos) return false;
    quoted.emplace_back(line.substr(i + 1, close - i - 1));
    i = close + 1;
  }
  return !kind.empty();
}

std::string repo_name_from_url(std::string_view url) {
  while (!url.empty() && url.back() == '/') url.remove_suffix(1);
  auto slash = url.find_last_of("/:");
  std::string_view name = slash == std::string_view::npos ? url : url.substr(slash + 1);
  if (name.ends_with(".git")) name.remove_suffix(4);
  if (name.ends_with(".json")) name.remove_suffix(5);
  return std::string(name.empty() ? url : name);
}

}  // namespace

Manifest parse_cartfile_resolved(std::string_view text) {
  Manifest m;
  m.kind = ManifestKind::cartfile_resolved;
  std::size_t line_no = 0;
  for (std::string_view raw : split_lines(text)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;

    std::string kind;
    std::vector<std::string> quoted;
    if (!tokenize(line, kind, quoted) || quoted.size() != 2 || quoted[0].empty() ||
        (kind != "github" && kind != "git" && kind != "binary")) {
      m.parse_warnings.push_back("line " + std::to_string(line_no) + ": unrecognised: " + std::string(line));
      continue;
    }

    DependencyEntry e;
    e.ecosystem = Ecosystem::carthage;
    const std::string& location = quoted[0];
    const std::string& rev = quoted[1];
    if (kind == "github") {
      // Either "owner/repo" on github.com or a full GitHub Enterprise URL.
      if (location.find("://") != std::string::npos) {
        e.name = repo_name_from_url(location);
        e.explicit_location = ExplicitLocation{LocationKind::git_url, location};
      } else {
        e.name = location;
        e.explicit_location = ExplicitLocation{LocationKind::git_url, "https://github.com/" + location};
      }
    } else if (kind == "git") {
      e.name = repo_name_from_url(location);
      bool local = location.starts_with("file://") || location.starts_with("/") || location.starts_with(".");
      e.explicit_location = ExplicitLocation{local ? LocationKind::local_path : LocationKind::git_url, location};
    } else {
      e.name = repo_name_from_url(location);
      e.explicit_location = ExplicitLocation{LocationKind::source_repo_url, location};
    }
    e.metadata["kind"] = kind;

    // A commit id is immutable; anything else is a mutable tag or version.
    if (kind != "binary" && is_commit_hash(rev)) {
      e.pinned_revision = rev;
      e.requirements.push_back(Requirement::any());
    } else {
      std::string_view version_text = rev;
      if (version_text.starts_with('v') || version_text.starts_with('V')) version_text.remove_prefix(1);
      if (auto v = VersionString::parse(version_text)) {
        e.requirements.push_back(Requirement{RequirementOp::exact, std::move(v)});
      } else {
        e.requirements.push_back(Requirement::any());
      }
      e.metadata["tag"] = rev;
    }
    m.entries.push_back(std::move(e));
  }
  return m;
}

}  // namespace chainaudit
