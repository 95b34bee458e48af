#include <algorithm>
#include <array>

#include "chainaudit/error.hpp"
#include "chainaudit/manifest.hpp"
#include "chainaudit/text.hpp"

namespace chainaudit {

namespace {

// Podfile directives that carry no dependency information.
constexpr std::array<std::string_view, 14> kIgnoredDirectives = {
    "platform",         "use_frameworks!", "inhibit_all_warnings!", "use_modular_headers!",
    "project",          "workspace",       "install!",              "xcodeproj",
    "inherit!",         "plugin",          "ensure_bundler!",       "supports_swift_versions",
    "generate_bridge_support!", "set_arc_compatibility_flag!",
};

std::string_view strip_comment(std::string_view line) {
  char quote = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quote) {
      if (c == '\\') ++i;
      else if (c == quote) quote = 0;
    } else if (c == '\'' || c == '"') {
      quote = c;
    } else if (c == '#') {
      return line.substr(0, i);
    }
  }
  return line;
}

// Net bracket depth and whether a quote is left open, used to join
// statements that continue on the next line.
bool needs_continuation(std::string_view stmt) {
  int depth = 0;
  char quote = 0;
  for (std::size_t i = 0; i < stmt.size(); ++i) {
    char c = stmt[i];
    if (quote) {
      if (c == '\\') ++i;
      else if (c == quote) quote = 0;
      continue;
    }
    if (c == '\'' || c == '"') quote = c;
    else if (c == '(' || c == '[' || c == '{') ++depth;
    else if (c == ')' || c == ']' || c == '}') --depth;
  }
  std::string_view t = trim(stmt);
  return depth > 0 || (!t.empty() && t.back() == ',');
}

std::vector<std::string_view> split_args(std::string_view s) {
  std::vector<std::string_view> out;
  int depth = 0;
  char quote = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (quote) {
      if (c == '\\') ++i;
      else if (c == quote) quote = 0;
      continue;
    }
    if (c == '\'' || c == '"') quote = c;
    else if (c == '(' || c == '[' || c == '{') ++depth;
    else if (c == ')' || c == ']' || c == '}') --depth;
    else if (c == ',' && depth == 0) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  auto last = trim(s.substr(std::min(start, s.size())));
  if (!last.empty()) out.push_back(last);
  return out;
}

std::optional<std::string> unquote(std::string_view s) {
  s = trim(s);
  if (s.size() < 2 || (s.front() != '\'' && s.front() != '"') || s.back() != s.front()) return std::nullopt;
  const char q = s.front();
  std::string out;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    char c = s[i];
    if (c == q) return std::nullopt;  // two adjacent literals; not supported
    if (c == '\\' && i + 2 < s.size()) {
      char n = s[++i];
      if (q == '"' && n == 'n') out += '\n';
      else if (q == '"' && n == 't') out += '\t';
      else if (q == '\'' && n != '\'' && n != '\\') {
        out += '\\';
        out += n;
      } else {
        out += n;
      }
      continue;
    }
    out += c;
  }
  return out;
}

// `:key => value`, `key: value` or `:key=>value`.
bool split_option(std::string_view arg, std::string& key, std::string_view& value) {
  auto arrow = arg.find("=>");
  if (arrow != std::string_view::npos && !arg.empty() && arg.front() == ':') {
    key = std::string(trim(arg.substr(1, arrow - 1)));
    value = trim(arg.substr(arrow + 2));
    return !key.empty();
  }
  if (!arg.empty() && arg.front() != '\'' && arg.front() != '"') {
    auto colon = arg.find(':');
    if (colon != std::string_view::npos && colon > 0) {
      key = std::string(trim(arg.substr(0, colon)));
      value = trim(arg.substr(colon + 1));
      return !key.empty();
    }
  }
  return false;
}

std::string_view leading_word(std::string_view stmt) {
  std::size_t i = 0;
  while (i < stmt.size() && stmt[i] != ' ' && stmt[i] != '\t' && stmt[i] != '(' && stmt[i] != '\'' &&
         stmt[i] != '"') {
    ++i;
  }
  return stmt.substr(0, i);
}

std::string_view call_arguments(std::string_view stmt, std::string_view keyword) {
  std::string_view rest = trim(stmt.substr(keyword.size()));
  if (!rest.empty() && rest.front() == '(') {
    auto close = rest.rfind(')');
    if (close != std::string_view::npos) rest = rest.substr(1, close - 1);
    else rest.remove_prefix(1);
  }
  return rest;
}

void parse_pod(std::string_view stmt, std::size_t line_no, Manifest& m) {
  auto args = split_args(call_arguments(stmt, "pod"));
  auto warn = [&](const std::string& what) {
    m.parse_warnings.push_back("line " + std::to_string(line_no) + ": " + what);
  };
  if (args.empty()) {
    warn("pod without a name");
    return;
  }
  auto name = unquote(args[0]);
  if (!name || name->empty()) {
    warn("pod name is not a string literal: " + std::string(args[0]));
    return;
  }
  DependencyEntry entry;
  entry.name = *name;
  entry.ecosystem = Ecosystem::cocoapods;

  for (std::size_t i = 1; i < args.size(); ++i) {
    if (auto literal = unquote(args[i])) {
      try {
        entry.requirements.push_back(parse_requirement(*literal));
      } catch (const Error& e) {
        warn(e.what());
      }
      continue;
    }
    std::string key;
    std::string_view raw_value;
    if (!split_option(args[i], key, raw_value)) {
      warn("unrecognised pod argument: " + std::string(args[i]));
      continue;
    }
    auto value = unquote(raw_value);
    if (!value) continue;  // arrays, symbols and booleans carry nothing we use
    if (key == "source") {
      entry.explicit_location = ExplicitLocation{LocationKind::source_repo_url, *value};
    } else if (key == "git") {
      entry.explicit_location = ExplicitLocation{LocationKind::git_url, *value};
    } else if (key == "path") {
      entry.explicit_location = ExplicitLocation{LocationKind::local_path, *value};
    } else if (key == "podspec") {
      bool remote = value->find("://") != std::string::npos;
      entry.explicit_location =
          ExplicitLocation{remote ? LocationKind::source_repo_url : LocationKind::local_path, *value};
    } else if (key == "commit") {
      entry.pinned_revision = *value;
    } else if (key == "tag" || key == "branch") {
      entry.metadata[key] = *value;
    }
  }
  if (entry.requirements.empty()) entry.requirements.push_back(Requirement::any());
  m.entries.push_back(std::move(entry));
}

}  // namespace

Manifest parse_podfile(std::string_view text) {
  Manifest m;
  m.kind = ManifestKind::podfile;

  auto lines = split_lines(text);
  std::size_t i = 0;
  while (i < lines.size()) {
    const std::size_t line_no = i + 1;
    std::string stmt(trim(strip_comment(lines[i])));
    ++i;
    while (needs_continuation(stmt) && i < lines.size()) {
      stmt += ' ';
      stmt += trim(strip_comment(lines[i]));
      ++i;
    }
    if (stmt.empty()) continue;

    std::string_view word = leading_word(stmt);
    if (word == "source") {
      auto args = split_args(call_arguments(stmt, "source"));
      std::optional<std::string> url = args.empty() ? std::nullopt : unquote(args[0]);
      if (url && !url->empty()) m.sources_in_order.push_back(*url);
      else m.parse_warnings.push_back("line " + std::to_string(line_no) + ": source without a URL literal");
    } else if (word == "pod") {
      parse_pod(stmt, line_no, m);
    } else if (word == "target" || word == "abstract_target" || word == "end" || word == "do" ||
               std::string_view(stmt).ends_with(" do") || std::string_view(stmt).find(" do |") != std::string::npos) {
      m.parse_warnings.push_back("line " + std::to_string(line_no) + ": block flattened: " + stmt);
    } else if (std::find(kIgnoredDirectives.begin(), kIgnoredDirectives.end(), word) != kIgnoredDirectives.end()) {
      continue;
    } else {
      m.parse_warnings.push_back("line " + std::to_string(line_no) + ": unrecognised statement: " + stmt);
    }
  }
  return m;
}

}  // namespace chainaudit
