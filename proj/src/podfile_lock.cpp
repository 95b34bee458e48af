#include <map>

#include "chainaudit/error.hpp"
#include "chainaudit/manifest.hpp"
#include "chainaudit/text.hpp"

namespace chainaudit {

namespace {

enum class Section { none, pods, dependencies, spec_repos, external_sources, checkout_options, spec_checksums, unknown };

std::size_t indent_of(std::string_view line) {
  std::size_t n = 0;
  while (n < line.size() && line[n] == ' ') ++n;
  return n;
}

std::string_view unquote_yaml(std::string_view s) {
  s = trim(s);
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

// "Name (1.2.3)" -> {Name, 1.2.3}; "Name" -> {Name, ""}.
std::pair<std::string, std::string> split_name_version(std::string_view item) {
  item = unquote_yaml(item);
  auto open = item.find(" (");
  if (open == std::string_view::npos || item.back() != ')') return {std::string(trim(item)), {}};
  return {std::string(trim(item.substr(0, open))), std::string(item.substr(open + 2, item.size() - open - 3))};
}

// "key: value" -> {key, value}; "key:" -> {key, ""}. Handles quoted keys and
// keys that themselves contain ':' such as URLs or `:git`.
bool split_mapping(std::string_view s, std::string& key, std::string& value) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '"' || s.front() == '\'') {
    auto close = s.find(s.front(), 1);
    if (close == std::string_view::npos) return false;
    key = std::string(s.substr(1, close - 1));
    std::string_view rest = trim(s.substr(close + 1));
    if (rest.empty() || rest.front() != ':') return false;
    value = std::string(unquote_yaml(rest.substr(1)));
    return true;
  }
  auto sep = s.find(": ");
  if (sep == std::string_view::npos) {
    if (s.back() != ':') return false;
    key = std::string(s.substr(0, s.size() - 1));
    value.clear();
    return true;
  }
  key = std::string(s.substr(0, sep));
  value = std::string(unquote_yaml(s.substr(sep + 2)));
  return true;
}

}  // namespace

Manifest parse_podfile_lock(std::string_view text) {
  Manifest m;
  m.kind = ManifestKind::podfile_lock;
  std::map<std::string, std::size_t> index;
  auto entry_for = [&](const std::string& name) -> DependencyEntry& {
    auto it = index.find(name);
    if (it != index.end()) return m.entries[it->second];
    DependencyEntry e;
    e.name = name;
    e.ecosystem = Ecosystem::cocoapods;
    e.requirements.push_back(Requirement::any());
    index.emplace(name, m.entries.size());
    m.entries.push_back(std::move(e));
    return m.entries.back();
  };

  bool recognised = false;
  Section section = Section::none;
  std::string current_key;  // pod or repo under the current section
  std::size_t line_no = 0;

  for (std::string_view raw : split_lines(text)) {
    ++line_no;
    if (trim(raw).empty()) continue;
    const std::size_t indent = indent_of(raw);
    std::string_view line = trim(raw);
    auto warn = [&](const std::string& what) {
      m.parse_warnings.push_back("line " + std::to_string(line_no) + ": " + what);
    };

    if (indent == 0) {
      std::string key, value;
      current_key.clear();
      if (!split_mapping(line, key, value)) {
        warn("unexpected top-level line");
        section = Section::unknown;
        continue;
      }
      if (key == "PODS") section = Section::pods;
      else if (key == "DEPENDENCIES") section = Section::dependencies;
      else if (key == "SPEC REPOS") section = Section::spec_repos;
      else if (key == "EXTERNAL SOURCES") section = Section::external_sources;
      else if (key == "CHECKOUT OPTIONS") section = Section::checkout_options;
      else if (key == "SPEC CHECKSUMS") section = Section::spec_checksums;
      else if (key == "PODFILE CHECKSUM") {
        m.metadata["podfile_checksum"] = value;
        section = Section::none;
      } else if (key == "COCOAPODS") {
        m.metadata["cocoapods_version"] = value;
        section = Section::none;
      } else {
        warn("unknown section '" + key + "' skipped");
        section = Section::unknown;
        continue;
      }
      recognised = true;
      continue;
    }

    switch (section) {
      case Section::none:
      case Section::unknown:
        break;
      case Section::pods: {
        if (line.front() != '-') {
          warn("expected list item under PODS");
          break;
        }
        std::string_view item = trim(line.substr(1));
        bool has_children = item.ends_with(':');
        if (has_children) item.remove_suffix(1);
        auto [name, version] = split_name_version(item);
        if (name.empty()) {
          warn("empty pod name");
          break;
        }
        if (indent <= 2) {
          DependencyEntry& e = entry_for(name);
          current_key = name;
          if (!version.empty()) {
            try {
              e.requirements = {parse_requirement(version)};
            } catch (const Error& err) {
              warn(err.what());
              e.metadata["version"] = version;
            }
          }
        } else if (!current_key.empty()) {
          std::string dep = name;
          if (!version.empty()) dep += " (" + version + ")";
          entry_for(current_key).transitive.push_back(std::move(dep));
        }
        break;
      }
      case Section::dependencies: {
        if (line.front() != '-') break;
        auto [name, constraint] = split_name_version(trim(line.substr(1)));
        if (name.empty()) break;
        auto it = index.find(name);
        if (it != index.end()) {
          m.entries[it->second].metadata["direct"] = "true";
          if (constraint.starts_with("from `")) m.entries[it->second].metadata["declared_from"] = constraint;
        }
        break;
      }
      case Section::spec_repos: {
        if (line.front() == '-') {
          auto name = std::string(unquote_yaml(line.substr(1)));
          if (!current_key.empty() && !name.empty()) entry_for(name).metadata["spec_repo"] = current_key;
          break;
        }
        std::string key, value;
        if (split_mapping(line, key, value)) {
          current_key = key;
          m.sources_in_order.push_back(key);
        }
        break;
      }
      case Section::external_sources:
      case Section::checkout_options: {
        std::string key, value;
        if (!split_mapping(line, key, value)) {
          warn("unparseable mapping line");
          break;
        }
        if (indent <= 2) {
          current_key = key;
          break;
        }
        if (current_key.empty()) break;
        DependencyEntry& e = entry_for(current_key);
        if (key == ":git") {
          e.explicit_location = ExplicitLocation{LocationKind::git_url, value};
        } else if (key == ":path") {
          e.explicit_location = ExplicitLocation{LocationKind::local_path, value};
        } else if (key == ":podspec") {
          bool remote = value.find("://") != std::string::npos;
          e.explicit_location =
              ExplicitLocation{remote ? LocationKind::source_repo_url : LocationKind::local_path, value};
        } else if (key == ":commit") {
          e.pinned_revision = value;
        } else if (key == ":tag" || key == ":branch") {
          e.metadata[key.substr(1)] = value;
        }
        break;
      }
      case Section::spec_checksums: {
        std::string key, value;
        if (split_mapping(line, key, value) && !key.empty()) entry_for(key).metadata["checksum"] = value;
        break;
      }
    }
  }

  if (!recognised) throw Error(ErrorCode::MalformedLock, "no Podfile.lock section found");
  return m;
}

}  // namespace chainaudit
