#include "chainaudit/bundle.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iterator>
#include <map>
#include <system_error>

#include "chainaudit/error.hpp"
#include "chainaudit/plist.hpp"
#include "chainaudit/text.hpp"

namespace chainaudit {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kFrameworkSuffix = ".framework";

bool valid_npm_name(std::string_view name) {
  if (name.empty()) return false;
  return std::none_of(name.begin(), name.end(), [](char c) {
    return c == '.' || std::isupper(static_cast<unsigned char>(c));
  });
}

std::optional<std::string> read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

bool is_cocoapods_identifier(std::string_view identifier) {
  return identifier.substr(0, kCocoaPodsIdentifierPrefix.size()) == kCocoaPodsIdentifierPrefix;
}

std::set<NpmNameRecord> extract_npm_names(const std::vector<std::string>& paths) {
  // Deduplicate on name, keeping the smallest source path so the result does
  // not depend on input order.
  std::map<std::string, std::string> best;
  auto offer = [&](std::string name, const std::string& path) {
    if (!valid_npm_name(name)) return;
    auto [it, inserted] = best.emplace(std::move(name), path);
    if (!inserted && path < it->second) it->second = path;
  };

  for (const auto& path : paths) {
    auto segments = split(path, '/');
    const std::size_t n = segments.size();
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t name_at;
      if (segments[i] == "node_modules") {
        name_at = i + 1;
      } else if (segments[i] == "www" && i + 1 < n && segments[i + 1] == "plugins") {
        name_at = i + 2;
      } else {
        continue;
      }
      // The name must be a directory, so something has to follow it.
      if (name_at + 1 >= n) continue;
      std::string_view first = segments[name_at];
      if (!first.empty() && first.front() == '@') {
        if (name_at + 2 >= n || first.size() < 2 || segments[name_at + 1].empty()) continue;
        offer(std::string(first) + "/" + std::string(segments[name_at + 1]), path);
      } else {
        offer(std::string(first), path);
      }
    }
  }

  std::set<NpmNameRecord> out;
  for (auto& [name, path] : best) out.insert(NpmNameRecord{name, path});
  return out;
}

BundleScan scan_bundle(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_directory(path, ec)) {
    throw Error(ErrorCode::NotADirectory, path.string() + " is not a directory");
  }

  BundleScan scan;
  scan.bundle_path = path;
  std::vector<std::string> relative_files;
  std::vector<fs::path> framework_dirs;

  fs::recursive_directory_iterator it(path, fs::directory_options::none, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot read " + path.string() + ": " + ec.message());
  for (const fs::recursive_directory_iterator end; it != end; it.increment(ec)) {
    if (ec) throw Error(ErrorCode::IoError, "cannot walk " + path.string() + ": " + ec.message());
    const fs::directory_entry& entry = *it;
    const fs::path rel = entry.path().lexically_relative(path);
    if (entry.is_directory(ec) && !entry.is_symlink(ec)) {
      const std::string name = entry.path().filename().string();
      if (name.size() > kFrameworkSuffix.size() && name.ends_with(kFrameworkSuffix) &&
          entry.path().parent_path().filename() == "Frameworks") {
        framework_dirs.push_back(rel);
      }
    } else {
      relative_files.push_back(rel.generic_string());
    }
  }
  if (ec) throw Error(ErrorCode::IoError, "cannot walk " + path.string() + ": " + ec.message());

  std::sort(framework_dirs.begin(), framework_dirs.end());
  std::map<std::string, FrameworkRecord> by_name;
  for (const auto& rel_dir : framework_dirs) {
    std::string dir_name = rel_dir.filename().string();
    FrameworkRecord rec;
    rec.framework_name = dir_name.substr(0, dir_name.size() - kFrameworkSuffix.size());
    if (by_name.count(rec.framework_name)) {
      scan.scan_warnings.push_back("duplicate framework " + rel_dir.generic_string() + " ignored");
      continue;
    }

    // iOS frameworks are flat; macOS-style frameworks keep it under Resources.
    std::optional<fs::path> plist;
    for (const auto* candidate : {"Info.plist", "Resources/Info.plist"}) {
      if (fs::is_regular_file(path / rel_dir / candidate, ec)) {
        plist = rel_dir / candidate;
        break;
      }
    }
    if (!plist) {
      scan.scan_warnings.push_back(rel_dir.generic_string() + ": no Info.plist");
      rec.plist_path = (rel_dir / "Info.plist").generic_string();
    } else {
      rec.plist_path = plist->generic_string();
      auto bytes = read_file(path / *plist);
      if (!bytes) {
        scan.scan_warnings.push_back(rec.plist_path + ": unreadable");
      } else {
        try {
          auto fields = parse_plist(*bytes);
          if (auto f = fields.find("CFBundleIdentifier"); f != fields.end()) rec.bundle_identifier = f->second;
          if (auto f = fields.find("CFBundleVersion"); f != fields.end()) rec.bundle_version = f->second;
        } catch (const Error& e) {
          scan.scan_warnings.push_back(rec.plist_path + ": " + e.what());
        }
      }
    }
    rec.is_cocoapods = rec.bundle_identifier && is_cocoapods_identifier(*rec.bundle_identifier);
    by_name.emplace(rec.framework_name, std::move(rec));
  }

  for (auto& [name, rec] : by_name) scan.frameworks.push_back(std::move(rec));
  scan.npm_names = extract_npm_names(relative_files);
  return scan;
}

}  // namespace chainaudit
