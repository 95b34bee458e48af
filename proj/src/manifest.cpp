#include "chainaudit/manifest.hpp"

#include "chainaudit/text.hpp"

namespace chainaudit {

std::string_view to_string(Ecosystem e) {
  switch (e) {
    case Ecosystem::cocoapods: return "cocoapods";
    case Ecosystem::carthage: return "carthage";
    case Ecosystem::swiftpm: return "swiftpm";
    case Ecosystem::gomod: return "gomod";
    case Ecosystem::npm: return "npm";
  }
  return "cocoapods";
}

std::string_view to_string(LocationKind k) {
  switch (k) {
    case LocationKind::source_repo_url: return "source_repo_url";
    case LocationKind::git_url: return "git_url";
    case LocationKind::local_path: return "local_path";
  }
  return "git_url";
}

std::string_view to_string(ManifestKind k) {
  switch (k) {
    case ManifestKind::podfile: return "podfile";
    case ManifestKind::podfile_lock: return "podfile_lock";
    case ManifestKind::cartfile_resolved: return "cartfile_resolved";
    case ManifestKind::package_resolved: return "package_resolved";
    case ManifestKind::go_mod: return "go_mod";
  }
  return "podfile";
}

std::optional<ManifestKind> manifest_kind_from_string(std::string_view s) {
  for (auto k : {ManifestKind::podfile, ManifestKind::podfile_lock, ManifestKind::cartfile_resolved,
                 ManifestKind::package_resolved, ManifestKind::go_mod}) {
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

Manifest parse_manifest(ManifestKind kind, std::string_view text) {
  switch (kind) {
    case ManifestKind::podfile: return parse_podfile(text);
    case ManifestKind::podfile_lock: return parse_podfile_lock(text);
    case ManifestKind::cartfile_resolved: return parse_cartfile_resolved(text);
    case ManifestKind::package_resolved: return parse_package_resolved(text);
    case ManifestKind::go_mod: return parse_go_mod(text);
  }
  return parse_podfile(text);
}

std::optional<ManifestKind> detect_manifest_kind(std::string_view file_name) {
  auto slash = file_name.find_last_of("/\\");
  std::string_view base = slash == std::string_view::npos ? file_name : file_name.substr(slash + 1);
  if (base == "Podfile.lock" || (base.starts_with("Podfile") && base.ends_with(".lock"))) {
    return ManifestKind::podfile_lock;
  }
  if (base.starts_with("Podfile")) return ManifestKind::podfile;
  if (base.starts_with("Cartfile") && base.ends_with(".resolved")) return ManifestKind::cartfile_resolved;
  if (base.starts_with("Package") && base.ends_with(".resolved")) return ManifestKind::package_resolved;
  if (base == "go.mod" || base.ends_with(".mod")) return ManifestKind::go_mod;
  return std::nullopt;
}

std::string go_module_host(std::string_view module_path) {
  auto slash = module_path.find('/');
  return to_lower(module_path.substr(0, slash));
}

}  // namespace chainaudit
