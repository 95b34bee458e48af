#include <json.hpp>

#include "chainaudit/error.hpp"
#include "chainaudit/manifest.hpp"
#include "chainaudit/text.hpp"

namespace chainaudit {

namespace {

using nlohmann::json;

std::optional<std::string> string_field(const json& obj, const char* key) {
  if (!obj.is_object()) return std::nullopt;
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) return std::nullopt;
  return it->get<std::string>();
}

void add_pin(Manifest& m, const json& pin, std::size_t index, int schema) {
  auto warn = [&](const std::string& what) {
    m.parse_warnings.push_back("pin " + std::to_string(index) + ": " + what);
  };
  if (!pin.is_object()) {
    warn("not an object");
    return;
  }
  // v1: package/repositoryURL; v2 and v3: identity/location/kind.
  auto name = schema == 1 ? string_field(pin, "package") : string_field(pin, "identity");
  auto location = schema == 1 ? string_field(pin, "repositoryURL") : string_field(pin, "location");
  if (!name || name->empty() || !location || location->empty()) {
    warn("missing name or location");
    return;
  }

  DependencyEntry e;
  e.name = *name;
  e.ecosystem = Ecosystem::swiftpm;
  auto kind = string_field(pin, "kind");
  bool local = (kind && *kind == "localSourceControl") || location->starts_with("/") ||
               location->starts_with("file://");
  e.explicit_location = ExplicitLocation{local ? LocationKind::local_path : LocationKind::git_url, *location};
  if (kind) e.metadata["kind"] = *kind;

  const json* state = nullptr;
  if (auto it = pin.find("state"); it != pin.end() && it->is_object()) state = &*it;
  if (state) {
    if (auto rev = string_field(*state, "revision")) e.pinned_revision = *rev;
    if (auto version = string_field(*state, "version")) {
      if (auto v = VersionString::parse(*version)) e.requirements.push_back(Requirement{RequirementOp::exact, v});
      e.metadata["version"] = *version;
    }
    if (auto branch = string_field(*state, "branch")) e.metadata["branch"] = *branch;
  }
  if (!e.pinned_revision) warn("no state.revision for " + e.name);
  if (e.requirements.empty()) e.requirements.push_back(Requirement::any());
  m.entries.push_back(std::move(e));
}

}  // namespace

Manifest parse_package_resolved(std::string_view text) {
  json doc = json::parse(text.begin(), text.end(), nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) throw Error(ErrorCode::MalformedJson, "Package.resolved is not valid JSON");
  if (!doc.is_object()) throw Error(ErrorCode::MalformedJson, "Package.resolved root is not an object");

  auto version_it = doc.find("version");
  if (version_it == doc.end() || !version_it->is_number_integer()) {
    throw Error(ErrorCode::UnknownSchemaVersion, "missing integer \"version\"");
  }
  const auto schema = version_it->get<std::int64_t>();
  if (schema < 1 || schema > 3) {
    throw Error(ErrorCode::UnknownSchemaVersion, "schema version " + std::to_string(schema));
  }

  Manifest m;
  m.kind = ManifestKind::package_resolved;
  m.metadata["schema_version"] = std::to_string(schema);

  const json* pins = nullptr;
  if (schema == 1) {
    auto object = doc.find("object");
    if (object != doc.end() && object->is_object()) {
      if (auto it = object->find("pins"); it != object->end()) pins = &*it;
    }
  } else if (auto it = doc.find("pins"); it != doc.end()) {
    pins = &*it;
  }
  if (!pins || !pins->is_array()) {
    m.parse_warnings.push_back("no pins array");
    return m;
  }
  for (std::size_t i = 0; i < pins->size(); ++i) add_pin(m, (*pins)[i], i, static_cast<int>(schema));
  return m;
}

}  // namespace chainaudit
