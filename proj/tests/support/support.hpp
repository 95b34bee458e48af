#pragma once

#include <stdlib.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "chainaudit/spec_index.hpp"
#include "chainaudit/text.hpp"

namespace testsupport {

namespace fs = std::filesystem;

inline fs::path fixture_dir() { return fs::path(CHAINAUDIT_FIXTURE_DIR); }
inline fs::path fixture(const std::string& rel) { return fixture_dir() / rel; }

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

inline std::vector<std::uint8_t> read_bytes(const fs::path& p) {
  std::string s = read_file(p);
  return std::vector<std::uint8_t>(s.begin(), s.end());
}

inline void write_file(const fs::path& p, const std::string& contents) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << contents;
  if (!out) throw std::runtime_error("cannot write " + p.string());
}

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "chainaudit-test-XXXXXX").string();
    if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string xml_plist(const std::map<std::string, std::string>& strings) {
  std::string out =
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<!DOCTYPE plist PUBLIC \"-//Apple//DTD PLIST 1.0//EN\" \"http://www.apple.com/DTDs/PropertyList-1.0.dtd\">\n"
      "<plist version=\"1.0\">\n<dict>\n";
  for (const auto& [k, v] : strings) {
    out += "\t<key>" + xml_escape(k) + "</key>\n\t<string>" + xml_escape(v) + "</string>\n";
  }
  out += "</dict>\n</plist>\n";
  return out;
}

// Adds <bundle>/Frameworks/<name>.framework/Info.plist.
inline void add_framework(const fs::path& bundle, const std::string& name, const std::string& identifier,
                          const std::string& version) {
  write_file(bundle / "Frameworks" / (name + ".framework") / "Info.plist",
             xml_plist({{"CFBundleIdentifier", identifier},
                        {"CFBundleName", name},
                        {"CFBundleExecutable", name},
                        {"CFBundleVersion", version},
                        {"CFBundleShortVersionString", version}}));
  write_file(bundle / "Frameworks" / (name + ".framework") / name, "\xcf\xfa\xed\xfe");
}

// Five frameworks: three built by CocoaPods, CorpAuth unknown to the public
// index, plus two vendor frameworks.
inline void make_sample_bundle(const fs::path& bundle) {
  add_framework(bundle, "Alamofire", "org.cocoapods.Alamofire", "5.6.4");
  add_framework(bundle, "OCMock", "org.cocoapods.OCMock", "3.9.1");
  add_framework(bundle, "CorpAuth", "org.cocoapods.CorpAuth", "2.3.1");
  add_framework(bundle, "FirebaseAnalytics", "com.google.FirebaseAnalytics", "10.7.0");
  add_framework(bundle, "Sentry", "io.sentry.Sentry", "8.1.0");
  write_file(bundle / "Info.plist", xml_plist({{"CFBundleIdentifier", "com.example.app"}}));
}

inline chainaudit::PodVersionSpec git_version(const std::string& version, const std::string& url,
                                              std::optional<std::string> commit = std::nullopt) {
  chainaudit::PodVersionSpec v;
  v.version = version;
  v.source_kind = chainaudit::SourceKind::git;
  v.source_url = url;
  v.git_tag = version;
  v.git_commit = std::move(commit);
  return v;
}

inline chainaudit::Timestamp fixed_time() {
  chainaudit::Timestamp t;
  chainaudit::parse_timestamp("2025-01-02T03:04:05Z", t);
  return t;
}

// Public index with Alamofire and OCMock, the pods the bundle fixture
// resolves against.
inline chainaudit::SpecIndex bundle_index() {
  using namespace chainaudit;
  std::vector<PodRecord> pods;
  pods.push_back(make_pod_record("Alamofire", {git_version("5.6.4", "https://github.com/Alamofire/Alamofire.git")}));
  pods.push_back(make_pod_record("OCMock", {git_version("3.9.1", "https://github.com/erikdoe/ocmock.git")}));
  return make_index(std::move(pods), fixed_time(), "fixture");
}

}  // namespace testsupport

#ifdef CHAINAUDIT_TEST_ZIP
#include <zlib.h>

namespace testsupport {

// Minimal zip writer (stored entries only) for .ipa fixtures.
inline std::string make_stored_zip(const std::vector<std::pair<std::string, std::string>>& files) {
  std::string out, central;
  auto u16 = [](std::string& s, unsigned v) {
    s += static_cast<char>(v & 0xff);
    s += static_cast<char>((v >> 8) & 0xff);
  };
  auto u32 = [&](std::string& s, unsigned long v) {
    u16(s, v & 0xffff);
    u16(s, (v >> 16) & 0xffff);
  };
  for (const auto& [name, data] : files) {
    const unsigned long crc = crc32(0, reinterpret_cast<const Bytef*>(data.data()), static_cast<uInt>(data.size()));
    const unsigned long offset = out.size();
    u32(out, 0x04034b50);
    u16(out, 20); u16(out, 0); u16(out, 0); u16(out, 0); u16(out, 0);
    u32(out, crc); u32(out, data.size()); u32(out, data.size());
    u16(out, name.size()); u16(out, 0);
    out += name;
    out += data;

    u32(central, 0x02014b50);
    u16(central, 20); u16(central, 20); u16(central, 0); u16(central, 0); u16(central, 0); u16(central, 0);
    u32(central, crc); u32(central, data.size()); u32(central, data.size());
    u16(central, name.size()); u16(central, 0); u16(central, 0); u16(central, 0); u16(central, 0);
    u32(central, 0); u32(central, offset);
    central += name;
  }
  const unsigned long cd_offset = out.size();
  out += central;
  u32(out, 0x06054b50);
  u16(out, 0); u16(out, 0); u16(out, files.size()); u16(out, files.size());
  u32(out, central.size()); u32(out, cd_offset); u16(out, 0);
  return out;
}

}  // namespace testsupport
#endif

#include <json.hpp>

namespace testsupport {

// Writes a sharded Specs tree with `pods` pods, 1-3 versions each, mixing
// git/http sources, pins, module_name/header_dir and prepare_command.
inline void write_specs_tree(const fs::path& root, int pods) {
  for (int i = 0; i < pods; ++i) {
    const std::string name = "Pod" + std::to_string(i);
    const int versions = 1 + i % 3;
    for (int j = 0; j < versions; ++j) {
      const std::string version = std::to_string(1 + j) + "." + std::to_string(i % 5) + ".0";
      nlohmann::json doc{{"name", name}, {"version", version}, {"summary", "fixture pod"}};
      if (i % 4 == 0) {
        doc["source"] = {{"http", "https://downloads.pod" + std::to_string(i) + ".com/" + version + ".zip"}};
        if (j % 2 == 0) doc["source"]["sha256"] = std::string(64, 'a' + static_cast<char>(j));
      } else {
        doc["source"] = {{"git", "https://github.com/owner" + std::to_string(i) + "/" + name + ".git"},
                         {"tag", version}};
        if (i % 3 == 0) doc["source"]["commit"] = std::string(40, '0' + static_cast<char>(j));
      }
      if (i % 7 == 0) doc["module_name"] = name + "Kit";
      if (i % 11 == 0) doc["header_dir"] = "Shared";
      if (i % 13 == 0) doc["prepare_command"] = "echo hi";
      const fs::path dir = root / "Specs" / std::to_string(i % 3) / std::to_string(i % 5) / name / version;
      write_file(dir / (name + ".podspec.json"), doc.dump(2));
    }
  }
}

}  // namespace testsupport
