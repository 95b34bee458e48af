#include <doctest.h>

#define CHAINAUDIT_TEST_ZIP
#include "chainaudit/bundle.hpp"
#include "chainaudit/error.hpp"
#include "chainaudit/zip.hpp"
#include "support.hpp"

using namespace chainaudit;
using namespace testsupport;

TEST_CASE("scan finds frameworks, identifiers and versions") {
  TempDir dir;
  make_sample_bundle(dir.path());
  BundleScan scan = scan_bundle(dir.path());
  REQUIRE(scan.frameworks.size() == 5);
  CHECK(scan.frameworks[0].framework_name == "Alamofire");
  int pods = 0;
  for (const auto& fw : scan.frameworks) pods += fw.is_cocoapods;
  CHECK(pods == 3);
  const auto& corp = scan.frameworks[1];
  CHECK(corp.framework_name == "CorpAuth");
  CHECK(corp.bundle_identifier == "org.cocoapods.CorpAuth");
  CHECK(corp.bundle_version == "2.3.1");
  CHECK(corp.plist_path == "Frameworks/CorpAuth.framework/Info.plist");
  CHECK(scan.scan_warnings.empty());
}

TEST_CASE("frameworks outside a Frameworks directory are ignored") {
  TempDir dir;
  write_file(dir / "PlugIns/Ext.appex/Stuff/Thing.framework/Info.plist",
             xml_plist({{"CFBundleIdentifier", "org.cocoapods.Thing"}}));
  add_framework(dir / "PlugIns/Ext.appex", "Nested", "org.cocoapods.Nested", "1.0");
  BundleScan scan = scan_bundle(dir.path());
  REQUIRE(scan.frameworks.size() == 1);
  CHECK(scan.frameworks[0].framework_name == "Nested");
}

TEST_CASE("broken plists become warnings") {
  TempDir dir;
  write_file(dir / "Frameworks/Bad.framework/Info.plist", "not a plist");
  std::filesystem::create_directories(dir / "Frameworks/NoPlist.framework");
  BundleScan scan = scan_bundle(dir.path());
  REQUIRE(scan.frameworks.size() == 2);
  CHECK_FALSE(scan.frameworks[0].is_cocoapods);
  CHECK(scan.scan_warnings.size() == 2);
}

TEST_CASE("binary Info.plist is read") {
  TempDir dir;
  write_file(dir / "Frameworks/CorpAuth.framework/Info.plist", read_file(fixture("plist/framework_info.bin")));
  BundleScan scan = scan_bundle(dir.path());
  REQUIRE(scan.frameworks.size() == 1);
  CHECK(scan.frameworks[0].is_cocoapods);
  CHECK(scan.frameworks[0].bundle_version == "2.3.1");
}

TEST_CASE("scan errors") {
  CHECK_THROWS_AS(scan_bundle("/nonexistent/really"), Error);
  TempDir dir;
  write_file(dir / "file", "x");
  try {
    scan_bundle(dir / "file");
    FAIL("expected NotADirectory");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotADirectory);
  }
}

TEST_CASE("npm names from node_modules and www/plugins") {
  auto names = extract_npm_names({
      "www/node_modules/left-pad/index.js",
      "www/node_modules/@corp/auth-sdk/package.json",
      "www/plugins/cordova-plugin-device/www/device.js",
      "node_modules/lodash/lodash.js",
      "a/node_modules/lodash/other.js",
      "node_modules/.bin/tool",
      "node_modules/BadName/x.js",
      "node_modules/just-a-file",
      "node_modules/@scope",
  });
  std::vector<std::string> got;
  for (const auto& n : names) got.push_back(n.package_name);
  CHECK(got == std::vector<std::string>{"@corp/auth-sdk", "cordova-plugin-device", "left-pad", "lodash"});
  CHECK(names.find(NpmNameRecord{"lodash", ""})->source_path == "a/node_modules/lodash/other.js");
}

TEST_CASE("npm names inside a bundle") {
  TempDir dir;
  write_file(dir / "public/node_modules/internal-widgets/index.js", "x");
  BundleScan scan = scan_bundle(dir.path());
  REQUIRE(scan.npm_names.size() == 1);
  CHECK(scan.npm_names.begin()->package_name == "internal-widgets");
}

TEST_CASE("scan is deterministic") {
  TempDir dir;
  make_sample_bundle(dir.path());
  CHECK(scan_bundle(dir.path()) == scan_bundle(dir.path()));
}

TEST_CASE("zip reading and extraction") {
  auto zip = make_stored_zip({{"Payload/", ""},
                              {"Payload/App.app/Frameworks/CorpAuth.framework/Info.plist",
                               xml_plist({{"CFBundleIdentifier", "org.cocoapods.CorpAuth"}, {"CFBundleVersion", "1.0"}})},
                              {"Payload/App.app/App", "binary"}});
  std::vector<std::uint8_t> bytes(zip.begin(), zip.end());
  auto entries = read_zip(bytes);
  REQUIRE(entries.size() == 3);
  CHECK(entries[0].is_directory);
  CHECK(std::string(entries[2].contents.begin(), entries[2].contents.end()) == "binary");

  TempDir dir;
  write_file(dir / "app.ipa", zip);
  extract_zip(dir / "app.ipa", dir / "out");
  auto scan = scan_bundle(dir / "out/Payload");
  REQUIRE(scan.frameworks.size() == 1);
  CHECK(scan.frameworks[0].framework_name == "CorpAuth");
}

TEST_CASE("zip rejects traversal and garbage") {
  auto evil = make_stored_zip({{"../escape.txt", "x"}});
  TempDir dir;
  write_file(dir / "evil.zip", evil);
  CHECK_THROWS_AS(extract_zip(dir / "evil.zip", dir / "out"), Error);
  CHECK_FALSE(std::filesystem::exists(dir.path().parent_path() / "escape.txt"));
  std::string junk = "PK not a zip";
  CHECK_THROWS_AS(read_zip(std::vector<std::uint8_t>(junk.begin(), junk.end())), Error);
}
