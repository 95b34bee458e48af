#include <doctest.h>

#include <random>

#include "chainaudit/error.hpp"
#include "chainaudit/resolution.hpp"
#include "support.hpp"

using namespace chainaudit;
using namespace testsupport;

namespace {

SpecIndex public_index() {
  return make_index({make_pod_record("GoogleAnalytics", {git_version("3.17.0", "https://dl.google.com/ga")}),
                     make_pod_record("OCMock", {git_version("3.9.1", "https://github.com/erikdoe/ocmock.git")})},
                    fixed_time(), "public");
}

std::map<std::string, Classification> classify(const Manifest& m, const SpecIndex& idx) {
  std::map<std::string, Classification> out;
  for (const auto& v : analyze_podfile(m, idx)) out[v.dependency] = v.classification;
  return out;
}

Requirement req(const std::string& s) { return parse_requirement(s); }

}  // namespace

TEST_CASE("public-first podfile is confusable") {
  auto verdicts = analyze_podfile(parse_podfile(read_file(fixture("manifests/Podfile.public-first"))), public_index());
  std::map<std::string, const ResolutionVerdict*> by;
  for (const auto& v : verdicts) by[v.dependency] = &v;
  CHECK(by.at("Aerodramus")->classification == Classification::unregistered_confusable);
  CHECK(by.at("Aerodramus")->attacker_version_needed->raw() == "2.0.0");
  CHECK(by.at("Artsy+UIFonts")->classification == Classification::unregistered_confusable);
  CHECK(by.at("OCMock")->classification == Classification::shadowable_multisource);
  CHECK(by.at("OCMock")->attacker_version_needed->raw() == "2.27");
  CHECK(by.at("GoogleAnalytics")->classification == Classification::shadowable_multisource);
  CHECK(by.at("Aerodramus")->rationale.find("pod update") != std::string::npos);
}

TEST_CASE("private-first podfile is safe") {
  auto c = classify(parse_podfile(read_file(fixture("manifests/Podfile.private-first"))), public_index());
  CHECK(c.at("Aerodramus") == Classification::explicit_location_safe);
  CHECK(c.at("Artsy+UIFonts") == Classification::private_first_safe);
  CHECK(c.at("OCMock") == Classification::public_only);
  for (const auto& [name, cls] : c) CHECK(cls != Classification::unregistered_confusable);
}

TEST_CASE("single public source with known pods is public_only") {
  auto c = classify(parse_podfile("source 'https://cdn.cocoapods.org/'\npod 'OCMock'\npod 'GoogleAnalytics'\n"),
                    public_index());
  for (const auto& [name, cls] : c) CHECK(cls == Classification::public_only);
}

TEST_CASE("no sources means trunk only") {
  auto v = analyze_podfile(parse_podfile("pod 'Mystery', '~> 1.2'\npod 'Local', :path => '.'\n"), public_index());
  CHECK(v[0].classification == Classification::unregistered_confusable);
  CHECK(v[0].attacker_version_needed->raw() == "1.2");
  CHECK(v[1].classification == Classification::local_path_safe);
  CHECK_FALSE(v[1].attacker_version_needed);
}

TEST_CASE("subspecs resolve through their root pod") {
  auto c = classify(parse_podfile("pod 'OCMock/Core'\npod 'Corp/Core'\n"), public_index());
  CHECK(c.at("OCMock/Core") == Classification::public_only);
  CHECK(c.at("Corp/Core") == Classification::unregistered_confusable);
}

TEST_CASE("analyze_podfile rejects other manifests") {
  Manifest lock;
  lock.kind = ManifestKind::podfile_lock;
  try {
    analyze_podfile(lock, public_index());
    FAIL("expected WrongManifestKind");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::WrongManifestKind);
  }
}

TEST_CASE("public source detection") {
  CHECK(is_public_cocoapods_source("https://cdn.cocoapods.org/"));
  CHECK(is_public_cocoapods_source("https://github.com/CocoaPods/Specs.git"));
  CHECK(is_public_cocoapods_source("trunk"));
  CHECK_FALSE(is_public_cocoapods_source("https://github.com/artsy/Specs.git"));
}

TEST_CASE("attacker_target_version examples") {
  std::vector<Requirement> exact{req("1.4.2")};
  CHECK(attacker_target_version(exact).raw() == "1.4.2");
  std::vector<Requirement> twiddle{req("~> 2.27")};
  CHECK(attacker_target_version(twiddle).raw() == "2.27");
  CHECK(attacker_target_version({}).raw() == "0.0.1");
  std::vector<Requirement> gt{req("> 1.0")};
  CHECK(attacker_target_version(gt).raw() == "1.1");
  std::vector<Requirement> narrow{req("> 1.0"), req("< 1.1")};
  CHECK(attacker_target_version(narrow).raw() == "1.0.1");
  std::vector<Requirement> empty{req(">= 1.0"), req("< 1.0")};
  try {
    attacker_target_version(empty);
    FAIL("expected UnsatisfiableRequirements");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnsatisfiableRequirements);
  }
}

TEST_CASE("attacker_target_version satisfies whatever it returns") {
  std::mt19937 rng(11);
  const char* ops[] = {"", "= ", "> ", ">= ", "< ", "<= ", "~> "};
  auto num = [&] { return std::to_string(std::uniform_int_distribution<int>(0, 4)(rng)); };
  for (int i = 0; i < 3000; ++i) {
    std::vector<Requirement> reqs;
    const int n = std::uniform_int_distribution<int>(0, 3)(rng);
    for (int k = 0; k < n; ++k) {
      std::string text = ops[std::uniform_int_distribution<int>(0, 6)(rng)] + num() + "." + num();
      if (std::uniform_int_distribution<int>(0, 1)(rng)) text += "." + num();
      reqs.push_back(req(text));
    }
    try {
      VersionString t = attacker_target_version(reqs);
      CHECK(satisfies_all(t, reqs));
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::UnsatisfiableRequirements);
    }
  }
}

TEST_CASE("adding pods to the index never creates confusable verdicts") {
  std::mt19937 rng(5);
  std::vector<std::string> names{"A", "B", "C", "D", "E", "F"};
  for (int round = 0; round < 200; ++round) {
    std::string podfile;
    if (rng() % 2) podfile += "source 'https://cdn.cocoapods.org/'\n";
    if (rng() % 2) podfile += "source 'https://git.corp.example/Specs.git'\n";
    for (const auto& n : names) {
      if (rng() % 2) podfile += "pod '" + n + "'\n";
    }
    Manifest m = parse_podfile(podfile);
    std::vector<PodRecord> small, large;
    for (const auto& n : names) {
      bool in_small = rng() % 3 == 0;
      if (in_small) small.push_back(make_pod_record(n, {git_version("1.0", "u")}));
      if (in_small || rng() % 2) large.push_back(make_pod_record(n, {git_version("1.0", "u")}));
    }
    auto before = classify(m, make_index(small, fixed_time(), ""));
    auto after = classify(m, make_index(large, fixed_time(), ""));
    for (const auto& [name, cls] : after) {
      if (cls == Classification::unregistered_confusable) CHECK(before.at(name) == cls);
    }
  }
}

TEST_CASE("bundle confusion report") {
  TempDir dir;
  make_sample_bundle(dir.path());
  auto verdicts = confusion_report_for_bundle(scan_bundle(dir.path()), bundle_index());
  REQUIRE(verdicts.size() == 3);
  std::map<std::string, const ResolutionVerdict*> by;
  for (const auto& v : verdicts) by[v.dependency] = &v;
  CHECK(by.at("Alamofire")->classification == Classification::public_only);
  CHECK(by.at("CorpAuth")->classification == Classification::unregistered_confusable);
  CHECK(by.at("CorpAuth")->attacker_version_needed->raw() == "2.3.1");

  BundleScan vendor_only;
  vendor_only.frameworks.push_back({"Sentry", "io.sentry.Sentry", "8.0", false, "x"});
  CHECK(confusion_report_for_bundle(vendor_only, bundle_index()).empty());
}
