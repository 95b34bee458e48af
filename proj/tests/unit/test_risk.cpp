#include <doctest.h>

#include <random>

#include "chainaudit/error.hpp"
#include "chainaudit/risk.hpp"
#include "support.hpp"

using namespace chainaudit;
using namespace testsupport;

namespace {

Availability avail(const std::string& subject, AvailabilityState s) {
  Availability a;
  a.subject = subject;
  a.state = s;
  a.checked_at = fixed_time();
  std::string obs = s == AvailabilityState::available ? "not-found: HTTP 404" : "HTTP 200";
  a.evidence.push_back({"rdap", obs, fixed_time()});
  return a;
}

GitHubRepoStatus gh(const std::string& ns, const std::string& img, GitHubState s) {
  GitHubRepoStatus g;
  g.namespace_name = ns;
  g.image_name = img;
  g.state = s;
  if (s == GitHubState::redirected) g.redirect_target = "elsewhere/" + img;
  g.evidence.push_back({"github-repo", "fixture", fixed_time()});
  return g;
}

SpecIndex public_index() {
  return make_index({make_pod_record("GoogleAnalytics", {git_version("3.17.0", "https://dl.google.com/ga")}),
                     make_pod_record("OCMock", {git_version("3.9.1", "https://github.com/erikdoe/ocmock.git")})},
                    fixed_time(), "public");
}

std::size_t count(const std::vector<Finding>& fs, RuleId r) {
  return std::count_if(fs.begin(), fs.end(), [&](const Finding& f) { return f.rule_id == r; });
}

const Finding& only(const std::vector<Finding>& fs, RuleId r) {
  REQUIRE(count(fs, r) == 1);
  return *std::find_if(fs.begin(), fs.end(), [&](const Finding& f) { return f.rule_id == r; });
}

}  // namespace

TEST_CASE("severity ladder") {
  CHECK(reduce(Severity::critical) == Severity::high);
  CHECK(reduce(Severity::info) == Severity::info);
  CHECK(escalate(Severity::critical) == Severity::critical);
  CHECK(escalate(Severity::high) == Severity::critical);
  CHECK(severity_rank(Severity::critical) > severity_rank(Severity::info));
  CHECK(severity_from_string("HIGH") == Severity::high);
  CHECK_FALSE(severity_from_string("urgent"));
  CHECK(rule_from_string("GO_HIJACK") == RuleId::GO_HIJACK);
  CHECK(catalog_section(RuleId::CONFUSION_POD) == "rules.md#confusion_pod");
  CHECK(base_severity(RuleId::HIJACK_OWNER_DOMAIN) == Severity::critical);
  CHECK(base_severity(RuleId::PIN_MISSING) == Severity::low);
  RiskConfig cfg;
  cfg.severity_overrides[RuleId::PIN_MISSING] = Severity::high;
  CHECK(base_severity(RuleId::PIN_MISSING, cfg) == Severity::high);
}

TEST_CASE("bundle: one confusion finding for the unknown pod") {
  TempDir dir;
  make_sample_bundle(dir.path());
  auto findings = evaluate_bundle(scan_bundle(dir.path()), bundle_index(), nullptr);
  REQUIRE(findings.size() == 1);
  const Finding& f = findings[0];
  CHECK(f.rule_id == RuleId::CONFUSION_POD);
  CHECK(f.subject == "CorpAuth");
  CHECK(f.severity == Severity::high);
  CHECK(f.attacker_version_needed == "2.3.1");
  CHECK(f.catalog_section == "rules.md#confusion_pod");
  CHECK(f.evidence.size() == 3);

  RiskConfig cfg;
  cfg.private_names = {"CorpAuth"};
  CHECK(evaluate_bundle(scan_bundle(dir.path()), bundle_index(), nullptr, cfg).empty());
}

TEST_CASE("bundle: trunk availability escalates, npm names need probes") {
  TempDir dir;
  make_sample_bundle(dir.path());
  write_file(dir / "www/node_modules/corp-widgets/index.js", "x");
  write_file(dir / "www/node_modules/left-pad/index.js", "x");
  ProbeResults probes;
  probes.trunk["CorpAuth"] = avail("CorpAuth", AvailabilityState::available);
  probes.npm["corp-widgets"] = avail("corp-widgets", AvailabilityState::available);
  probes.npm["left-pad"] = avail("left-pad", AvailabilityState::registered);
  auto findings = evaluate_bundle(scan_bundle(dir.path()), bundle_index(), &probes);
  CHECK(only(findings, RuleId::CONFUSION_POD).severity == Severity::critical);
  CHECK(only(findings, RuleId::CONFUSION_NPM).subject == "corp-widgets");
  CHECK(count(evaluate_bundle(scan_bundle(dir.path()), bundle_index(), nullptr), RuleId::CONFUSION_NPM) == 0);
}

TEST_CASE("podfile source orders") {
  auto l1 = evaluate_pod_manifest(parse_podfile(read_file(fixture("manifests/Podfile.public-first"))), public_index(),
                                  nullptr);
  std::size_t high = 0, info = 0;
  for (const auto& f : l1) {
    CHECK(f.rule_id == RuleId::CONFUSION_POD_MANIFEST);
    high += f.severity == Severity::high;
    info += f.severity == Severity::info;
  }
  CHECK(high == 2);
  CHECK(info == 2);
  CHECK(l1[0].severity == Severity::high);

  auto l2 = evaluate_pod_manifest(parse_podfile(read_file(fixture("manifests/Podfile.private-first"))), public_index(),
                                  nullptr);
  CHECK(l2.empty());
}

TEST_CASE("lockfile confusion is reduced") {
  Manifest lock = parse_podfile_lock(read_file(fixture("manifests/Podfile.lock")));
  auto findings = evaluate_pod_manifest(lock, public_index(), nullptr);
  const Finding& f = only(findings, RuleId::CONFUSION_POD_MANIFEST);
  CHECK(f.subject == "CorpAnalytics");
  CHECK(f.severity == Severity::medium);
  CHECK(f.mitigated_by);

  Manifest go;
  go.kind = ManifestKind::go_mod;
  CHECK_THROWS_AS(evaluate_pod_manifest(go, public_index(), nullptr), Error);
}

TEST_CASE("pod hijack: owner domain, source domain and pins") {
  PodRecord rec = make_pod_record("Lib", {git_version("1.0", "https://git.lapsed-host.com/lib.git"),
                                          git_version("1.1", "https://git.lapsed-host.com/lib.git",
                                                      "0123456789abcdef0123456789abcdef01234567")});
  rec.versions[0].has_prepare_command = true;
  std::vector<PodOwner> owners{{"Lib", "Ann", "ann@lapsed-mail.com", "lapsed-mail.com"}};
  ProbeNeeds needs = probe_needs_for_pod(rec, owners);
  CHECK(needs.domains == std::set<std::string>{"lapsed-host.com", "lapsed-mail.com"});

  ProbeResults probes;
  probes.domains["lapsed-mail.com"] = avail("lapsed-mail.com", AvailabilityState::available);
  probes.domains["lapsed-host.com"] = avail("lapsed-host.com", AvailabilityState::available);
  auto findings = evaluate_pod_hijack(rec, owners, probes);
  const Finding& owner = only(findings, RuleId::HIJACK_OWNER_DOMAIN);
  CHECK(owner.severity == Severity::critical);
  CHECK(owner.rationale.find("prepare_command") != std::string::npos);
  const Finding& source = only(findings, RuleId::HIJACK_SOURCE_DOMAIN);
  CHECK(source.severity == Severity::high);
  CHECK_FALSE(source.mitigated_by);
  const Finding& pin = only(findings, RuleId::PIN_MISSING);
  CHECK(pin.evidence.size() == 1);
  CHECK(pin.evidence[0].detail.find("Lib 1.0") == 0);

  ProbeResults missing;
  CHECK_THROWS_AS(evaluate_pod_hijack(rec, owners, missing), Error);
}

TEST_CASE("pod hijack: github namespace and full pinning") {
  PodRecord rec = make_pod_record(
      "Lib", {git_version("1.0", "https://github.com/gone/lib.git", "0123456789abcdef0123456789abcdef01234567")});
  ProbeResults probes;
  probes.github["gone/lib"] = gh("gone", "lib", GitHubState::user_missing);
  auto findings = evaluate_pod_hijack(rec, {}, probes);
  const Finding& f = only(findings, RuleId::HIJACK_GITHUB_NAMESPACE);
  CHECK(f.requires_manual_verification);
  CHECK(f.severity == Severity::medium);
  CHECK(f.mitigated_by == "commit/archive hash on all versions");
  CHECK(count(findings, RuleId::PIN_MISSING) == 0);

  probes.github["gone/lib"] = gh("gone", "lib", GitHubState::exists);
  CHECK(evaluate_pod_hijack(rec, {}, probes).empty());
  probes.github["gone/lib"] = gh("gone", "lib", GitHubState::repo_missing);
  CHECK(evaluate_pod_hijack(rec, {}, probes).empty());
}

TEST_CASE("go.mod vanity host") {
  Manifest m = parse_go_mod(read_file(fixture("manifests/vanity.go.mod")));
  ProbeNeeds needs = probe_needs_for_manifest(m);
  CHECK(needs.domains == std::set<std::string>{"example.com"});
  CHECK(needs.github == std::set<std::string>{"myuser/mydependency"});
  ProbeResults probes;
  probes.domains["example.com"] = avail("example.com", AvailabilityState::available);
  probes.github["myuser/mydependency"] = gh("myuser", "mydependency", GitHubState::exists);
  auto findings = evaluate_go_manifest(m, probes);
  const Finding& f = only(findings, RuleId::GO_HIJACK);
  CHECK(f.subject == "example.com/somedependency");
  CHECK_FALSE(f.requires_manual_verification);

  probes.github["myuser/mydependency"] = gh("myuser", "mydependency", GitHubState::redirected);
  auto two = evaluate_go_manifest(m, probes);
  CHECK(count(two, RuleId::GO_HIJACK) == 2);

  probes.domains.clear();
  CHECK_THROWS_AS(evaluate_go_manifest(m, probes), Error);
}

TEST_CASE("go.mod replace targets are what gets checked") {
  Manifest m = parse_go_mod(read_file(fixture("manifests/replace.go.mod")));
  ProbeNeeds needs = probe_needs_for_manifest(m);
  CHECK(needs.github.contains("forked/lib"));
  CHECK_FALSE(needs.domains.contains("example.net"));
  CHECK_FALSE(needs.github.contains("acme/internal"));
}

TEST_CASE("explicit sources in other manifests") {
  Manifest cart = parse_cartfile_resolved(read_file(fixture("manifests/Cartfile.resolved")));
  ProbeNeeds needs = probe_needs_for_manifest(cart);
  CHECK(needs.github == std::set<std::string>{"alice/lib", "bob/tool"});
  CHECK(needs.domains == std::set<std::string>{"corp.example", "example.com"});
  ProbeResults probes;
  for (const auto& d : needs.domains) probes.domains[d] = avail(d, AvailabilityState::registered);
  probes.domains["corp.example"] = avail("corp.example", AvailabilityState::available);
  probes.github["alice/lib"] = gh("alice", "lib", GitHubState::user_missing);
  probes.github["bob/tool"] = gh("bob", "tool", GitHubState::redirected);
  auto findings = evaluate_manifest_sources(cart, probes);
  // alice/lib: tag only -> high + PIN_MISSING; bob/tool and Networking: commit pinned -> reduced
  CHECK(count(findings, RuleId::HIJACK_GITHUB_NAMESPACE) == 2);
  CHECK(count(findings, RuleId::HIJACK_SOURCE_DOMAIN) == 1);
  CHECK(only(findings, RuleId::PIN_MISSING).subject == "alice/lib");
  for (const auto& f : findings) {
    if (f.subject == "bob/tool") {
      CHECK(f.severity == Severity::medium);
      CHECK(f.mitigated_by);
    }
  }
}

TEST_CASE("dedupe merges and keeps the highest severity") {
  Finding a;
  a.rule_id = RuleId::PIN_MISSING;
  a.subject = "X";
  a.severity = Severity::low;
  a.evidence = {{"s", "1"}};
  Finding b = a;
  b.severity = Severity::high;
  b.evidence = {{"s", "2"}, {"s", "1"}};
  b.requires_manual_verification = true;
  Finding c = a;
  c.subject = "Y";
  auto out = dedupe({a, b, c});
  REQUIRE(out.size() == 2);
  CHECK(out[0].subject == "X");
  CHECK(out[0].severity == Severity::high);
  CHECK(out[0].evidence.size() == 2);
  CHECK(out[0].requires_manual_verification);
  CHECK(dedupe(out) == out);
}

TEST_CASE("pinning never raises severity") {
  std::mt19937 rng(3);
  for (int round = 0; round < 100; ++round) {
    std::vector<PodVersionSpec> versions;
    const int n = 1 + rng() % 3;
    for (int i = 0; i < n; ++i) {
      std::string url = rng() % 2 ? "https://github.com/ns" + std::to_string(rng() % 3) + "/lib.git"
                                  : "https://host" + std::to_string(rng() % 3) + ".com/lib.git";
      versions.push_back(git_version(std::to_string(i) + ".0", url));
    }
    PodRecord loose = make_pod_record("Lib", versions);
    for (auto& v : versions) v.git_commit = "0123456789abcdef0123456789abcdef01234567";
    PodRecord tight = make_pod_record("Lib", versions);
    ProbeResults probes;
    for (int i = 0; i < 3; ++i) {
      auto d = "host" + std::to_string(i) + ".com";
      probes.domains[d] = avail(d, rng() % 2 ? AvailabilityState::available : AvailabilityState::registered);
      auto ns = "ns" + std::to_string(i);
      probes.github[ns + "/lib"] = gh(ns, "lib", static_cast<GitHubState>(rng() % 4));
    }
    auto before = evaluate_pod_hijack(loose, {}, probes);
    auto after = evaluate_pod_hijack(tight, {}, probes);
    for (const auto& f : after) {
      auto it = std::find_if(before.begin(), before.end(),
                             [&](const Finding& g) { return g.rule_id == f.rule_id && g.subject == f.subject; });
      REQUIRE(it != before.end());
      CHECK(severity_rank(f.severity) <= severity_rank(it->severity));
    }
  }
}
