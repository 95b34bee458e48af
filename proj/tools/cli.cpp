#include "cli.hpp"

#include <stdlib.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <set>

#include "chainaudit/bundle.hpp"
#include "chainaudit/error.hpp"
#include "chainaudit/fixture_transport.hpp"
#include "chainaudit/http_transport.hpp"
#include "chainaudit/manifest.hpp"
#include "chainaudit/probe_cache.hpp"
#include "chainaudit/probes.hpp"
#include "chainaudit/report.hpp"
#include "chainaudit/risk.hpp"
#include "chainaudit/spec_index.hpp"
#include "chainaudit/text.hpp"
#include "chainaudit/zip.hpp"

namespace chainaudit::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
  std::string format = "json";
  std::string cache;
  bool offline = false;
  unsigned concurrency = 8;
  std::string fail_on = "high";
  std::vector<std::string> severity_overrides;
  std::string transport_fixture;
  std::string now;

  std::string specs_dir;
  std::string index_out;

  std::string target;
  std::string index_path;
  bool online = false;
  std::string private_names;
  std::string kind;
};

// Thrown for bad input detected after argument parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_text_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + p.string());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::set<std::string> read_private_names(const std::string& path) {
  std::set<std::string> names;
  if (path.empty()) return names;
  const std::string text = read_text_file(path);
  for (auto line : split_lines(text)) {
    line = trim(line);
    if (!line.empty() && line.front() != '#') names.emplace(line);
  }
  return names;
}

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "chainaudit-XXXXXX").string();
    if (!mkdtemp(tmpl.data())) throw Error(ErrorCode::IoError, "cannot create temporary directory");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

// Everything one invocation shares: clock, transport, cache and prober, plus
// the warnings and transport failures that probing accumulates.
class Session {
 public:
  Session(const Options& opts, const CliEnvironment& env) : opts_(opts) {
    if (!opts.now.empty()) {
      Timestamp fixed;
      if (!parse_timestamp(opts.now, fixed)) throw UsageError("--now expects YYYY-MM-DDTHH:MM:SSZ");
      clock_ = [fixed] { return fixed; };
    } else {
      clock_ = env.clock;
    }
    github_token_ = env.github_token;
    for (const auto& spec : opts.severity_overrides) {
      auto eq = spec.find('=');
      auto rule = eq == std::string::npos ? std::nullopt : rule_from_string(spec.substr(0, eq));
      auto sev = eq == std::string::npos ? std::nullopt : severity_from_string(spec.substr(eq + 1));
      if (!rule || !sev) throw UsageError("--severity expects RULE_ID=level, got '" + spec + "'");
      risk_.severity_overrides[*rule] = *sev;
    }
    risk_.private_names = read_private_names(opts.private_names);
  }

  Timestamp now() const { return clock_(); }
  const RiskConfig& risk() const { return risk_; }
  Severity fail_on() const { return *severity_from_string(opts_.fail_on); }

  Prober& prober() {
    if (!prober_) {
      if (opts_.offline) {
        transport_ = std::make_unique<OfflineTransport>();
      } else if (!opts_.transport_fixture.empty()) {
        transport_ = FixtureTransport::load(opts_.transport_fixture);
      } else {
        transport_ = std::make_unique<HttpTransport>();
      }
      if (!opts_.cache.empty()) cache_ = std::make_unique<ProbeCache>(fs::path(opts_.cache), kDefaultProbeTtl, clock_);
      ProbeConfig config;
      config.clock = clock_;
      config.github_token = github_token_;
      prober_ = std::make_unique<Prober>(*transport_, config, cache_.get());
    }
    return *prober_;
  }

  // Runs one probe kind over many subjects, storing successes in `into` and
  // turning failures into warnings.
  template <class T, class F, class Map>
  void probe_all(const std::string& what, const std::set<std::string>& subjects, F&& probe, Map& into) {
    if (subjects.empty()) return;
    prober();
    std::vector<std::string> list(subjects.begin(), subjects.end());
    auto results = bulk<T>(list, probe, opts_.concurrency);
    for (auto& [subject, outcome] : results) {
      if (outcome.value) {
        into.insert_or_assign(subject, std::move(*outcome.value));
        continue;
      }
      warnings_.push_back(what + " probe failed for " + subject + ": " + outcome.error);
      if (!outcome.error_code || *outcome.error_code == ErrorCode::TransportError ||
          *outcome.error_code == ErrorCode::RateLimited || *outcome.error_code == ErrorCode::UnexpectedNetworkAccess) {
        transport_failed_ = true;
      }
    }
  }

  void probe_needs(const ProbeNeeds& needs, ProbeResults& results) {
    probe_all<Availability>("domain", needs.domains, [&](const std::string& d) { return prober().check_domain(d); },
                            results.domains);
    probe_all<GitHubRepoStatus>(
        "github", needs.github,
        [&](const std::string& key) {
          auto slash = key.find('/');
          return prober().check_github_repo(key.substr(0, slash), key.substr(slash + 1));
        },
        results.github);
  }

  std::vector<std::string>& warnings() { return warnings_; }
  bool transport_failed() const { return transport_failed_; }

 private:
  const Options& opts_;
  Clock clock_;
  std::optional<std::string> github_token_;
  RiskConfig risk_;
  std::unique_ptr<Transport> transport_;
  std::unique_ptr<ProbeCache> cache_;
  std::unique_ptr<Prober> prober_;
  std::vector<std::string> warnings_;
  bool transport_failed_ = false;
};

int emit_report(Session& s, const Options& opts, std::vector<ReportInput> inputs, std::vector<Finding> findings,
                std::ostream& out) {
  Report report = make_report(std::move(inputs), std::move(findings), s.now(), s.warnings());
  out << (opts.format == "text" ? render_text(report) : render_json(report));
  if (s.transport_failed()) return kExitTransport;
  return exit_code_for(report.findings, s.fail_on());
}

// Hijack checks for the given public pods: owners first, then every domain
// and GitHub repository they reference.
void evaluate_pod_hijacks(Session& s, const SpecIndex& index, const std::set<std::string>& pods,
                          std::vector<Finding>& findings) {
  ProbeResults probes;
  s.probe_all<std::vector<PodOwner>>(
      "owners", pods, [&](const std::string& pod) { return s.prober().fetch_pod_owners(pod, nullptr); },
      probes.owners);
  ProbeNeeds needs;
  for (const auto& pod : pods) {
    const PodRecord* record = find_pod(index, pod);
    auto owners = probes.owners.find(pod);
    if (!record || owners == probes.owners.end()) continue;
    ProbeNeeds n = probe_needs_for_pod(*record, owners->second);
    needs.domains.insert(n.domains.begin(), n.domains.end());
    needs.github.insert(n.github.begin(), n.github.end());
  }
  s.probe_needs(needs, probes);
  for (const auto& pod : pods) {
    const PodRecord* record = find_pod(index, pod);
    auto owners = probes.owners.find(pod);
    if (!record || owners == probes.owners.end()) continue;
    try {
      auto f = evaluate_pod_hijack(*record, owners->second, probes, s.risk());
      findings.insert(findings.end(), f.begin(), f.end());
    } catch (const Error& e) {
      s.warnings().push_back("hijack checks skipped for " + pod + ": " + e.what());
    }
  }
}

int cmd_index_build(const Options& opts, std::ostream& out, std::ostream& err, const CliEnvironment& env) {
  Clock clock = env.clock;
  if (!opts.now.empty()) {
    Timestamp fixed;
    if (!parse_timestamp(opts.now, fixed)) throw UsageError("--now expects YYYY-MM-DDTHH:MM:SSZ");
    clock = [fixed] { return fixed; };
  }
  auto result = build_index(opts.specs_dir, clock);
  save_index(result.index, opts.index_out);
  std::size_t versions = 0;
  for (const auto& [name, rec] : result.index.pods) versions += rec.versions.size();
  for (const auto& w : result.warnings) err << "warning: " << w << "\n";
  json summary{{"index", opts.index_out},
               {"pods", result.index.pods.size()},
               {"versions", versions},
               {"skipped", result.skipped},
               {"source_tree_digest", result.index.source_tree_digest}};
  if (opts.format == "text") {
    out << "indexed " << result.index.pods.size() << " pods (" << versions << " versions, " << result.skipped
        << " skipped) into " << opts.index_out << "\n";
  } else {
    out << summary.dump(2) << "\n";
  }
  return kExitClean;
}

int cmd_scan_app(const Options& opts, std::ostream& out, const CliEnvironment& env) {
  Session s(opts, env);
  if (opts.online && opts.offline) throw UsageError("--online and --offline are mutually exclusive");
  SpecIndex index = load_index(opts.index_path);

  std::optional<TempDir> extracted;
  fs::path root = opts.target;
  std::error_code ec;
  if (fs::is_regular_file(root, ec)) {
    extracted.emplace();
    extract_zip(root, extracted->path());
    root = fs::is_directory(extracted->path() / "Payload", ec) ? extracted->path() / "Payload" : extracted->path();
  }
  BundleScan scan = scan_bundle(root);
  for (const auto& w : scan.scan_warnings) s.warnings().push_back(w);

  ProbeResults probes;
  if (opts.online) {
    std::set<std::string> unregistered;
    std::set<std::string> public_pods;
    for (const auto& fw : scan.frameworks) {
      if (!fw.is_cocoapods) continue;
      auto pods = lookup_framework(index, fw.framework_name);
      if (pods.empty()) unregistered.insert(fw.framework_name);
      public_pods.insert(pods.begin(), pods.end());
    }
    std::set<std::string> npm;
    for (const auto& n : scan.npm_names) npm.insert(n.package_name);
    s.probe_all<Availability>("trunk", unregistered, [&](const std::string& n) { return s.prober().check_trunk_name(n); },
                              probes.trunk);
    s.probe_all<Availability>("npm", npm, [&](const std::string& n) { return s.prober().check_npm_name(n); }, probes.npm);
    std::vector<Finding> findings = evaluate_bundle(scan, index, &probes, s.risk());
    evaluate_pod_hijacks(s, index, public_pods, findings);
    return emit_report(s, opts, {{"bundle", opts.target}, {"index", opts.index_path}}, std::move(findings), out);
  }
  std::vector<Finding> findings = evaluate_bundle(scan, index, nullptr, s.risk());
  return emit_report(s, opts, {{"bundle", opts.target}, {"index", opts.index_path}}, std::move(findings), out);
}

int cmd_scan_manifest(const Options& opts, std::ostream& out, const CliEnvironment& env) {
  Session s(opts, env);
  if (opts.online && opts.offline) throw UsageError("--online and --offline are mutually exclusive");
  std::optional<ManifestKind> kind =
      opts.kind.empty() ? detect_manifest_kind(opts.target) : manifest_kind_from_string(opts.kind);
  if (!kind) {
    throw UsageError(opts.kind.empty() ? "cannot tell the manifest kind of '" + opts.target + "'; pass --kind"
                                       : "unknown --kind '" + opts.kind + "'");
  }
  Manifest manifest = parse_manifest(*kind, read_text_file(opts.target));
  for (const auto& w : manifest.parse_warnings) s.warnings().push_back(opts.target + ": " + w);

  std::vector<ReportInput> inputs{{"manifest:" + std::string(to_string(*kind)), opts.target}};
  std::vector<Finding> findings;
  const bool pods = *kind == ManifestKind::podfile || *kind == ManifestKind::podfile_lock;
  std::optional<SpecIndex> index;
  if (!opts.index_path.empty()) {
    index = load_index(opts.index_path);
    inputs.push_back({"index", opts.index_path});
  } else if (pods) {
    throw UsageError("--index is required for Podfile and Podfile.lock manifests");
  }

  ProbeResults probes;
  if (opts.online) {
    if (pods && index) {
      std::set<std::string> unregistered;
      for (const auto& e : manifest.entries) {
        std::string root = e.name.substr(0, e.name.find('/'));
        if (!e.explicit_location && !find_pod(*index, root)) unregistered.insert(root);
      }
      s.probe_all<Availability>("trunk", unregistered,
                                [&](const std::string& n) { return s.prober().check_trunk_name(n); }, probes.trunk);
    }
    s.probe_needs(probe_needs_for_manifest(manifest), probes);
  }

  if (pods) {
    auto f = evaluate_pod_manifest(manifest, *index, opts.online ? &probes : nullptr, s.risk());
    findings.insert(findings.end(), f.begin(), f.end());
  }
  if (opts.online) {
    try {
      auto f = *kind == ManifestKind::go_mod ? evaluate_go_manifest(manifest, probes, s.risk())
                                             : evaluate_manifest_sources(manifest, probes, s.risk());
      findings.insert(findings.end(), f.begin(), f.end());
    } catch (const Error& e) {
      if (e.code() != ErrorCode::MissingProbe) throw;
      s.warnings().push_back(std::string("hijack checks incomplete: ") + e.what());
    }
  } else if (!pods) {
    s.warnings().push_back(std::string(to_string(*kind)) + " checks need probe evidence; rerun with --online");
  }
  return emit_report(s, opts, std::move(inputs), std::move(findings), out);
}

void print_availability(const Availability& a, const Options& opts, std::ostream& out) {
  if (opts.format == "text") {
    out << a.subject << ": " << to_string(a.state) << "\n";
    for (const auto& e : a.evidence) out << "  " << e.probe << ": " << e.observation << "\n";
  } else {
    out << to_json(a).dump(2) << "\n";
  }
}

int cmd_check(const std::string& what, const Options& opts, std::ostream& out, const CliEnvironment& env) {
  if (opts.offline) throw UsageError("check commands need the network; --offline forbids it");
  Session s(opts, env);
  Prober& p = s.prober();
  if (what == "domain") {
    print_availability(p.check_domain(opts.target), opts, out);
  } else if (what == "npm") {
    print_availability(p.check_npm_name(opts.target), opts, out);
  } else if (what == "github") {
    auto slash = opts.target.find('/');
    if (slash == std::string::npos || opts.target.find('/', slash + 1) != std::string::npos) {
      throw UsageError("expected <namespace>/<repository>, got '" + opts.target + "'");
    }
    GitHubRepoStatus st = p.check_github_repo(opts.target.substr(0, slash), opts.target.substr(slash + 1));
    if (opts.format == "text") {
      out << opts.target << ": " << to_string(st.state);
      if (st.redirect_target) out << " -> " << *st.redirect_target;
      if (st.stars) out << " (" << *st.stars << " stars)";
      out << ", retirement " << to_string(st.retirement) << "\n";
      for (const auto& e : st.evidence) out << "  " << e.probe << ": " << e.observation << "\n";
    } else {
      out << to_json(st).dump(2) << "\n";
    }
  } else {
    std::vector<std::string> warnings;
    auto owners = p.fetch_pod_owners(opts.target, &warnings);
    if (opts.format == "text") {
      for (const auto& w : warnings) out << "warning: " << w << "\n";
      for (const auto& o : owners) out << o.owner_name << " <" << o.email << "> domain " << o.email_domain << "\n";
    } else {
      json arr = json::array();
      for (const auto& o : owners) arr.push_back(to_json(o));
      out << json{{"pod", opts.target}, {"owners", arr}, {"warnings", warnings}}.dump(2) << "\n";
    }
  }
  return kExitClean;
}

int exit_for_error(const Error& e) {
  switch (e.code()) {
    case ErrorCode::TransportError:
    case ErrorCode::RateLimited:
    case ErrorCode::UnexpectedNetworkAccess:
    case ErrorCode::MalformedResponse:
      return kExitTransport;
    default:
      return kExitUsage;
  }
}

}  // namespace

CliEnvironment environment_from_process() {
  CliEnvironment env;
  if (const char* t = std::getenv("GITHUB_TOKEN"); t && *t) env.github_token = t;
  return env;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const CliEnvironment& env) {
  Options opts;
  CLI::App app{"Supply-chain auditor for iOS app bundles and dependency manifests", "chainaudit"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(tool_version()));

  app.add_option("--format", opts.format, "Report format")->check(CLI::IsMember({"json", "text"}));
  app.add_option("--cache", opts.cache, "Probe cache file (JSON lines)");
  app.add_flag("--offline", opts.offline, "Forbid all network access");
  app.add_option("--concurrency", opts.concurrency, "Probes in flight at once")->check(CLI::Range(1u, 256u));
  app.add_option("--fail-on", opts.fail_on, "Lowest severity that makes the exit code 1")
      ->check(CLI::IsMember({"critical", "high", "medium", "low", "info"}));
  app.add_option("--severity", opts.severity_overrides, "Override a rule's base severity, RULE_ID=level");
  app.add_option("--transport-fixture", opts.transport_fixture)->group("");
  app.add_option("--now", opts.now)->group("");

  auto* index_cmd = app.add_subcommand("index", "Spec index management");
  index_cmd->require_subcommand(1);
  auto* build_cmd = index_cmd->add_subcommand("build", "Index a CocoaPods Specs checkout");
  build_cmd->add_option("specs-dir", opts.specs_dir, "Specs checkout")->required();
  build_cmd->add_option("-o,--output", opts.index_out, "Index file to write")->required();

  auto* scan_cmd = app.add_subcommand("scan", "Scan an app bundle or a manifest");
  scan_cmd->require_subcommand(1);
  auto* app_cmd = scan_cmd->add_subcommand("app", "Scan an extracted app bundle or an .ipa");
  app_cmd->add_option("bundle", opts.target, "Bundle directory or .ipa")->required();
  app_cmd->add_option("--index", opts.index_path, "Spec index file")->required();
  app_cmd->add_flag("--online", opts.online, "Probe registries, RDAP and GitHub");
  app_cmd->add_option("--private-names", opts.private_names, "Newline-separated internal names to ignore");
  auto* manifest_cmd = scan_cmd->add_subcommand("manifest", "Scan a dependency manifest");
  manifest_cmd->add_option("file", opts.target, "Manifest file")->required();
  manifest_cmd->add_option("--index", opts.index_path, "Spec index file");
  manifest_cmd->add_flag("--online", opts.online, "Probe registries, RDAP and GitHub");
  manifest_cmd->add_option("--kind", opts.kind, "podfile, podfile_lock, cartfile_resolved, package_resolved, go_mod");
  manifest_cmd->add_option("--private-names", opts.private_names, "Newline-separated internal names to ignore");

  auto* check_cmd = app.add_subcommand("check", "Run a single probe");
  check_cmd->require_subcommand(1);
  std::map<CLI::App*, std::string> checks;
  for (const char* name : {"domain", "github", "npm", "pod-owners"}) {
    auto* c = check_cmd->add_subcommand(name, std::string("Probe ") + name);
    c->add_option("subject", opts.target, "What to check")->required();
    checks[c] = name;
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitClean : kExitUsage;
  }

  try {
    if (*build_cmd) return cmd_index_build(opts, out, err, env);
    if (*app_cmd) return cmd_scan_app(opts, out, env);
    if (*manifest_cmd) return cmd_scan_manifest(opts, out, env);
    for (const auto& [c, name] : checks) {
      if (*c) return cmd_check(name, opts, out, env);
    }
    err << "chainaudit: no command given\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "chainaudit: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "chainaudit: " << e.what() << "\n";
    return exit_for_error(e);
  } catch (const std::invalid_argument& e) {
    err << "chainaudit: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "chainaudit: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace chainaudit::cli
