#include <doctest.h>

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <random>

#include "chainaudit/error.hpp"
#include "chainaudit/fixture_transport.hpp"
#include "chainaudit/http_transport.hpp"
#include "chainaudit/probe_cache.hpp"
#include "chainaudit/probes.hpp"
#include "chainaudit/public_suffix.hpp"
#include "chainaudit/rate_limiter.hpp"
#include "chainaudit/url.hpp"
#include "support.hpp"

using namespace chainaudit;
using namespace testsupport;
using nlohmann::json;

namespace {

const std::string kVerisign = "https://rdap.verisign.com/com/v1/domain/";
const std::string kGitHub = "https://api.github.com";

ProbeConfig config() {
  ProbeConfig c;
  c.clock = [] { return fixed_time(); };
  return c;
}

HttpResponse status(int code, std::string body = "", std::map<std::string, std::string> headers = {}) {
  HttpResponse r;
  r.status = code;
  r.body = std::move(body);
  r.headers = std::move(headers);
  return r;
}

HttpResponse timeout() {
  HttpResponse r;
  r.timed_out = true;
  return r;
}

DnsAnswer dns(DnsStatus s, std::vector<std::string> ns = {}) { return DnsAnswer{s, std::move(ns)}; }

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("url parsing") {
  auto u = parse_url("https://user@GitHub.com:443/Owner/Repo.git?x#y");
  REQUIRE(u);
  CHECK(u->scheme == "https");
  CHECK(u->host == "github.com");
  CHECK(u->path == "Owner/Repo.git");
  auto scp = parse_url("git@github.com:owner/repo.git");
  REQUIRE(scp);
  CHECK(scp->scheme == "ssh");
  CHECK(scp->path == "owner/repo.git");
  CHECK(parse_url("example.com/mod/pkg")->host == "example.com");
  CHECK_FALSE(parse_url("../local/path"));
  CHECK_FALSE(parse_url("file:///tmp/x"));
  CHECK(parse_url("https://10.0.0.1/x")->host == "10.0.0.1");
  CHECK(code_of([] { registrable_domain("10.0.0.1"); }) == ErrorCode::NotADomain);
  auto gh = github_repo_from_url("https://github.com/erikdoe/ocmock.git");
  REQUIRE(gh);
  CHECK(gh->namespace_name == "erikdoe");
  CHECK(gh->image_name == "ocmock");
  CHECK_FALSE(github_repo_from_url("https://gitlab.com/a/b"));
  CHECK(is_valid_github_namespace("a-b1"));
  CHECK_FALSE(is_valid_github_namespace("-ab"));
  CHECK_FALSE(is_valid_github_namespace("a--b"));
  CHECK_FALSE(is_valid_github_namespace(std::string(40, 'a')));
  CHECK(is_valid_github_repo_name("my.repo_x-1"));
  CHECK_FALSE(is_valid_github_repo_name(".."));
  CHECK(percent_encode("a b/c~") == "a%20b%2Fc~");
}

TEST_CASE("public suffix handling") {
  CHECK(public_suffix("www.example.co.uk") == "co.uk");
  CHECK(registrable_domain("www.example.co.uk") == "example.co.uk");
  CHECK(registrable_domain("dev@Mail.Example.COM") == "example.com");
  CHECK(registrable_domain("a.b.example.unknowntld") == "example.unknowntld");
  // wildcard and exception rules (*.ck, !www.ck)
  CHECK(public_suffix("foo.bar.ck") == "bar.ck");
  CHECK(registrable_domain("www.ck") == "www.ck");
  CHECK(code_of([] { registrable_domain("co.uk"); }) == ErrorCode::PublicSuffixOnly);
  CHECK(code_of([] { registrable_domain("localhost"); }) == ErrorCode::NotADomain);
  CHECK(code_of([] { registrable_domain("192.168.1.1"); }) == ErrorCode::NotADomain);
  CHECK(code_of([] { registrable_domain("bad..name.com"); }) == ErrorCode::NotADomain);
  // private-section entries are not honoured
  CHECK(registrable_domain("someone.github.io") == "github.io");
}

TEST_CASE("domain: RDAP 404 is available with authoritative evidence") {
  FixtureTransport t;
  t.add_dns("lapsed-corp.com", dns(DnsStatus::nxdomain));
  t.add_http(kVerisign + "lapsed-corp.com", status(404));
  Prober p(t, config());
  Availability a = p.check_domain("owner@lapsed-corp.com");
  CHECK(a.subject == "lapsed-corp.com");
  CHECK(a.state == AvailabilityState::available);
  CHECK(a.has_authoritative_not_found());
  CHECK(a.evidence.size() == 2);
  CHECK(a.checked_at == fixed_time());
}

TEST_CASE("domain: registered, indeterminate, redirects") {
  FixtureTransport t;
  t.add_dns("example.com", dns(DnsStatus::has_records, {"a.iana-servers.net"}));
  t.add_http(kVerisign + "example.com", status(200, R"({"objectClassName":"domain","status":["active"]})"));
  t.add_dns("gone.com", dns(DnsStatus::nxdomain));
  t.add_http(kVerisign + "gone.com", timeout());
  t.add_dns("weird.com", dns(DnsStatus::no_records));
  t.add_http(kVerisign + "weird.com", status(200, "{}"));
  t.add_dns("moved.com", dns(DnsStatus::error));
  t.add_http(kVerisign + "moved.com", status(302, "", {{"location", "https://rdap.other.example/domain/moved.com"}}));
  t.add_http("https://rdap.other.example/domain/moved.com", status(404));
  Prober p(t, config());
  CHECK(p.check_domain("example.com").state == AvailabilityState::registered);
  auto gone = p.check_domain("gone.com");
  CHECK(gone.state == AvailabilityState::indeterminate);
  CHECK_FALSE(gone.has_authoritative_not_found());
  CHECK(p.check_domain("weird.com").state == AvailabilityState::indeterminate);
  CHECK(p.check_domain("moved.com").state == AvailabilityState::available);
}

TEST_CASE("domain: bootstrap lookup for other TLDs") {
  FixtureTransport t;
  t.add_http("https://data.iana.org/rdap/dns.json",
             status(200, R"({"services":[[["io","sh"],["http://rdap.nic.io/","https://rdap.nic.io/"]]]})"));
  t.add_dns("startup.io", dns(DnsStatus::nxdomain));
  t.add_http("https://rdap.nic.io/domain/startup.io", status(404));
  t.add_dns("thing.zz", dns(DnsStatus::nxdomain));
  Prober p(t, config());
  CHECK(p.check_domain("startup.io").state == AvailabilityState::available);
  auto zz = p.check_domain("thing.zz");
  CHECK(zz.state == AvailabilityState::indeterminate);
  CHECK(t.hits_for("https://data.iana.org/rdap/dns.json") == 1);
  CHECK(p.rdap_base_for("com") == "https://rdap.verisign.com/com/v1/");
}

TEST_CASE("domain: transport failure propagates and unknown subjects are refused") {
  FixtureTransport t;
  t.add_dns_failure("down.com");
  Prober p(t, config());
  CHECK(code_of([&] { p.check_domain("down.com"); }) == ErrorCode::TransportError);
  CHECK(code_of([&] { p.check_domain("unknown.com"); }) == ErrorCode::UnexpectedNetworkAccess);
  CHECK(code_of([&] { p.check_domain("com"); }) == ErrorCode::PublicSuffixOnly);
}

TEST_CASE("github: exists, redirected, user missing, repo missing") {
  FixtureTransport t;
  t.add_http(kGitHub + "/repos/alive/lib", status(200, R"({"full_name":"Alive/lib","stargazers_count":12})"));
  t.add_http(kGitHub + "/repos/old/lib", status(301, "", {{"location", kGitHub + "/repositories/42"}}));
  t.add_http(kGitHub + "/repositories/42", status(200, R"({"full_name":"new/lib","stargazers_count":900})"));
  t.add_http(kGitHub + "/repos/ghost/lib", status(404));
  t.add_http(kGitHub + "/users/ghost", status(404));
  t.add_http(kGitHub + "/repos/real/deleted", status(404));
  t.add_http(kGitHub + "/users/real", status(200, "{}"));
  ProbeConfig c = config();
  c.github_token = "tok";
  Prober p(t, c);

  auto alive = p.check_github_repo("alive", "lib");
  CHECK(alive.state == GitHubState::exists);
  CHECK(alive.stars == 12);
  CHECK(alive.retirement == Retirement::not_applicable);
  CHECK(t.last_headers(kGitHub + "/repos/alive/lib").at("Authorization") == "Bearer tok");

  auto old = p.check_github_repo("old", "lib");
  CHECK(old.state == GitHubState::redirected);
  CHECK(old.redirect_target == "new/lib");
  CHECK(old.stars == 900);
  CHECK(old.retirement == Retirement::unknown);

  auto ghost = p.check_github_repo("ghost", "lib");
  CHECK(ghost.state == GitHubState::user_missing);
  CHECK(ghost.retirement == Retirement::unknown);

  CHECK(p.check_github_repo("real", "deleted").state == GitHubState::repo_missing);
  CHECK_THROWS_AS(p.check_github_repo("bad--ns", "x"), std::invalid_argument);
}

TEST_CASE("github: rate limits and timeouts") {
  FixtureTransport t;
  t.add_http(kGitHub + "/repos/a/b",
             status(403, "", {{"x-ratelimit-remaining", "0"}, {"x-ratelimit-reset", "1700000000"}}));
  t.add_http(kGitHub + "/repos/c/d", timeout());
  t.add_http(kGitHub + "/repos/e/f", status(500));
  Prober p(t, config());
  try {
    p.check_github_repo("a", "b");
    FAIL("expected RateLimitedError");
  } catch (const RateLimitedError& e) {
    CHECK(e.reset_epoch() == 1700000000);
    CHECK(e.code() == ErrorCode::RateLimited);
  }
  CHECK(code_of([&] { p.check_github_repo("c", "d"); }) == ErrorCode::TransportError);
  CHECK(code_of([&] { p.check_github_repo("e", "f"); }) == ErrorCode::MalformedResponse);
}

TEST_CASE("npm and trunk names") {
  FixtureTransport t;
  t.add_http("https://registry.npmjs.org/left-pad", status(200, "{}"));
  t.add_http("https://registry.npmjs.org/@corp%2Fauth-sdk", status(404));
  t.add_http("https://registry.npmjs.org/flaky", status(503));
  t.add_http("https://trunk.cocoapods.org/api/v1/pods/CorpAuth", status(404));
  t.add_http("https://trunk.cocoapods.org/api/v1/pods/Alamofire", status(200, "{}"));
  Prober p(t, config());
  CHECK(p.check_npm_name("left-pad").state == AvailabilityState::registered);
  auto scoped = p.check_npm_name("@corp/auth-sdk");
  CHECK(scoped.state == AvailabilityState::available);
  CHECK(scoped.has_authoritative_not_found());
  CHECK(p.check_npm_name("flaky").state == AvailabilityState::indeterminate);
  CHECK(p.check_trunk_name("CorpAuth").state == AvailabilityState::available);
  CHECK(p.check_trunk_name("Alamofire").state == AvailabilityState::registered);
}

TEST_CASE("pod owners") {
  FixtureTransport t;
  const std::string base = "https://trunk.cocoapods.org/api/v1/pods/";
  t.add_http(base + "Lib", status(200, R"({"owners":[{"name":"Ann","email":"ann@Mail.Lapsed.co.uk"}]})"));
  t.add_http(base + "Gone", status(404));
  t.add_http(base + "Bad", status(200, R"({"owners":[{"name":"X","email":"not-an-email"}]})"));
  t.add_http(base + "Odd", status(200, R"({"pods":[]})"));
  t.add_http(base + "Down", status(500));
  Prober p(t, config());
  auto owners = p.fetch_pod_owners("Lib");
  REQUIRE(owners.size() == 1);
  CHECK(owners[0].email_domain == "lapsed.co.uk");
  CHECK(owners[0].owner_name == "Ann");
  std::vector<std::string> warnings;
  CHECK(p.fetch_pod_owners("Gone", &warnings).empty());
  CHECK(warnings.size() == 1);
  CHECK(code_of([&] { p.fetch_pod_owners("Bad"); }) == ErrorCode::MalformedResponse);
  CHECK(code_of([&] { p.fetch_pod_owners("Odd"); }) == ErrorCode::MalformedResponse);
  CHECK(code_of([&] { p.fetch_pod_owners("Down"); }) == ErrorCode::TransportError);
}

TEST_CASE("cache hits avoid the transport and expire") {
  FixtureTransport t;
  t.add_http("https://registry.npmjs.org/x", status(404));
  Timestamp now = fixed_time();
  Clock clock = [&] { return now; };
  ProbeCache cache(std::chrono::hours(1), clock);
  ProbeConfig c = config();
  c.clock = clock;
  Prober p(t, c, &cache);
  auto first = p.check_npm_name("x");
  auto second = p.check_npm_name("x");
  CHECK(first == second);
  CHECK(t.hits() == 1);
  now += std::chrono::hours(1);
  p.check_npm_name("x");
  CHECK(t.hits() == 2);
}

TEST_CASE("ttl zero always misses") {
  ProbeCache cache(std::chrono::seconds(0), [] { return fixed_time(); });
  cache.put("k", "s", json{{"v", 1}});
  CHECK_FALSE(cache.get("k", "s"));
  CHECK(cache.size() == 1);
}

TEST_CASE("file-backed cache persists and tolerates junk lines") {
  TempDir dir;
  Clock clock = [] { return fixed_time(); };
  {
    ProbeCache cache(dir / "cache.jsonl", std::chrono::hours(1), clock);
    cache.put("npm", "a", json{{"v", 1}});
    cache.put("npm", "a", json{{"v", 2}});
  }
  std::ofstream(dir / "cache.jsonl", std::ios::app) << "garbage line\n";
  ProbeCache reloaded(dir / "cache.jsonl", std::chrono::hours(1), clock);
  REQUIRE(reloaded.get("npm", "a"));
  CHECK((*reloaded.get("npm", "a"))["v"] == 2);
}

TEST_CASE("errors are never cached") {
  FixtureTransport t;
  t.add_http(kGitHub + "/repos/a/b", status(429, "", {{"retry-after", "5"}}));
  ProbeCache cache(std::chrono::hours(1), [] { return fixed_time(); });
  Prober p(t, config(), &cache);
  CHECK_THROWS_AS(p.check_github_repo("a", "b"), RateLimitedError);
  CHECK_THROWS_AS(p.check_github_repo("a", "b"), RateLimitedError);
  CHECK(cache.size() == 0);
  CHECK(t.hits() == 2);
}

TEST_CASE("bulk respects the concurrency limit and captures errors") {
  FixtureTransport t;
  t.set_latency(std::chrono::milliseconds(20));
  std::vector<std::string> names;
  for (int i = 0; i < 24; ++i) {
    names.push_back("pkg" + std::to_string(i));
    if (i != 5) t.add_http("https://registry.npmjs.org/pkg" + std::to_string(i), status(i % 2 ? 200 : 404));
  }
  names.push_back("pkg0");  // duplicates collapse
  Prober p(t, config());
  auto results = bulk<Availability>(names, [&](const std::string& n) { return p.check_npm_name(n); }, 4);
  CHECK(results.size() == 24);
  CHECK(t.max_in_flight() <= 4);
  CHECK(t.max_in_flight() >= 2);
  CHECK_FALSE(results.at("pkg5").ok());
  CHECK(results.at("pkg5").error_code == ErrorCode::UnexpectedNetworkAccess);
  CHECK(results.at("pkg0").value->state == AvailabilityState::available);
}

TEST_CASE("fixture transport loads JSON") {
  auto t = FixtureTransport::from_json_text(R"({
    "http": {"https://registry.npmjs.org/x": {"status": 404},
             "https://example.invalid/obj": {"status": 200, "body": {"a": 1}},
             "https://example.invalid/slow": {"timeout": true},
             "https://example.invalid/dead": {"transport_error": true}},
    "dns": {"x.com": {"status": "has_records", "nameservers": ["ns1.x.com"]}}})");
  CHECK(t->get({"https://registry.npmjs.org/x", {}}).status == 404);
  CHECK(json::parse(t->get({"https://example.invalid/obj", {}}).body)["a"] == 1);
  CHECK(t->get({"https://example.invalid/slow", {}}).timed_out);
  CHECK(code_of([&] { t->get({"https://example.invalid/dead", {}}); }) == ErrorCode::TransportError);
  CHECK(t->query_ns("x.com").nameservers.size() == 1);
  CHECK(code_of([] { FixtureTransport::from_json_text("[]"); }) == ErrorCode::MalformedJson);
  CHECK(code_of([] { FixtureTransport::from_json_text(R"({"dns":{"a":{"status":"maybe"}}})"); }) ==
        ErrorCode::MalformedJson);
}

TEST_CASE("offline transport refuses everything") {
  OfflineTransport t;
  CHECK(code_of([&] { t.get({"https://example.com", {}}); }) == ErrorCode::UnexpectedNetworkAccess);
  CHECK(code_of([&] { t.query_ns("example.com"); }) == ErrorCode::UnexpectedNetworkAccess);
}

TEST_CASE("real transport aborts when the network is forbidden") {
  pid_t pid = fork();
  REQUIRE(pid >= 0);
  if (pid == 0) {
    signal(SIGABRT, SIG_DFL);
    setenv(kForbidNetworkEnv, "1", 1);
    HttpTransport t;
    t.get({"https://example.com/", {}});
    _exit(0);
  }
  int wstatus = 0;
  waitpid(pid, &wstatus, 0);
  CHECK(WIFSIGNALED(wstatus));
  CHECK(WTERMSIG(wstatus) == SIGABRT);
}

TEST_CASE("rate limiter spaces requests per key") {
  auto now = std::chrono::steady_clock::time_point{};
  RateLimiter limiter(2.0, 2.0, [&] { return now; });
  CHECK(limiter.reserve("a").count() == 0);
  CHECK(limiter.reserve("a").count() == 0);
  auto wait = limiter.reserve("a");
  CHECK(wait == std::chrono::milliseconds(500));
  CHECK(limiter.reserve("b").count() == 0);
  now += std::chrono::seconds(5);
  CHECK(limiter.reserve("a").count() == 0);
}

TEST_CASE("serialisation round-trips") {
  Availability a{"x.com", AvailabilityState::available, {{"rdap", "not-found: 404", fixed_time()}}, fixed_time()};
  CHECK(availability_from_json(to_json(a)) == a);
  GitHubRepoStatus s{"a", "b", GitHubState::redirected, "c/b", 5, Retirement::unknown, {}};
  CHECK(github_status_from_json(to_json(s)) == s);
  PodOwner o{"P", "N", "n@x.com", "x.com"};
  CHECK(pod_owner_from_json(to_json(o)) == o);
}
