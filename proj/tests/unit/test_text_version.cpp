#include <doctest.h>

#include <random>

#include "chainaudit/error.hpp"
#include "chainaudit/text.hpp"
#include "chainaudit/version.hpp"

using namespace chainaudit;

namespace {

VersionString v(std::string_view s) { return *VersionString::parse(s); }

}  // namespace

TEST_CASE("version parsing splits components and suffix") {
  auto x = v("2.27.0-beta.1");
  CHECK(x.components() == std::vector<std::uint64_t>{2, 27, 0});
  CHECK(x.suffix() == "-beta.1");
  CHECK(x.is_prerelease());
  CHECK(v("10").components() == std::vector<std::uint64_t>{10});
  CHECK_FALSE(VersionString::parse(""));
  CHECK_FALSE(VersionString::parse("v1.0"));
  CHECK_FALSE(VersionString::parse("abc"));
  CHECK_FALSE(VersionString::parse("99999999999999999999999"));
}

TEST_CASE("version ordering pads with zeros and sorts suffixes first") {
  CHECK(v("1.0") == v("1.0.0"));
  CHECK(v("1.0-rc") < v("1.0"));
  CHECK(v("1.0-alpha") < v("1.0-beta"));
  CHECK(v("1.9") < v("1.10"));
  CHECK(v("2") > v("1.99.99"));
  CHECK(version_text_less("1.0", "1.0.0"));
  CHECK(version_text_less("9.9", "master"));
  CHECK_FALSE(version_text_less("master", "9.9"));
}

TEST_CASE("requirement parsing") {
  CHECK(parse_requirement("").op == RequirementOp::any);
  CHECK(parse_requirement("1.4.2").op == RequirementOp::exact);
  CHECK(parse_requirement("= 1.4.2").op == RequirementOp::exact);
  CHECK(parse_requirement("~> 2.27").op == RequirementOp::pessimistic);
  CHECK(parse_requirement(">=1.0").op == RequirementOp::gte);
  CHECK(parse_requirement("< 3").op == RequirementOp::lt);
  CHECK(parse_requirement("~> 2.27").to_string() == "~> 2.27");
  CHECK_THROWS_AS(parse_requirement(">="), Error);
  CHECK_THROWS_AS(parse_requirement("~> 2"), Error);
  CHECK_THROWS_AS(parse_requirement("> banana"), Error);
  try {
    parse_requirement("> banana");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MalformedRequirement);
  }
}

TEST_CASE("pessimistic operator") {
  CHECK(pessimistic_upper_bound(v("2.27.3")).raw() == "2.28");
  CHECK(pessimistic_upper_bound(v("2.27")).raw() == "3");
  auto r = parse_requirement("~> 2.27");
  CHECK(satisfies(v("2.27"), r));
  CHECK(satisfies(v("2.99.1"), r));
  CHECK_FALSE(satisfies(v("3.0"), r));
  CHECK_FALSE(satisfies(v("2.26.9"), r));
  auto r3 = parse_requirement("~> 1.2.3");
  CHECK(satisfies(v("1.2.9"), r3));
  CHECK_FALSE(satisfies(v("1.3"), r3));
}

TEST_CASE("best_match picks the highest satisfying version") {
  std::vector<VersionString> versions{v("1.0"), v("1.5"), v("2.0"), v("2.1-beta")};
  std::vector<Requirement> reqs{parse_requirement("~> 1.0")};
  CHECK(best_match(versions, reqs)->raw() == "1.5");
  std::vector<Requirement> none{parse_requirement("> 5")};
  CHECK_FALSE(best_match(versions, none));
  CHECK(best_match(versions, {})->raw() == "2.1-beta");
  std::vector<VersionString> ties{v("1.0"), v("1.0.0")};
  CHECK(best_match(ties, {})->raw() == "1.0.0");
}

TEST_CASE("satisfies agrees with integer interval reasoning for numeric versions") {
  std::mt19937 rng(7);
  auto comp = [&] { return std::uniform_int_distribution<int>(0, 3)(rng); };
  auto encode = [](int a, int b, int c) { return a * 100 + b * 10 + c; };
  for (int i = 0; i < 2000; ++i) {
    int a = comp(), b = comp(), c = comp();
    int x = comp(), y = comp(), z = comp();
    auto ver = VersionString::from_components({std::uint64_t(a), std::uint64_t(b), std::uint64_t(c)});
    auto bound = VersionString::from_components({std::uint64_t(x), std::uint64_t(y), std::uint64_t(z)});
    int lhs = encode(a, b, c), rhs = encode(x, y, z);
    CHECK(satisfies(ver, {RequirementOp::gte, bound}) == (lhs >= rhs));
    CHECK(satisfies(ver, {RequirementOp::lt, bound}) == (lhs < rhs));
    CHECK(satisfies(ver, {RequirementOp::exact, bound}) == (lhs == rhs));
    // ~> x.y.z covers [x.y.z, x.(y+1))
    CHECK(satisfies(ver, {RequirementOp::pessimistic, bound}) == (lhs >= rhs && lhs < encode(x, y + 1, 0)));
  }
}

TEST_CASE("text helpers") {
  CHECK(trim("  a b \n") == "a b");
  CHECK(to_lower("AbC") == "abc");
  CHECK(starts_with_ci("HTTPS://x", "https://"));
  CHECK(split("a/b//c", '/').size() == 4);
  CHECK(split_lines("a\r\nb\nc").size() == 3);
  CHECK(is_commit_hash("abcdef0"));
  CHECK(is_commit_hash("0123456789abcdef0123456789abcdef01234567"));
  CHECK_FALSE(is_commit_hash("abcdef"));
  CHECK_FALSE(is_commit_hash("ABCDEF01"));
  CHECK_FALSE(is_commit_hash("1.2.0"));
}

TEST_CASE("timestamps round-trip") {
  Timestamp t;
  REQUIRE(parse_timestamp("2025-05-01T12:00:59Z", t));
  CHECK(format_timestamp(t) == "2025-05-01T12:00:59Z");
  CHECK_FALSE(parse_timestamp("2025-05-01 12:00:59", t));
  CHECK_FALSE(parse_timestamp("2025-13-01T12:00:59Z", t));
}
