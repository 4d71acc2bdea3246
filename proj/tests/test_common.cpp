#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "bgc/config.hpp"
#include "bgc/errors.hpp"
#include "bgc/geo.hpp"
#include "bgc/rng.hpp"
#include "bgc/timeutil.hpp"

using namespace bgc;

TEST_CASE("wrap_lon maps into [0, 360)") {
    CHECK(wrap_lon(0.0) == doctest::Approx(0.0));
    CHECK(wrap_lon(360.0) == doctest::Approx(0.0));
    CHECK(wrap_lon(-0.25) == doctest::Approx(359.75));
    CHECK(wrap_lon(725.5) == doctest::Approx(5.5));
    CHECK(wrap_lon(-725.5) == doctest::Approx(354.5));
    for (double x = -1080.0; x <= 1080.0; x += 7.3) {
        const double w = wrap_lon(x);
        CHECK(w >= 0.0);
        CHECK(w < 360.0);
        const double d = std::remainder(w - x, 360.0);
        CHECK(std::abs(d) < 1e-9);
    }
}

TEST_CASE("lon_diff is the signed short-way difference") {
    CHECK(lon_diff(10.0, 350.0) == doctest::Approx(20.0));
    CHECK(lon_diff(350.0, 10.0) == doctest::Approx(-20.0));
    CHECK(lon_diff(180.0, 0.0) == doctest::Approx(180.0));
    CHECK(lon_diff(5.0, 5.0) == doctest::Approx(0.0));
}

TEST_CASE("central angle basics") {
    // One degree along a meridian is one degree of central angle.
    CHECK(central_angle_deg({0.0, 0.0}, {1.0, 0.0}) == doctest::Approx(1.0));
    // A quarter of the equator.
    CHECK(central_angle_deg({0.0, 0.0}, {0.0, 90.0}) == doctest::Approx(90.0));
    // Symmetry and identity.
    CHECK(central_angle_deg({12.0, 34.0}, {12.0, 34.0}) ==
          doctest::Approx(0.0));
    CHECK(central_angle_deg({10.0, 20.0}, {-30.0, 250.0}) ==
          doctest::Approx(central_angle_deg({-30.0, 250.0}, {10.0, 20.0})));
}

TEST_CASE("splitmix64 sequence is deterministic and seed-sensitive") {
    Rng a(42), b(42), c(43);
    for (int k = 0; k < 100; ++k) {
        const std::uint64_t x = a.next_u64();
        CHECK(x == b.next_u64());
    }
    bool differs = false;
    Rng a2(42);
    for (int k = 0; k < 10; ++k)
        if (a2.next_u64() != c.next_u64()) differs = true;
    CHECK(differs);
}

TEST_CASE("uniform stays in [0, 1) and looks flat") {
    Rng r(7);
    double sum = 0.0;
    const int n = 100000;
    for (int k = 0; k < n; ++k) {
        const double u = r.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        sum += u;
    }
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("normal has roughly unit variance") {
    Rng r(11);
    double s1 = 0.0, s2 = 0.0;
    const int n = 100000;
    for (int k = 0; k < n; ++k) {
        const double x = r.normal();
        s1 += x;
        s2 += x * x;
    }
    const double mean = s1 / n;
    const double var = s2 / n - mean * mean;
    CHECK(mean == doctest::Approx(0.0).epsilon(0.02));
    CHECK(std::abs(var - 1.0) < 0.03);
}

TEST_CASE("uniform_int covers the whole inclusive range") {
    Rng r(5);
    std::set<int> seen;
    for (int k = 0; k < 1000; ++k) {
        const int v = r.uniform_int(3, 7);
        CHECK(v >= 3);
        CHECK(v <= 7);
        seen.insert(v);
    }
    CHECK(seen.size() == 5);
}

TEST_CASE("fork yields independent but reproducible streams") {
    Rng base(99);
    Rng f1 = Rng(99).fork(1);
    Rng f1b = Rng(99).fork(1);
    Rng f2 = Rng(99).fork(2);
    CHECK(f1.next_u64() == f1b.next_u64());
    CHECK(f1.next_u64() != f2.next_u64());
    (void)base;
}

TEST_CASE("fnv1a matches reference digests") {
    // Published FNV-1a 64-bit test vectors.
    CHECK(fnv1a("", 0) == 0xcbf29ce484222325ULL);
    CHECK(fnv1a("a", 1) == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a("foobar", 6) == 0x85944171f73967e8ULL);
}

TEST_CASE("iso8601 round trip and epoch anchors") {
    CHECK(parse_iso8601("1970-01-01T00:00:00Z") == 0);
    CHECK(parse_iso8601("2024-06-29T18:00:00Z") == 1719684000);
    CHECK(format_iso8601(1719684000) == "2024-06-29T18:00:00Z");
    for (std::int64_t t : {0L, 86399L, 951782400L, 1719684000L, 4102444799L}) {
        CHECK(parse_iso8601(format_iso8601(t)) == t);
    }
    CHECK_THROWS_AS(parse_iso8601("2024-06-29 18:00:00"), ParseError);
    CHECK_THROWS_AS(parse_iso8601("not-a-time"), ParseError);
    CHECK_THROWS_AS(parse_iso8601("2024-13-01T00:00:00Z"), ParseError);
}

TEST_CASE("config parses, overrides, and hashes canonically") {
    const Config c = Config::from_text(
        "# comment\n"
        "alpha = 0.7\n"
        "name = run1  # trailing comment\n"
        "flag = true\n"
        "levels = 0.25, 0.35, 0.40\n"
        "count=12\n");
    CHECK(c.get_double("alpha", 0.0) == doctest::Approx(0.7));
    CHECK(c.get_str("name", "") == "run1");
    CHECK(c.get_bool("flag", false));
    CHECK(c.get_int("count", 0) == 12);
    const auto lv = c.get_doubles("levels", {});
    REQUIRE(lv.size() == 3);
    CHECK(lv[1] == doctest::Approx(0.35));
    CHECK(c.get_double("missing", 2.5) == doctest::Approx(2.5));

    Config d = c;
    CHECK(c.hash_hex() == d.hash_hex());
    d.set("alpha", "0.8");
    CHECK(c.hash_hex() != d.hash_hex());

    // Key order in the source text does not change the canonical form.
    const Config e = Config::from_text("b = 2\na = 1\n");
    const Config f = Config::from_text("a = 1\nb = 2\n");
    CHECK(e.canonical_text() == f.canonical_text());
    CHECK(e.hash_hex() == f.hash_hex());

    CHECK_THROWS_AS(Config::from_text("no equals sign\n"), ConfigError);
    CHECK_THROWS_AS(c.get_double("name", 0.0), ConfigError);
    CHECK_THROWS_AS(c.get_bool("alpha", false), ConfigError);
}

TEST_CASE("error classes carry process exit codes") {
    CHECK(ConfigError("x").exit_code() == 2);
    CHECK(ParseError("x").exit_code() == 3);
    CHECK(NonFiniteInput("x").exit_code() == 4);
    try {
        throw TruncatedPayload("file: truncated at offset 12");
    } catch (const Error& e) {
        CHECK(std::string(e.kind()) == "TruncatedPayload");
        CHECK(std::string(e.what()).find("offset 12") != std::string::npos);
    }
}
