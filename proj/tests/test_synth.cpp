#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "bgc/errors.hpp"
#include "bgc/synth/scenario.hpp"
#include "bgc/synth/vortex.hpp"
#include "bgc/timeutil.hpp"

using namespace bgc;
using namespace bgc::synth;
using gridstore::FieldCube;
using gridstore::GridSpec;
using gridstore::VariableId;

namespace {

VortexParams basic_vortex() {
    VortexParams p;
    p.center = {18.0, 140.0};
    p.v_max_ms = 45.0;
    p.r_max_km = 40.0;
    p.shape_b = 1.8;
    p.ambient_hpa = 1010.0;
    p.deficit_hpa = 40.0;
    return p;
}

GridSpec box_around(LatLon c, double half_deg, double cell) {
    GridSpec g;
    g.dlat = g.dlon = cell;
    g.nlat = g.nlon = static_cast<int>(std::lround(2.0 * half_deg / cell)) + 1;
    g.lat0 = c.lat + half_deg;
    g.lon0 = wrap_lon(c.lon - half_deg);
    return g;
}

double wind_speed_at(const FieldCube& cube, int i, int j) {
    const auto u = cube.var_index(VariableId::U10);
    const auto v = cube.var_index(VariableId::V10);
    return std::hypot(cube.at(u, i, j), cube.at(v, i, j));
}

double max_wind(const FieldCube& cube) {
    double best = 0.0;
    for (int i = 0; i < cube.spec.nlat; ++i)
        for (int j = 0; j < cube.spec.nlon; ++j)
            best = std::max(best, wind_speed_at(cube, i, j));
    return best;
}

// One-sample Kolmogorov-Smirnov statistic against U(0, 1).
double ks_uniform(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double lo = static_cast<double>(i) / n;
        const double hi = static_cast<double>(i + 1) / n;
        d = std::max({d, std::abs(xs[i] - lo), std::abs(xs[i] - hi)});
    }
    return d;
}

}  // namespace

TEST_CASE("wind profile peaks at exactly v_max at r_max") {
    const VortexParams p = basic_vortex();
    CHECK(holland_wind(p, p.r_max_km) == doctest::Approx(45.0).epsilon(1e-14));
    CHECK(holland_wind(p, 0.0) == 0.0);
    CHECK(holland_wind(p, 1e-6) < 1e-6);
    // Unimodal: rising inside the eyewall, falling outside.
    CHECK(holland_wind(p, 20.0) < 45.0);
    CHECK(holland_wind(p, 20.0) > holland_wind(p, 8.0));
    CHECK(holland_wind(p, 120.0) < 45.0);
    CHECK(holland_wind(p, 120.0) > holland_wind(p, 400.0));
}

TEST_CASE("pressure profile spans deficit at the core to ambient far out") {
    VortexParams p = basic_vortex();
    CHECK(holland_msl(p, 0.0) == doctest::Approx(970.0));
    for (double r : {5.0, 20.0, 40.0, 100.0, 400.0, 2000.0}) {
        CHECK(holland_msl(p, r) <= p.ambient_hpa);
        CHECK(holland_msl(p, r) >= p.ambient_hpa - p.deficit_hpa);
    }
    // Monotone recovery outward.
    CHECK(holland_msl(p, 40.0) < holland_msl(p, 80.0));
    CHECK(holland_msl(p, 80.0) < holland_msl(p, 300.0));

    // Closed-form tail: with the steepest profile the drop at 20 r_max is
    // deficit * (1 - exp(-20^-2.5)) ~ 0.02 hPa.
    p.shape_b = 2.5;
    CHECK(std::abs(holland_msl(p, 20.0 * p.r_max_km) - p.ambient_hpa) < 0.1);
}

TEST_CASE("vortex parameter bounds are enforced") {
    VortexParams p = basic_vortex();
    p.v_max_ms = 0.0;
    CHECK_THROWS_AS(p.validate(), SpecMismatch);
    p = basic_vortex();
    p.r_max_km = -1.0;
    CHECK_THROWS_AS(p.validate(), SpecMismatch);
    p = basic_vortex();
    p.deficit_hpa = 0.0;
    CHECK_THROWS_AS(p.validate(), SpecMismatch);
    p = basic_vortex();
    p.shape_b = 2.6;
    CHECK_THROWS_AS(p.validate(), SpecMismatch);
    p = basic_vortex();
    p.shape_b = 0.9;
    CHECK_THROWS_AS(p.validate(), SpecMismatch);
    CHECK_NOTHROW(basic_vortex().validate());
}

TEST_CASE("rendered wind hits v_max one eyewall radius from the center") {
    VortexParams p = basic_vortex();
    // A 1x1 grid whose only node sits exactly r_max due north of the center.
    GridSpec g;
    g.lat0 = p.center.lat + p.r_max_km / kKmPerDegree;
    g.lon0 = p.center.lon;
    g.nlat = g.nlon = 1;
    const FieldCube cube = render_vortices({p}, g, 0);
    CHECK(wind_speed_at(cube, 0, 0) == doctest::Approx(45.0).epsilon(1e-5));

    // With background flow the speed stays within |bg| of v_max.
    p.bg_u_ms = 2.0;
    p.bg_v_ms = -1.0;
    const FieldCube cube2 = render_vortices({p}, g, 0);
    const double bg = std::hypot(2.0, -1.0);
    CHECK(wind_speed_at(cube2, 0, 0) <= 45.0 + bg + 1e-6);
    CHECK(wind_speed_at(cube2, 0, 0) >= 45.0 - bg - 1e-6);
}

TEST_CASE("cyclonic spin: counterclockwise north, clockwise south") {
    VortexParams p = basic_vortex();
    GridSpec east;  // node due east of the center
    east.lat0 = p.center.lat;
    east.lon0 = p.center.lon + 1.0;
    east.nlat = east.nlon = 1;

    const FieldCube n = render_vortices({p}, east, 0);
    CHECK(n.at(n.var_index(VariableId::V10), 0, 0) > 0.0f);  // northward

    p.center.lat = -18.0;
    east.lat0 = p.center.lat;
    const FieldCube s = render_vortices({p}, east, 0);
    CHECK(s.at(s.var_index(VariableId::V10), 0, 0) < 0.0f);  // southward
}

TEST_CASE("every rendered field is sane and carries vortex structure") {
    const VortexParams p = basic_vortex();
    const GridSpec g = box_around(p.center, 3.0, 0.25);
    const FieldCube cube = render_vortices({p}, g, 1717200000);
    CHECK(cube.vars.size() == gridstore::kVariableCount);
    CHECK(cube.timestamp == 1717200000);
    cube.validate();  // finite everywhere

    const auto msl = cube.var_index(VariableId::MSL);
    const auto z500 = cube.var_index(VariableId::Z500);
    const auto t850 = cube.var_index(VariableId::T850);
    const auto q850 = cube.var_index(VariableId::Q850);
    const int ci = g.nlat / 2, cj = g.nlon / 2;
    for (int i = 0; i < g.nlat; ++i)
        for (int j = 0; j < g.nlon; ++j) {
            CHECK(cube.at(msl, i, j) <= 1010.0f);
            CHECK(wind_speed_at(cube, i, j) >= 0.0);
        }
    // Warm, moist, low-height core: the fillers must not be constants.
    CHECK(cube.at(t850, ci, cj) > cube.at(t850, 0, 0) + 1.0f);
    CHECK(cube.at(q850, ci, cj) > cube.at(q850, 0, 0));
    CHECK(cube.at(z500, ci, cj) < cube.at(z500, 0, 0) - 50.0f);
    // Upper-level circulation decays with height.
    const auto u850 = cube.var_index(VariableId::U850);
    const auto u500 = cube.var_index(VariableId::U500);
    const auto u10 = cube.var_index(VariableId::U10);
    CHECK(std::abs(cube.at(u500, ci + 4, cj)) <
          std::abs(cube.at(u850, ci + 4, cj)));
    CHECK(std::abs(cube.at(u850, ci + 4, cj)) <
          std::abs(cube.at(u10, ci + 4, cj)));
}

TEST_CASE("two-storm superposition keeps each pressure minimum on its center") {
    VortexParams a = basic_vortex();
    a.center = {17.3, 138.62};
    a.shape_b = 1.0;
    a.r_max_km = 30.0;
    VortexParams b = a;
    b.center = {18.1, 144.55};  // ~6 deg apart, far over 5 r_max
    b.deficit_hpa = 35.0;
    b.v_max_ms = 38.0;

    for (const auto& storm : {a, b}) {
        const GridSpec g = box_around(storm.center, 1.0, 0.05);
        const FieldCube cube = render_vortices({a, b}, g, 0);
        const auto msl = cube.var_index(VariableId::MSL);
        int bi = 0, bj = 0;
        float best = cube.at(msl, 0, 0);
        for (int i = 0; i < g.nlat; ++i)
            for (int j = 0; j < g.nlon; ++j)
                if (cube.at(msl, i, j) < best) {
                    best = cube.at(msl, i, j);
                    bi = i;
                    bj = j;
                }
        CHECK(std::abs(g.lat_at(bi) - storm.center.lat) < 0.05);
        CHECK(std::abs(lon_diff(g.lon_at(bj), storm.center.lon)) < 0.05);
    }

    // Deficits superpose: the combined field is deeper than either alone.
    const GridSpec mid = box_around(a.center, 0.1, 0.1);
    const auto solo = render_vortices({a}, mid, 0);
    const auto both = render_vortices({a, b}, mid, 0);
    const auto msl = solo.var_index(VariableId::MSL);
    CHECK(both.at(msl, 1, 1) < solo.at(msl, 1, 1));
}

TEST_CASE("keyframe interpolation is linear and wrap-aware") {
    StormScript storm;
    storm.storm_id = "SYN0000";
    Keyframe k0, k1;
    k0.t_hours = 0.0;
    k0.params = basic_vortex();
    k0.params.center = {10.0, 359.0};
    k0.params.v_max_ms = 30.0;
    k1.t_hours = 12.0;
    k1.params = basic_vortex();
    k1.params.center = {12.0, 3.0};  // crosses the dateline going east
    k1.params.v_max_ms = 42.0;
    storm.keys = {k0, k1};

    const VortexParams mid = params_at(storm, 6.0);
    CHECK(mid.center.lat == doctest::Approx(11.0).epsilon(1e-12));
    CHECK(mid.center.lon == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(mid.v_max_ms == doctest::Approx(36.0).epsilon(1e-12));
    CHECK(params_at(storm, 0.0).v_max_ms == doctest::Approx(30.0));
    CHECK(params_at(storm, 12.0).v_max_ms == doctest::Approx(42.0));
    CHECK_THROWS_AS(params_at(storm, -0.1), OutOfSpan);
    CHECK_THROWS_AS(params_at(storm, 12.1), OutOfSpan);
}

TEST_CASE("render_field stamps the interpolated time and honors spans") {
    Dataset ds = gen_dataset(11, 1, ScenarioMix{});
    REQUIRE(ds.scenarios.size() == 1u);
    const ScenarioScript& sc = ds.scenarios[0];

    const GridSpec win = box_around(
        {sc.storms[0].keys[0].params.center.lat,
         sc.storms[0].keys[0].params.center.lon},
        1.0, 0.25);
    const FieldCube cube = render_field(sc, 6.0, win);
    CHECK(cube.timestamp == sc.init_time + 6 * 3600);
    CHECK_THROWS_AS(render_field(sc, 100.0, win), OutOfSpan);
}

TEST_CASE("scenario scripts round-trip through the text format") {
    const Dataset ds = gen_dataset(21, 4, ScenarioMix{});
    for (const auto& sc : ds.scenarios) {
        const std::string text = script_to_config(sc).canonical_text();
        const ScenarioScript back =
            script_from_config(Config::from_text(text));
        CHECK(script_to_config(back).canonical_text() == text);
        CHECK(back.storms.size() == sc.storms.size());
        CHECK(back.init_time == sc.init_time);
        CHECK(back.grid == sc.grid);
    }
}

TEST_CASE("downsample pools block means and rescales the grid") {
    GridSpec fine;
    fine.lat0 = 30.0;
    fine.lon0 = 140.0;
    fine.dlat = fine.dlon = 0.1;
    fine.nlat = fine.nlon = 4;
    FieldCube cube(fine, {VariableId::MSL}, 0);

    SUBCASE("constant field is unchanged") {
        for (auto& v : cube.data) v = 7.5f;
        const FieldCube coarse = downsample(cube, 2);
        CHECK(coarse.spec.nlat == 2);
        CHECK(coarse.spec.dlat == doctest::Approx(0.2));
        CHECK(coarse.spec.lat0 == doctest::Approx(29.95));
        CHECK(coarse.spec.lon0 == doctest::Approx(140.05));
        for (float v : coarse.data) CHECK(v == 7.5f);
    }

    SUBCASE("an isolated spike divides by factor squared") {
        cube.at(0, 1, 2) = 16.0f;
        const FieldCube coarse = downsample(cube, 4);
        REQUIRE(coarse.data.size() == 1u);
        CHECK(coarse.data[0] == 1.0f);
    }

    SUBCASE("factor must divide both dimensions") {
        CHECK_THROWS_AS(downsample(cube, 3), IndivisibleFactor);
        CHECK_THROWS_AS(downsample(cube, 0), IndivisibleFactor);
        CHECK_NOTHROW(downsample(cube, 1));
    }
}

TEST_CASE("pooling a tight eyewall erases a large share of its peak wind") {
    VortexParams p = basic_vortex();
    p.r_max_km = 30.0;
    p.v_max_ms = 50.0;
    GridSpec fine;
    fine.dlat = fine.dlon = 0.05;
    fine.nlat = fine.nlon = 100;
    fine.lat0 = p.center.lat + 0.05 * 50 - 0.025;
    fine.lon0 = wrap_lon(p.center.lon - 0.05 * 50 + 0.025);

    const FieldCube hi = render_vortices({p}, fine, 0,
                                         {VariableId::U10, VariableId::V10});
    const FieldCube lo = downsample(hi, 5);  // 0.05 deg -> 0.25 deg

    const double fine_max = max_wind(hi);
    const double coarse_max = max_wind(lo);
    CHECK(fine_max > 45.0);  // the fine lattice resolves the eyewall
    CHECK(coarse_max <= fine_max);
    CHECK(coarse_max < 0.9 * fine_max);  // > 10% diagnosed-wind loss
}

TEST_CASE("downsampling never raises the diagnosed max wind") {
    const VortexParams p = basic_vortex();
    GridSpec fine;
    fine.dlat = fine.dlon = 0.05;
    fine.nlat = fine.nlon = 60;
    fine.lat0 = p.center.lat + 1.5;
    fine.lon0 = wrap_lon(p.center.lon - 1.5);
    const FieldCube hi = render_vortices({p}, fine, 0,
                                         {VariableId::U10, VariableId::V10});
    for (int f : {2, 3, 5, 6}) {
        const FieldCube lo = downsample(hi, f);
        CHECK(max_wind(lo) <= max_wind(hi) + 1e-9);
    }
}

TEST_CASE("analytic center and fine-grid pressure argmin agree to 0.01 deg") {
    VortexParams p = basic_vortex();
    p.center = {19.337, 141.682};  // deliberately off any lattice
    p.shape_b = 1.0;               // least-saturated core, sharpest argmin
    p.r_max_km = 25.0;

    // Closed-form MSL on a lattice 10x finer than the working 0.25 deg grid,
    // then one parabolic sub-cell refinement per axis around the argmin.
    const double cell = 0.025;
    const int n = 121;
    const double lat0 = p.center.lat + cell * (n / 2) + 0.011;
    const double lon0 = p.center.lon - cell * (n / 2) + 0.007;
    std::vector<double> msl(static_cast<std::size_t>(n) * n);
    int bi = 0, bj = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const LatLon cellpos{lat0 - i * cell, lon0 + j * cell};
            const double r =
                deg2rad(central_angle_deg(p.center, cellpos)) * kEarthRadiusKm;
            msl[static_cast<std::size_t>(i) * n + j] = holland_msl(p, r);
            if (msl[static_cast<std::size_t>(i) * n + j] <
                msl[static_cast<std::size_t>(bi) * n + bj]) {
                bi = i;
                bj = j;
            }
        }
    auto at = [&](int i, int j) {
        return msl[static_cast<std::size_t>(i) * n + j];
    };
    REQUIRE(bi > 0);
    REQUIRE(bj > 0);
    REQUIRE(bi < n - 1);
    REQUIRE(bj < n - 1);
    const double di = 0.5 * (at(bi - 1, bj) - at(bi + 1, bj)) /
                      (at(bi - 1, bj) - 2 * at(bi, bj) + at(bi + 1, bj));
    const double dj = 0.5 * (at(bi, bj - 1) - at(bi, bj + 1)) /
                      (at(bi, bj - 1) - 2 * at(bi, bj) + at(bi, bj + 1));
    const double lat_hat = lat0 - (bi + di) * cell;
    const double lon_hat = lon0 + (bj + dj) * cell;
    CHECK(std::abs(lat_hat - p.center.lat) < 0.01);
    CHECK(std::abs(lon_hat - p.center.lon) < 0.01);
}

TEST_CASE("datasets are deterministic in seed and sized as requested") {
    const ScenarioMix mix;
    const Dataset a = gen_dataset(9, 6, mix);
    const Dataset b = gen_dataset(9, 6, mix);
    const Dataset c = gen_dataset(10, 6, mix);
    CHECK(a.content_hash() == b.content_hash());
    CHECK(a.content_hash() != c.content_hash());

    int storms = 0;
    for (const auto& sc : a.scenarios) storms += static_cast<int>(sc.storms.size());
    CHECK(storms == 6);
    CHECK(a.truth.size() == 6u * 14u);  // -6 h through 72 h, 6-hourly

    const Dataset empty = gen_dataset(1, 0, mix);
    CHECK(empty.scenarios.empty());
    CHECK(empty.truth.empty());

    // Truth arrives sorted by (storm_id, timestamp) ready for CSV round trips.
    const std::string csv = gridstore::format_besttrack_csv(a.truth);
    const auto parsed = gridstore::parse_besttrack_csv(csv, "synth");
    CHECK(parsed.size() == a.truth.size());
}

TEST_CASE("scenario mix weights are validated") {
    ScenarioMix m;
    m.straight = 0.9;  // now sums to 1.35
    CHECK_THROWS_AS(m.validate(), ConfigError);
    m = ScenarioMix{};
    m.twin = -0.1;
    CHECK_THROWS_AS(m.validate(), ConfigError);
    CHECK_NOTHROW(ScenarioMix{}.validate());

    Config c;
    c.set("mix.straight", "1.0");
    c.set("mix.recurve", "0");
    c.set("mix.stall", "0");
    c.set("mix.twin", "0");
    c.set("mix.reintensify", "0");
    const ScenarioMix one = ScenarioMix::from_config(c);
    CHECK(one.straight == 1.0);
}

TEST_CASE("twin scenarios ship two storms straddling the 3.37 deg scale") {
    ScenarioMix mix;
    mix.straight = mix.recurve = mix.stall = mix.reintensify = 0.0;
    mix.twin = 1.0;
    const Dataset ds = gen_dataset(5, 20, mix);

    int twins = 0, closer = 0, wider = 0;
    for (const auto& sc : ds.scenarios) {
        if (sc.storms.size() != 2) continue;
        ++twins;
        const LatLon ca = sc.storms[0].keys[0].params.center;
        const LatLon cb = sc.storms[1].keys[0].params.center;
        const double sep = central_angle_deg(ca, cb);
        CHECK(sep > 1.8);
        CHECK(sep < 5.3);
        (sep < 3.37 ? closer : wider) += 1;
    }
    CHECK(twins == 10);
    CHECK(closer >= 1);
    CHECK(wider >= 1);

    // A single remaining slot cannot hold a twin pair.
    const Dataset one = gen_dataset(5, 1, mix);
    REQUIRE(one.scenarios.size() == 1u);
    CHECK(one.scenarios[0].storms.size() == 1u);
}

TEST_CASE("sub-cell offsets of true centers are uniform within cells") {
    const Dataset ds = gen_dataset(31, 1000, ScenarioMix{});
    std::vector<double> lat_off, lon_off;
    for (const auto& sc : ds.scenarios) {
        for (const auto& storm : sc.storms) {
            const VortexParams p = params_at(storm, 24.0);
            const double u = (sc.grid.lat0 - p.center.lat) / sc.grid.dlat;
            const double v =
                wrap_lon(p.center.lon - sc.grid.lon0) / sc.grid.dlon;
            lat_off.push_back(u - std::floor(u));
            lon_off.push_back(v - std::floor(v));
        }
    }
    REQUIRE(lat_off.size() >= 1000u);
    CHECK(ks_uniform(lat_off) < 0.05);
    CHECK(ks_uniform(lon_off) < 0.05);
}
