#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <string>
#include <vector>

#include "bgc/errors.hpp"
#include "bgc/eval/eval.hpp"
#include "bgc/geo.hpp"
#include "bgc/rng.hpp"
#include "doctest.h"

using namespace bgc;
using namespace bgc::eval;
using gridstore::BestTrackRecord;

namespace {

// Independent oracle: spherical law of cosines in extended precision.
// Reliable away from antipodes; for separations of a kilometre and up the
// long-double acos stays well inside 1e-9 relative.
double law_of_cosines_km(LatLon p1, LatLon p2) {
    const long double rad = 0.017453292519943295769236907684886L;
    const long double phi1 = p1.lat * rad;
    const long double phi2 = p2.lat * rad;
    const long double dlam = (p2.lon - p1.lon) * rad;
    long double x = std::sin(phi1) * std::sin(phi2) +
                    std::cos(phi1) * std::cos(phi2) * std::cos(dlam);
    x = std::min(1.0L, std::max(-1.0L, x));
    return static_cast<double>(6371.0L * std::acos(x));
}

BestTrackRecord truth_rec(const std::string& id, std::int64_t ts, double lat,
                          double lon, double wind) {
    BestTrackRecord r;
    r.storm_id = id;
    r.basin = "WP";
    r.timestamp = ts;
    r.lat = lat;
    r.lon = lon;
    r.max_wind = wind;
    return r;
}

PredRecord pred_rec(const std::string& id, std::int64_t ts, int lead,
                    double lat, double lon, double wind) {
    PredRecord p;
    p.storm_id = id;
    p.valid_time = ts;
    p.lead_h = lead;
    p.lat = lat;
    p.lon = lon;
    p.wind_ms = wind;
    return p;
}

}  // namespace

TEST_CASE("haversine hits the closed-form anchors") {
    CHECK(haversine_km({20.0, 140.0}, {20.0, 140.0}) == 0.0);

    const double quarter = 6371.0 * M_PI / 2.0;  // equator to 90 E
    CHECK(haversine_km({0.0, 0.0}, {0.0, 90.0}) ==
          doctest::Approx(quarter).epsilon(1e-9));

    const double one_deg = 6371.0 * M_PI / 180.0;  // one degree of latitude
    CHECK(haversine_km({0.0, 0.0}, {1.0, 0.0}) ==
          doctest::Approx(one_deg).epsilon(1e-9));

    CHECK_THROWS_AS(haversine_km({91.0, 0.0}, {0.0, 0.0}),
                    InvalidCoordinate);
    CHECK_THROWS_AS(haversine_km({0.0, 0.0}, {-90.5, 10.0}),
                    InvalidCoordinate);
    CHECK_THROWS_AS(
        haversine_km({std::nan(""), 0.0}, {0.0, 0.0}), InvalidCoordinate);
}

TEST_CASE("haversine agrees with an extended-precision oracle") {
    Rng rng(271);
    int checked = 0;
    while (checked < 500) {
        const LatLon p1{rng.uniform(-65.0, 65.0), rng.uniform(-180.0, 180.0)};
        const LatLon p2{p1.lat + rng.uniform(-25.0, 25.0),
                        p1.lon + rng.uniform(-25.0, 25.0)};
        if (std::abs(p2.lat) > 89.0) continue;
        const double got = haversine_km(p1, p2);
        if (got < 1.0 || got > 5000.0) continue;
        const double want = law_of_cosines_km(p1, p2);
        CHECK(got == doctest::Approx(want).epsilon(1e-9));
        ++checked;
    }
}

TEST_CASE("haversine behaves like a metric on random triples") {
    Rng rng(97);
    for (int t = 0; t < 200; ++t) {
        const LatLon a{rng.uniform(-70.0, 70.0), rng.uniform(-180.0, 180.0)};
        const LatLon b{rng.uniform(-70.0, 70.0), rng.uniform(-180.0, 180.0)};
        const LatLon c{rng.uniform(-70.0, 70.0), rng.uniform(-180.0, 180.0)};
        const double ab = haversine_km(a, b);
        const double ba = haversine_km(b, a);
        CHECK(ab == ba);
        CHECK(ab >= 0.0);
        const double ac = haversine_km(a, c);
        const double cb = haversine_km(c, b);
        CHECK(ab <= ac + cb + 1e-9);
    }
    const LatLon p{12.34, -141.7};
    CHECK(haversine_km(p, p) == 0.0);
    CHECK(haversine_km(p, {12.34, -141.699}) > 0.0);
}

TEST_CASE("wind MAE over matched pairs") {
    CHECK(wind_mae({10.0, 20.0}, {10.0, 20.0}) == 0.0);
    CHECK(wind_mae({10.0, 20.0}, {12.0, 17.0}) == doctest::Approx(2.5));

    // Shifting both sides by a constant changes nothing.
    Rng rng(8);
    std::vector<double> preds, truths, preds_c, truths_c;
    for (int i = 0; i < 50; ++i) {
        preds.push_back(rng.uniform(10.0, 60.0));
        truths.push_back(rng.uniform(10.0, 60.0));
        preds_c.push_back(preds.back() + 7.5);
        truths_c.push_back(truths.back() + 7.5);
    }
    CHECK(wind_mae(preds, truths) ==
          doctest::Approx(wind_mae(preds_c, truths_c)).epsilon(1e-12));

    CHECK_THROWS_AS(wind_mae({}, {}), EmptySet);
    CHECK_THROWS_AS(wind_mae({1.0}, {1.0, 2.0}), CoverageMismatch);
    CHECK_THROWS_AS(wind_mae({std::nan("")}, {1.0}), NonFiniteInput);
}

TEST_CASE("grid locking study quantifies the node-snap penalty") {
    const GridLockResult r = grid_locking_study(2000, 0.25, 5);
    CHECK(r.n == 2000);
    // Mean |U(-cell/2, cell/2)| = cell/4 per axis for the snapped decoder.
    CHECK(r.argmax_abs_lat_deg ==
          doctest::Approx(0.0625).epsilon(0.10));
    CHECK(r.argmax_abs_lon_deg ==
          doctest::Approx(0.0625).epsilon(0.10));
    // The expectation decoder reads the center back almost exactly.
    CHECK(r.expectation_abs_lat_deg < 0.005);
    CHECK(r.expectation_abs_lon_deg < 0.005);
    CHECK(r.expectation_mean_km < r.argmax_mean_km);

    // The penalty scales with the cell.
    const GridLockResult fine = grid_locking_study(2000, 0.1, 5);
    CHECK(fine.argmax_abs_lat_deg == doctest::Approx(0.025).epsilon(0.10));

    // Centers pinned on nodes leave nothing to lose.  The expectation
    // decoder keeps a ~1e-3 deg poleward residue even here: great-circle
    // cell distances shrink with cos(lat), so the kernel is not perfectly
    // north/south symmetric.  Longitude has no such asymmetry.
    const GridLockResult zero = grid_locking_study(200, 0.25, 5, 0.0);
    CHECK(zero.argmax_abs_lat_deg == 0.0);
    CHECK(zero.argmax_abs_lon_deg == 0.0);
    CHECK(zero.expectation_abs_lat_deg < 0.002);
    CHECK(zero.expectation_abs_lon_deg < 1e-9);

    // Same seed, same numbers.
    const GridLockResult again = grid_locking_study(2000, 0.25, 5);
    CHECK(again.argmax_mean_km == r.argmax_mean_km);
    CHECK(again.expectation_mean_km == r.expectation_mean_km);

    CHECK_THROWS_AS(grid_locking_study(0, 0.25, 5), EmptySet);
    CHECK_THROWS_AS(grid_locking_study(10, -0.25, 5), ConfigError);
    CHECK_THROWS_AS(grid_locking_study(10, 0.25, 5, 0.7), ConfigError);
}

namespace {

struct HandRun {
    std::vector<BestTrackRecord> truth;
    ForecastRun run;
};

HandRun hand_run() {
    HandRun h;
    h.truth = {
        truth_rec("TCA", 0, 20.0, 140.0, 30.0),
        truth_rec("TCA", 21600, 20.5, 140.5, 35.0),
        truth_rec("TCB", 0, 15.0, 150.0, 25.0),
        truth_rec("TCB", 21600, 15.2, 149.5, 28.0),
    };
    h.run.run_id = "hand";
    h.run.preds = {
        pred_rec("TCA", 0, 6, 20.1, 140.0, 28.0),
        pred_rec("TCB", 0, 6, 15.0, 150.2, 22.0),
        pred_rec("TCA", 21600, 12, 20.5, 140.6, 39.0),
        pred_rec("TCB", 21600, 12, 15.0, 149.5, 30.0),
        pred_rec("TCB", 10800, 12, 15.0, 149.0, 30.0),  // off-cadence: no match
    };
    return h;
}

}  // namespace

TEST_CASE("run evaluation matches truth at exact valid times") {
    const HandRun h = hand_run();
    const EvalReport rep = evaluate_run(h.run, h.truth);
    CHECK(rep.matched == 4);
    CHECK(rep.unmatched == 1);
    REQUIRE(rep.rows.size() == 2);

    CHECK(rep.rows[0].lead_h == 6);
    CHECK(rep.rows[0].n == 2);
    const double t6 =
        0.5 * (haversine_km({20.1, 140.0}, {20.0, 140.0}) +
               haversine_km({15.0, 150.2}, {15.0, 150.0}));
    CHECK(rep.rows[0].track_km == doctest::Approx(t6).epsilon(1e-12));
    CHECK(rep.rows[0].wind_mae_ms == doctest::Approx(2.5));  // |28-30|,|22-25|

    CHECK(rep.rows[1].lead_h == 12);
    CHECK(rep.rows[1].n == 2);
    const double t12 =
        0.5 * (haversine_km({20.5, 140.6}, {20.5, 140.5}) +
               haversine_km({15.0, 149.5}, {15.2, 149.5}));
    CHECK(rep.rows[1].track_km == doctest::Approx(t12).epsilon(1e-12));
    CHECK(rep.rows[1].wind_mae_ms == doctest::Approx(3.0));  // |39-35|,|30-28|
}

TEST_CASE("error tables render deterministically") {
    const HandRun h = hand_run();
    const EvalReport rep = evaluate_run(h.run, h.truth);

    const std::string csv = error_table_csv(rep);
    CHECK(csv.substr(0, csv.find('\n')) == "lead_h,n,track_km,wind_mae_ms");
    CHECK(csv == error_table_csv(rep));  // byte-identical on repeat
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);  // header + 2 rows

    const std::string text = report_text(rep);
    CHECK(text.find("4 matched") != std::string::npos);
    CHECK(text.find("1 unmatched") != std::string::npos);

    ForecastRun empty;
    empty.run_id = "empty";
    const EvalReport none = evaluate_run(empty, h.truth);
    CHECK(none.rows.empty());
    CHECK(error_table_csv(none) == "lead_h,n,track_km,wind_mae_ms\n");
}

TEST_CASE("run comparison reports per-lead improvement") {
    const HandRun h = hand_run();

    SUBCASE("a run against itself is identically zero") {
        const auto rows = compare_runs(h.run, h.run, h.truth);
        REQUIRE(rows.size() == 4);  // 2 leads x 2 metrics
        for (const auto& r : rows) CHECK(r.improvement_pct == 0.0);
    }

    SUBCASE("ten percent lower error reads as plus ten") {
        std::vector<BestTrackRecord> truth = {
            truth_rec("TCA", 0, 20.0, 140.0, 20.0)};
        ForecastRun b;
        b.run_id = "base";
        b.preds = {pred_rec("TCA", 0, 6, 20.0, 141.0, 30.0)};  // wind err 10
        ForecastRun a;
        a.run_id = "better";
        a.preds = {pred_rec("TCA", 0, 6, 20.0, 140.9, 29.0)};  // wind err 9
        const auto rows = compare_runs(a, b, truth);
        REQUIRE(rows.size() == 2);
        CHECK(rows[0].metric == "track_km");
        CHECK(rows[0].improvement_pct > 9.0);  // shorter miss, spherical
        CHECK(rows[1].metric == "wind_mae_ms");
        CHECK(rows[1].improvement_pct == doctest::Approx(10.0).epsilon(1e-9));
    }

    SUBCASE("different coverage is refused") {
        ForecastRun partial = h.run;
        partial.preds.pop_back();   // drop only the unmatched one: same keys
        CHECK_NOTHROW(compare_runs(partial, h.run, h.truth));
        partial.preds.pop_back();   // now a matched fix is missing
        CHECK_THROWS_AS(compare_runs(partial, h.run, h.truth),
                        CoverageMismatch);
    }

    SUBCASE("comparison table renders with its header") {
        const auto rows = compare_runs(h.run, h.run, h.truth);
        const std::string csv = comparison_csv(rows);
        CHECK(csv.substr(0, csv.find('\n')) ==
              "lead_h,metric,improvement_pct");
        CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
    }
}
