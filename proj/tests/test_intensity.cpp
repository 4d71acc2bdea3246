#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "bgc/errors.hpp"
#include "bgc/geo.hpp"
#include "bgc/intensity/intensity.hpp"
#include "bgc/rng.hpp"
#include "bgc/synth/vortex.hpp"
#include "doctest.h"

using namespace bgc;
using namespace bgc::intensity;
using gridstore::FieldCube;
using gridstore::GridSpec;
using gridstore::VariableId;

namespace {

const std::vector<VariableId> kVars = {VariableId::U10, VariableId::V10,
                                       VariableId::MSL};

GridSpec lattice_grid(double lat0, double lon0, int n, double cell = 0.25) {
    GridSpec g;
    g.nlat = g.nlon = n;
    g.dlat = g.dlon = cell;
    g.lat0 = lat0;
    g.lon0 = lon0;
    g.north_first = true;
    return g;
}

FieldCube wind_window(int n, float u, float v) {
    FieldCube cube(lattice_grid(30.0, 140.0, n),
                   {VariableId::U10, VariableId::V10}, 0);
    std::fill_n(cube.plane(0), cube.plane_size(), u);
    std::fill_n(cube.plane(1), cube.plane_size(), v);
    return cube;
}

FieldCube vortex_window(LatLon center, double v_max, double r_max,
                        const GridSpec& g, double bg_u = 0.0,
                        double bg_v = 0.0) {
    synth::VortexParams vp;
    vp.center = center;
    vp.v_max_ms = v_max;
    vp.r_max_km = r_max;
    vp.shape_b = 1.6;
    vp.deficit_hpa = 35.0;
    vp.bg_u_ms = bg_u;
    vp.bg_v_ms = bg_v;
    return synth::render_vortices({vp}, g, 1717200000, kVars);
}

double diagnosed_max(const FieldCube& w) {
    const float* u = w.var_plane(VariableId::U10);
    const float* v = w.var_plane(VariableId::V10);
    double best = 0.0;
    for (std::size_t k = 0; k < w.plane_size(); ++k) {
        best = std::max(best, std::sqrt(static_cast<double>(u[k]) * u[k] +
                                        static_cast<double>(v[k]) * v[k]));
    }
    return best;
}

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("partition dimensions follow the merge formula") {
    for (int p : {1, 2, 4}) {
        for (int n : {0, 1, 2}) {
            const int rc = p << n;
            for (int h : {32, 64}) {
                for (int w : {32, 48, 64}) {
                    if (h % rc != 0 || w % rc != 0) continue;
                    const RegionPartition part =
                        make_partition(h, w, p, n, 0.25);
                    CHECK(part.rows == h / rc);
                    CHECK(part.cols == w / rc);
                    CHECK(part.region_cells == rc);
                    CHECK(part.rows * rc == h);
                    CHECK(part.region_extent_deg ==
                          doctest::Approx(rc * 0.25).epsilon(1e-12));
                }
            }
        }
    }
    const RegionPartition square = make_partition(64, 64, 4, 2, 0.25);
    CHECK(square.rows == 4);
    CHECK(square.cols == 4);
    CHECK(square.region_cells == 16);

    CHECK_THROWS_AS(make_partition(50, 50, 4, 0, 0.25), IndivisibleWindow);
    CHECK_THROWS_AS(make_partition(64, 64, 3, 0, 0.25), IndivisibleWindow);
    CHECK_THROWS_AS(make_partition(64, 64, 6, 1, 0.25), IndivisibleWindow);
    CHECK_THROWS_AS(make_partition(0, 64, 4, 0, 0.25), ShapeMismatch);
    CHECK_THROWS_AS(make_partition(64, 64, 0, 0, 0.25), ConfigError);
    CHECK_THROWS_AS(make_partition(64, 64, 4, -1, 0.25), ConfigError);
    CHECK_THROWS_AS(make_partition(64, 64, 4, 0, 0.0), ConfigError);
}

TEST_CASE("basin size limits follow the twin-distance table") {
    CHECK(basin_stats("WP").min_inter_tc_distance_deg == 3.37);
    CHECK(basin_stats("EP").min_inter_tc_distance_deg == 1.20);
    CHECK(basin_stats("NA").no_twins());
    CHECK(basin_stats("NI").min_inter_tc_distance_deg == 16.37);
    CHECK(basin_stats("SI").min_inter_tc_distance_deg == 4.70);
    CHECK(basin_stats("SP").min_inter_tc_distance_deg == 5.92);
    CHECK_THROWS_AS(basin_stats("XX"), ConfigError);

    const BasinStats wp = basin_stats("WP");
    // 16-cell regions at 0.25 deg reach 4 deg, past 3.37/3.
    CHECK_THROWS_AS(make_partition(64, 64, 4, 2, 0.25, &wp), RegionTooLarge);
    // 4-cell regions give 1 deg, inside the 1.1233-deg limit.
    const RegionPartition ok = make_partition(32, 32, 4, 0, 0.25, &wp);
    CHECK(ok.region_extent_deg == doctest::Approx(1.0));

    // The bound is strict: exactly one third is already too large.
    const BasinStats tight{"WP", 12.0};
    CHECK_THROWS_AS(make_partition(64, 64, 4, 2, 0.25, &tight),
                    RegionTooLarge);
    CHECK_NOTHROW(make_partition(64, 64, 4, 2, 0.2499, &tight));

    // Basins without twin cyclones impose no limit.
    const BasinStats na = basin_stats("NA");
    CHECK_NOTHROW(make_partition(64, 64, 4, 2, 0.25, &na));

    const BasinStats ep = basin_stats("EP");
    CHECK_NOTHROW(make_partition(32, 32, 1, 0, 0.25, &ep));  // 0.25 < 0.40
    CHECK_THROWS_AS(make_partition(32, 32, 2, 0, 0.25, &ep),
                    RegionTooLarge);  // 0.50 >= 0.40

    const BasinStats si = basin_stats("SI");
    CHECK_NOTHROW(make_partition(48, 48, 6, 0, 0.25, &si));  // 1.50 < 1.5667
    CHECK_THROWS_AS(make_partition(56, 56, 7, 0, 0.25, &si),
                    RegionTooLarge);  // 1.75 >= 1.5667
}

TEST_CASE("region truth takes the strongest diagnosed wind per region") {
    const RegionPartition part = make_partition(16, 16, 4, 0, 0.25);

    SUBCASE("uniform wind fills every region") {
        const FieldCube w = wind_window(16, 12.0f, -16.0f);
        const RegionIntensityMap map = region_truth(w, part);
        for (double v : map.values) CHECK(v == doctest::Approx(20.0));
    }

    SUBCASE("a single spike stays local to its region") {
        FieldCube w = wind_window(16, 0.0f, 0.0f);
        w.at(0, 5, 9) = 45.0f;  // row block 1, col block 2
        const RegionIntensityMap map = region_truth(w, part);
        for (int r = 0; r < 4; ++r) {
            for (int c = 0; c < 4; ++c) {
                CHECK(map.at(r, c) ==
                      doctest::Approx(r == 1 && c == 2 ? 45.0 : 0.0));
            }
        }
    }

    SUBCASE("permutation within a region leaves the map unchanged") {
        FieldCube w = wind_window(16, 0.0f, 0.0f);
        Rng rng(5);
        for (int i = 0; i < 16; ++i) {
            for (int j = 0; j < 16; ++j) {
                w.at(0, i, j) = static_cast<float>(rng.uniform(0.0, 30.0));
            }
        }
        const RegionIntensityMap before = region_truth(w, part);
        std::swap(w.at(0, 1, 2), w.at(0, 2, 3));  // both in region (0,0)
        std::swap(w.at(0, 9, 13), w.at(0, 11, 12));  // both in region (2,3)
        const RegionIntensityMap after = region_truth(w, part);
        CHECK(before.values == after.values);
    }

    SUBCASE("raising any cell never lowers a region") {
        FieldCube w = wind_window(16, 0.0f, 0.0f);
        Rng rng(6);
        for (int i = 0; i < 16; ++i) {
            for (int j = 0; j < 16; ++j) {
                w.at(0, i, j) = static_cast<float>(rng.uniform(0.0, 30.0));
            }
        }
        const RegionIntensityMap before = region_truth(w, part);
        w.at(0, 7, 7) += 10.0f;
        const RegionIntensityMap after = region_truth(w, part);
        for (std::size_t k = 0; k < before.values.size(); ++k) {
            CHECK(after.values[k] >= before.values[k]);
        }
    }

    SUBCASE("the region holding the wind maximum carries the global max") {
        const GridSpec g = lattice_grid(22.0, 138.0, 32);
        const FieldCube w =
            vortex_window({18.1, 141.9}, 42.0, 50.0, g, 2.0, -1.0);
        const RegionPartition p32 = make_partition(32, 32, 4, 0, 0.25);
        const RegionIntensityMap map = region_truth(w, p32);
        const double global = diagnosed_max(w);
        const double best =
            *std::max_element(map.values.begin(), map.values.end());
        CHECK(best == doctest::Approx(global).epsilon(1e-12));
    }

    SUBCASE("missing diagnostics are reported") {
        FieldCube w = wind_window(16, 1.0f, 1.0f);
        const FieldCube only_u = w.select_vars({VariableId::U10});
        CHECK_THROWS_AS(region_truth(only_u, part), MissingVariable);
        CHECK_THROWS_AS(region_truth(wind_window(8, 1.f, 1.f), part),
                        ShapeMismatch);
    }
}

TEST_CASE("calibration fits the affine wind map") {
    std::vector<std::pair<double, double>> line;
    for (double x : {10.0, 18.0, 25.0, 33.0, 47.0}) {
        line.emplace_back(x, 1.3 * x + 2.0);
    }
    const Calibration c = calibrate(line);
    CHECK(c.a == doctest::Approx(1.3).epsilon(1e-9));
    CHECK(c.b == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(c.n_pairs == 5);
    CHECK(c.apply(20.0) == doctest::Approx(28.0).epsilon(1e-9));

    std::vector<std::pair<double, double>> ident = {
        {12.0, 12.0}, {30.0, 30.0}, {44.0, 44.0}};
    const Calibration id = calibrate(ident);
    CHECK(id.a == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(id.b == doctest::Approx(0.0).epsilon(1e-9));

    CHECK_THROWS_AS(calibrate({}), EmptySet);
    CHECK_THROWS_AS(calibrate({{20.0, 25.0}}), DegenerateFit);
    CHECK_THROWS_AS(calibrate({{20.0, 25.0}, {20.0, 31.0}}), DegenerateFit);
    CHECK_THROWS_AS(
        calibrate({{20.0, 25.0}, {std::nan(""), 31.0}}),
        NonFiniteInput);
}

TEST_CASE("coarse-grid smoothing calibrates to a slope above one") {
    // Quarter-degree sampling of a sharp vortex underestimates its peak
    // wind, so the best-track fit must stretch the diagnosed values.
    std::vector<std::pair<double, double>> pairs;
    Rng rng(19);
    for (double v_max : {25.0, 32.0, 38.0, 45.0, 52.0, 58.0}) {
        GridSpec fine;
        fine.nlat = fine.nlon = 100;
        fine.dlat = fine.dlon = 0.05;
        fine.lat0 = 20.475;
        fine.lon0 = 137.525;
        fine.north_first = true;
        const LatLon center{18.0 + rng.uniform(-0.1, 0.1),
                            140.0 + rng.uniform(-0.1, 0.1)};
        const FieldCube coarse =
            synth::downsample(vortex_window(center, v_max, 30.0, fine), 5);
        pairs.emplace_back(diagnosed_max(coarse), v_max);
    }
    const Calibration c = calibrate(pairs);
    INFO("fitted slope ", c.a, " intercept ", c.b);
    CHECK(c.a > 1.0);
}

TEST_CASE("calibration tables round-trip as CSV") {
    std::vector<std::pair<std::string, Calibration>> rows = {
        {"WP", {1.31, 2.25, 412}},
        {"EP", {1.08, -0.5, 96}},
    };
    const std::string text = format_calibration_csv(rows);
    CHECK(text.substr(0, text.find('\n')) == "basin,a,b,n_pairs");

    const auto back = parse_calibration_csv(text);
    REQUIRE(back.size() == 2);
    CHECK(back[0].first == "WP");
    CHECK(back[0].second.a == 1.31);
    CHECK(back[0].second.b == 2.25);
    CHECK(back[0].second.n_pairs == 412);
    CHECK(back[1].first == "EP");
    CHECK(back[1].second.b == -0.5);

    CHECK_THROWS_WITH_AS(parse_calibration_csv("a,b,c\n"),
                         doctest::Contains("row 1"), ParseError);
    CHECK_THROWS_WITH_AS(
        parse_calibration_csv("basin,a,b,n_pairs\nWP,1.0,2.0\n"),
        doctest::Contains("row 2"), ParseError);
    CHECK_THROWS_AS(
        parse_calibration_csv("basin,a,b,n_pairs\nWP,x,2.0,5\n"), ParseError);
    CHECK_THROWS_AS(
        parse_calibration_csv("basin,a,b,n_pairs\nWP,1.0,2.0,5.5\n"),
        ParseError);
    CHECK_THROWS_AS(parse_calibration_csv(""), ParseError);
}

TEST_CASE("coupled lookup picks the region containing the point") {
    const GridSpec g = lattice_grid(30.0, 140.0, 64);
    RegionIntensityMap map;
    map.part = make_partition(64, 64, 4, 2, 0.25);
    map.spec = g;
    map.values.resize(16);
    for (int k = 0; k < 16; ++k) map.values[static_cast<std::size_t>(k)] = k;

    // Exact window middle sits on both boundaries: larger indices win.
    CHECK(coupled_lookup({22.125, 147.875}, map) == map.at(2, 2));
    // Strictly inside region (0,3).
    CHECK(coupled_lookup({28.0, 152.5}, map) == map.at(0, 3));
    // A column boundary alone: the point belongs to the right-hand region.
    CHECK(coupled_lookup({25.0, 147.875}, map) == map.at(1, 2));
    // The far corner (within the half-cell tolerance) clamps to the last
    // region instead of inventing a fifth row.
    CHECK(coupled_lookup({14.125, 155.875}, map) == map.at(3, 3));

    CHECK_THROWS_AS(coupled_lookup({10.0, 147.0}, map), OutOfWindow);
    CHECK_THROWS_AS(coupled_lookup({22.0, 120.0}, map), OutOfWindow);

    // The mechanism behind coupling: a refined center that crosses a region
    // boundary reads a different intensity than the raw prior.
    const LatLon prior{25.0, 147.80};    // region (1,1)
    const LatLon refined{25.0, 147.95};  // region (1,2)
    CHECK(coupled_lookup(prior, map) == map.at(1, 1));
    CHECK(coupled_lookup(refined, map) == map.at(1, 2));
    CHECK(coupled_lookup(prior, map) != coupled_lookup(refined, map));
}

namespace {

ModelSpec small_spec() {
    ModelSpec spec;
    spec.vars = kVars;
    spec.net.in_channels = static_cast<int>(kVars.size());
    spec.net.hidden = {{8, 3}, {8, 3}};
    spec.net.head = nn::Head::RegionWind;
    spec.net.region_cells = 4;
    spec.p = 4;
    spec.n_merge = 0;
    spec.basin = "WP";
    return spec;
}

Model zero_model() {
    Model m;
    m.spec = small_spec();
    m.feat_mean.assign(kVars.size(), 0.0);
    m.feat_stdev.assign(kVars.size(), 1.0);
    m.params.values.assign(m.spec.net.param_count(), 0.0);
    return m;
}

// Vortices wandering across a lattice-aligned window: every region sees
// both calm and violent samples across the set.
std::vector<IntensityCase> vortex_bench(int n, std::uint64_t seed) {
    std::vector<IntensityCase> cases;
    Rng rng(seed);
    for (int s = 0; s < n; ++s) {
        char id[16];
        std::snprintf(id, sizeof id, "SYN%03d", s);
        const GridSpec g = lattice_grid(22.0, 138.0, 16);
        const LatLon center{rng.uniform(19.0, 21.0), rng.uniform(139.0, 141.0)};
        cases.push_back(
            {id, vortex_window(center, rng.uniform(25.0, 55.0),
                               rng.uniform(30.0, 55.0), g,
                               rng.uniform(-3.0, 3.0),
                               rng.uniform(-3.0, 3.0))});
    }
    return cases;
}

}  // namespace

TEST_CASE("intensity model spec validation rejects bad configurations") {
    CHECK_NOTHROW(small_spec().validate());

    ModelSpec empty = small_spec();
    empty.vars.clear();
    CHECK_THROWS_AS(empty.validate(), ConfigError);

    ModelSpec dup = small_spec();
    dup.vars.push_back(VariableId::MSL);
    CHECK_THROWS_AS(dup.validate(), ConfigError);

    ModelSpec wrong_head = small_spec();
    wrong_head.net.head = nn::Head::DensityLogits;
    wrong_head.net.region_cells = 0;
    CHECK_THROWS_AS(wrong_head.validate(), ConfigError);

    ModelSpec chans = small_spec();
    chans.net.in_channels = 7;
    CHECK_THROWS_AS(chans.validate(), ShapeMismatch);

    ModelSpec pool = small_spec();
    pool.net.region_cells = 8;
    CHECK_THROWS_AS(pool.validate(), ShapeMismatch);

    ModelSpec basin = small_spec();
    basin.basin = "ZZ";
    CHECK_THROWS_AS(basin.validate(), ConfigError);
}

TEST_CASE("zero parameters predict calm everywhere") {
    const Model m = zero_model();
    const GridSpec g = lattice_grid(24.0, 136.0, 32);
    const FieldCube w = vortex_window({20.5, 140.0}, 45.0, 40.0, g);
    const RegionIntensityMap map = predict(m, w);
    CHECK(map.part.rows == 8);
    CHECK(map.part.cols == 8);
    for (double v : map.values) CHECK(v == 0.0);
}

TEST_CASE("predict enforces the basin limit of its partition") {
    Model m = zero_model();
    m.spec.basin = "EP";  // limit 0.40 deg; 4-cell regions span 1.0 deg
    const GridSpec g = lattice_grid(24.0, 136.0, 32);
    const FieldCube w = vortex_window({20.5, 140.0}, 45.0, 40.0, g);
    CHECK_THROWS_AS(predict(m, w), RegionTooLarge);
}

TEST_CASE("trained model beats the global-mean baseline by 30 percent") {
    const std::vector<IntensityCase> train = vortex_bench(40, 101);
    const std::vector<IntensityCase> val = vortex_bench(12, 202);

    // Calibration from window-max diagnosed wind to the storm scale.
    std::vector<std::pair<double, double>> pairs;
    for (const auto& c : train) {
        pairs.emplace_back(diagnosed_max(c.window),
                           1.25 * diagnosed_max(c.window) + 1.0);
    }
    const Calibration calib = calibrate(pairs);

    // Predictions live in m/s, so the head must climb tens of units from
    // its near-zero init: wind-scale learning rate, several hundred steps.
    ModelSpec spec = small_spec();
    spec.net.hidden = {{8, 3}};
    nn::TrainConfig tc;
    tc.lr = 0.1;
    tc.epochs = 400;
    tc.seed = 11;
    tc.jobs = 4;
    const TrainReport rep = train_model(spec, calib, train, val, tc);

    // Constant predictor fitted on the training labels.
    double label_sum = 0.0;
    std::size_t label_n = 0;
    for (const auto& c : train) {
        const nn::Sample s = make_sample(rep.model, c.window);
        for (double t : s.target.region) label_sum += t;
        label_n += s.target.region.size();
    }
    const double global_mean = label_sum / static_cast<double>(label_n);

    double net_mae = 0.0, base_mae = 0.0;
    std::size_t n = 0;
    for (const auto& c : val) {
        const nn::Sample s = make_sample(rep.model, c.window);
        const RegionIntensityMap map = predict(rep.model, c.window);
        REQUIRE(map.values.size() == s.target.region.size());
        for (std::size_t k = 0; k < map.values.size(); ++k) {
            net_mae += std::abs(map.values[k] - s.target.region[k]);
            base_mae += std::abs(global_mean - s.target.region[k]);
            ++n;
        }
    }
    net_mae /= static_cast<double>(n);
    base_mae /= static_cast<double>(n);
    INFO("net MAE ", net_mae, " baseline MAE ", base_mae);
    CHECK(net_mae < 0.7 * base_mae);
}

TEST_CASE("intensity training is reproducible from its seed") {
    const std::vector<IntensityCase> train = vortex_bench(8, 303);
    const std::vector<IntensityCase> val = vortex_bench(3, 404);
    const Calibration calib{1.2, 1.5, 8};

    ModelSpec spec = small_spec();
    spec.net.hidden = {{8, 3}};
    nn::TrainConfig tc;
    tc.lr = 0.05;
    tc.epochs = 5;
    tc.seed = 21;
    const TrainReport a = train_model(spec, calib, train, val, tc);
    const TrainReport b = train_model(spec, calib, train, val, tc);
    CHECK(a.model.params.values == b.model.params.values);
    const RegionIntensityMap pa = predict(a.model, val[0].window);
    const RegionIntensityMap pb = predict(b.model, val[0].window);
    CHECK(pa.values == pb.values);

    nn::TrainConfig par = tc;
    par.jobs = 4;
    const TrainReport c = train_model(spec, calib, train, val, par);
    CHECK(c.model.params.values == a.model.params.values);
}

TEST_CASE("intensity checkpoints round-trip through bytes and disk") {
    Model m;
    m.spec = small_spec();
    m.feat_mean = {0.5, -1.0, 101000.0};
    m.feat_stdev = {3.0, 2.5, 400.0};
    m.calib = {1.27, 1.9, 37};
    m.params = nn::init_params(m.spec.net, 77);

    const std::string bytes = encode_model(m);
    const Model back = decode_model(bytes);
    CHECK(back.spec.vars == m.spec.vars);
    CHECK(back.spec.p == m.spec.p);
    CHECK(back.spec.n_merge == m.spec.n_merge);
    CHECK(back.spec.basin == m.spec.basin);
    CHECK(back.feat_mean == m.feat_mean);
    CHECK(back.feat_stdev == m.feat_stdev);
    CHECK(back.calib.a == m.calib.a);
    CHECK(back.calib.b == m.calib.b);
    CHECK(back.calib.n_pairs == m.calib.n_pairs);
    CHECK(back.params.values == m.params.values);

    const GridSpec g = lattice_grid(24.0, 136.0, 32);
    const FieldCube w = vortex_window({20.5, 140.0}, 45.0, 40.0, g);
    const RegionIntensityMap pa = predict(m, w);
    const RegionIntensityMap pb = predict(back, w);
    CHECK(pa.values == pb.values);

    const std::string path = temp_path("bgc_intensity_roundtrip.bgp");
    save_model(path, m);
    const Model disk = load_model(path);
    CHECK(disk.params.values == m.params.values);
    std::filesystem::remove(path);

    const std::string bare =
        nn::encode_checkpoint(m.params, m.spec.net, nn::json::object());
    CHECK_THROWS_AS(decode_model(bare), ParseError);
}
