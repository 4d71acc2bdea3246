#include "bgc/intensity/intensity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <utility>

#include "bgc/binio.hpp"
#include "bgc/errors.hpp"

namespace bgc::intensity {

namespace {

std::string fmt(const char* f, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

int region_side_cells(int p, int n_merge) {
    if (p < 1) throw ConfigError(fmt("patch size must be >= 1, got %d", p));
    if (n_merge < 0 || n_merge > 20) {
        throw ConfigError(fmt("merge depth must lie in [0,20], got %d",
                              n_merge));
    }
    long long rc = p;
    for (int i = 0; i < n_merge; ++i) rc *= 2;
    if (rc > 1 << 20) {
        throw ConfigError(fmt("region side 2^%d*%d cells is implausible",
                              n_merge, p));
    }
    return static_cast<int>(rc);
}

}  // namespace

const std::array<BasinStats, 6>& basin_table() {
    static const std::array<BasinStats, 6> table = {{
        {"WP", 3.37},
        {"EP", 1.20},
        {"NA", -1.0},
        {"NI", 16.37},
        {"SI", 4.70},
        {"SP", 5.92},
    }};
    return table;
}

const BasinStats& basin_stats(const std::string& basin) {
    for (const auto& b : basin_table()) {
        if (b.basin == basin) return b;
    }
    throw ConfigError("unknown basin '" + basin + "'");
}

RegionPartition make_partition(int h, int w, int p, int n_merge,
                               double cell_size_deg,
                               const BasinStats* basin) {
    if (h < 1 || w < 1) {
        throw ShapeMismatch(fmt("window %dx%d has no cells", h, w));
    }
    if (!(cell_size_deg > 0.0) || !std::isfinite(cell_size_deg)) {
        throw ConfigError(fmt("cell size must be positive, got %g",
                              cell_size_deg));
    }
    const int rc = region_side_cells(p, n_merge);
    if (h % rc != 0 || w % rc != 0) {
        throw IndivisibleWindow(fmt(
            "window %dx%d is not divisible by the region side 2^%d*%d = %d",
            h, w, n_merge, p, rc));
    }
    RegionPartition part;
    part.p = p;
    part.n_merge = n_merge;
    part.h = h;
    part.w = w;
    part.region_cells = rc;
    part.rows = h / rc;
    part.cols = w / rc;
    part.region_extent_deg = rc * cell_size_deg;
    if (basin != nullptr && !basin->no_twins()) {
        const double limit = basin->min_inter_tc_distance_deg / 3.0;
        if (part.region_extent_deg >= limit) {
            throw RegionTooLarge(fmt(
                "region side %.4f deg reaches a third of basin %s's minimum "
                "twin distance (%.4f/3 = %.4f deg)",
                part.region_extent_deg, basin->basin.c_str(),
                basin->min_inter_tc_distance_deg, limit));
        }
    }
    return part;
}

void RegionIntensityMap::validate() const {
    spec.validate();
    if (spec.nlat != part.h || spec.nlon != part.w) {
        throw ShapeMismatch(fmt("map geometry %dx%d under a %dx%d partition",
                                spec.nlat, spec.nlon, part.h, part.w));
    }
    if (values.size() !=
        static_cast<std::size_t>(part.rows) * part.cols) {
        throw ShapeMismatch(fmt("map holds %zu values for %dx%d regions",
                                values.size(), part.rows, part.cols));
    }
    for (double v : values) {
        if (!std::isfinite(v) || v < 0.0) {
            throw NonFiniteInput(fmt("region wind %g is not a speed", v));
        }
    }
}

RegionIntensityMap region_truth(const gridstore::FieldCube& window,
                                const RegionPartition& part) {
    if (window.spec.nlat != part.h || window.spec.nlon != part.w) {
        throw ShapeMismatch(fmt("window %dx%d under a %dx%d partition",
                                window.spec.nlat, window.spec.nlon, part.h,
                                part.w));
    }
    const float* u10 = window.var_plane(gridstore::VariableId::U10);
    const float* v10 = window.var_plane(gridstore::VariableId::V10);
    RegionIntensityMap map;
    map.part = part;
    map.spec = window.spec;
    map.values.assign(static_cast<std::size_t>(part.rows) * part.cols, 0.0);
    for (int r = 0; r < part.rows; ++r) {
        for (int c = 0; c < part.cols; ++c) {
            double best = 0.0;
            for (int i = r * part.region_cells;
                 i < (r + 1) * part.region_cells; ++i) {
                for (int j = c * part.region_cells;
                     j < (c + 1) * part.region_cells; ++j) {
                    const std::size_t k =
                        static_cast<std::size_t>(i) * part.w + j;
                    const double speed = std::sqrt(
                        static_cast<double>(u10[k]) * u10[k] +
                        static_cast<double>(v10[k]) * v10[k]);
                    best = std::max(best, speed);
                }
            }
            map.at(r, c) = best;
        }
    }
    return map;
}

Calibration calibrate(const std::vector<std::pair<double, double>>& pairs) {
    if (pairs.empty()) throw EmptySet("calibration needs wind pairs");
    double sx = 0.0, sy = 0.0;
    for (const auto& [x, y] : pairs) {
        if (!std::isfinite(x) || !std::isfinite(y)) {
            throw NonFiniteInput(fmt("calibration pair (%g, %g)", x, y));
        }
        sx += x;
        sy += y;
    }
    const double n = static_cast<double>(pairs.size());
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& [x, y] : pairs) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if (sxx <= 0.0) {
        throw DegenerateFit(fmt(
            "calibration needs two distinct diagnosed winds; all %zu pairs "
            "sit at %g m/s",
            pairs.size(), mx));
    }
    Calibration c;
    c.a = sxy / sxx;
    c.b = my - c.a * mx;
    c.n_pairs = pairs.size();
    return c;
}

std::string format_calibration_csv(
    const std::vector<std::pair<std::string, Calibration>>& rows) {
    std::string out = std::string(kCalibrationHeader) + "\n";
    for (const auto& [basin, c] : rows) {
        out += fmt("%s,%.17g,%.17g,%zu\n", basin.c_str(), c.a, c.b, c.n_pairs);
    }
    return out;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double_field(const std::string& s, std::size_t row,
                          const char* what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size() || !std::isfinite(v)) throw std::exception();
        return v;
    } catch (...) {
        throw ParseError(fmt("row %zu: %s '%s' is not a number", row, what,
                             s.c_str()));
    }
}

}  // namespace

std::vector<std::pair<std::string, Calibration>> parse_calibration_csv(
    const std::string& text) {
    std::vector<std::pair<std::string, Calibration>> out;
    std::istringstream in(text);
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (row == 1) {
            if (line != kCalibrationHeader) {
                throw ParseError(fmt("row 1: header must be '%s'",
                                     kCalibrationHeader));
            }
            continue;
        }
        if (line.empty()) continue;
        const auto f = split_fields(line);
        if (f.size() != 4) {
            throw ParseError(fmt("row %zu: expected 4 fields, got %zu", row,
                                 f.size()));
        }
        if (f[0].empty()) throw ParseError(fmt("row %zu: empty basin", row));
        Calibration c;
        c.a = parse_double_field(f[1], row, "slope");
        c.b = parse_double_field(f[2], row, "intercept");
        const double np = parse_double_field(f[3], row, "pair count");
        if (np < 0 || np != std::floor(np)) {
            throw ParseError(fmt("row %zu: pair count '%s' is not a count",
                                 row, f[3].c_str()));
        }
        c.n_pairs = static_cast<std::size_t>(np);
        out.emplace_back(f[0], c);
    }
    if (row == 0) throw ParseError("calibration table has no header");
    return out;
}

double coupled_lookup(LatLon center, const RegionIntensityMap& map) {
    map.validate();
    gridstore::FracIndex f;
    try {
        f = gridstore::latlon_to_fractional_index(center, map.spec);
    } catch (const OutOfBounds& e) {
        throw OutOfWindow(std::string("intensity lookup outside window: ") +
                          e.what());
    }
    // Cell k spans [k, k+1) in offset coordinates, so region boundaries land
    // on multiples of region_cells and floor() assigns them to the larger
    // index; the clamps absorb only the half-cell edge tolerance.
    const double u = f.fi + 0.5;
    const double v = f.fj + 0.5;
    const int r = std::clamp(
        static_cast<int>(std::floor(u / map.part.region_cells)), 0,
        map.part.rows - 1);
    const int c = std::clamp(
        static_cast<int>(std::floor(v / map.part.region_cells)), 0,
        map.part.cols - 1);
    return map.at(r, c);
}

void ModelSpec::validate() const {
    if (vars.empty()) throw ConfigError("intensity model needs feature variables");
    const std::set<gridstore::VariableId> seen(vars.begin(), vars.end());
    if (seen.size() != vars.size()) {
        throw ConfigError("intensity feature variables repeat");
    }
    if (net.head != nn::Head::RegionWind) {
        throw ConfigError("intensity models use the per-region wind head");
    }
    net.validate();
    if (net.in_channels != static_cast<int>(vars.size())) {
        throw ShapeMismatch(fmt(
            "net expects %d input channels but %zu variables are configured",
            net.in_channels, vars.size()));
    }
    const int rc = region_side_cells(p, n_merge);
    if (net.region_cells != rc) {
        throw ShapeMismatch(fmt(
            "net pools %d-cell regions but 2^%d*%d gives %d",
            net.region_cells, n_merge, p, rc));
    }
    basin_stats(basin);
}

namespace {

void check_scaler(const Model& m) {
    if (m.feat_mean.size() != m.spec.vars.size() ||
        m.feat_stdev.size() != m.spec.vars.size()) {
        throw ShapeMismatch(fmt(
            "scaler has %zu/%zu entries for %zu feature variables",
            m.feat_mean.size(), m.feat_stdev.size(), m.spec.vars.size()));
    }
    for (std::size_t i = 0; i < m.feat_stdev.size(); ++i) {
        if (!std::isfinite(m.feat_mean[i]) || !std::isfinite(m.feat_stdev[i]) ||
            m.feat_stdev[i] <= 0.0) {
            throw DegenerateFit(fmt("scaler channel %zu has mean %g, stdev %g",
                                    i, m.feat_mean[i], m.feat_stdev[i]));
        }
    }
}

void fit_scaler(Model& m, const std::vector<IntensityCase>& train_cases) {
    if (train_cases.empty()) {
        throw EmptySet("cannot fit a feature scaler on zero cases");
    }
    m.feat_mean.resize(m.spec.vars.size());
    m.feat_stdev.resize(m.spec.vars.size());
    for (std::size_t vi = 0; vi < m.spec.vars.size(); ++vi) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& c : train_cases) {
            const float* p = c.window.var_plane(m.spec.vars[vi]);
            for (std::size_t k = 0; k < c.window.plane_size(); ++k) sum += p[k];
            n += c.window.plane_size();
        }
        const double mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (const auto& c : train_cases) {
            const float* p = c.window.var_plane(m.spec.vars[vi]);
            for (std::size_t k = 0; k < c.window.plane_size(); ++k) {
                ss += (p[k] - mean) * (p[k] - mean);
            }
        }
        const double sd = std::sqrt(ss / static_cast<double>(n));
        if (sd <= 1e-12 * std::max(1.0, std::abs(mean))) {
            throw DegenerateFit(fmt(
                "variable %s is constant (mean %g) across the training split",
                std::string(gridstore::var_name(m.spec.vars[vi])).c_str(),
                mean));
        }
        m.feat_mean[vi] = mean;
        m.feat_stdev[vi] = sd;
    }
}

RegionPartition window_partition(const ModelSpec& spec,
                                 const gridstore::GridSpec& g) {
    const BasinStats& basin = basin_stats(spec.basin);
    return make_partition(g.nlat, g.nlon, spec.p, spec.n_merge,
                          std::max(g.dlat, g.dlon), &basin);
}

}  // namespace

nn::Tensor3 build_input(const Model& m, const gridstore::FieldCube& window) {
    check_scaler(m);
    nn::Tensor3 t(static_cast<int>(m.spec.vars.size()), window.spec.nlat,
                  window.spec.nlon);
    for (std::size_t vi = 0; vi < m.spec.vars.size(); ++vi) {
        const float* p = window.var_plane(m.spec.vars[vi]);
        const double inv = 1.0 / m.feat_stdev[vi];
        double* dst = t.plane(static_cast<int>(vi));
        for (std::size_t k = 0; k < window.plane_size(); ++k) {
            dst[k] = (p[k] - m.feat_mean[vi]) * inv;
        }
    }
    return t;
}

nn::Sample make_sample(const Model& m, const gridstore::FieldCube& window) {
    const RegionPartition part = window_partition(m.spec, window.spec);
    const RegionIntensityMap truth = region_truth(window, part);
    nn::Sample s;
    s.input = build_input(m, window);
    s.target.region.resize(truth.values.size());
    for (std::size_t k = 0; k < truth.values.size(); ++k) {
        s.target.region[k] = std::max(0.0, m.calib.apply(truth.values[k]));
    }
    return s;
}

TrainReport train_model(const ModelSpec& spec, const Calibration& calib,
                        const std::vector<IntensityCase>& train_cases,
                        const std::vector<IntensityCase>& val_cases,
                        const nn::TrainConfig& cfg) {
    spec.validate();
    TrainReport rep;
    rep.model.spec = spec;
    rep.model.calib = calib;
    fit_scaler(rep.model, train_cases);
    std::vector<nn::Sample> tr, va;
    tr.reserve(train_cases.size());
    va.reserve(val_cases.size());
    for (const auto& c : train_cases) {
        tr.push_back(make_sample(rep.model, c.window));
    }
    for (const auto& c : val_cases) {
        va.push_back(make_sample(rep.model, c.window));
    }
    nn::TrainResult res = nn::train(spec.net, tr, va, cfg);
    rep.model.params = std::move(res.params);
    rep.log = std::move(res.log);
    return rep;
}

RegionIntensityMap predict(const Model& m, const gridstore::FieldCube& window) {
    m.spec.validate();
    const RegionPartition part = window_partition(m.spec, window.spec);
    const nn::Tensor3 in = build_input(m, window);
    const nn::Output out = nn::forward(m.params, m.spec.net, in);
    if (out.h != part.rows || out.w != part.cols) {
        throw ShapeMismatch(fmt("head produced %dx%d regions, expected %dx%d",
                                out.h, out.w, part.rows, part.cols));
    }
    RegionIntensityMap map;
    map.part = part;
    map.spec = window.spec;
    map.values = out.values;
    map.validate();
    return map;
}

std::string encode_model(const Model& m) {
    m.spec.validate();
    check_scaler(m);
    nn::json desc;
    nn::json var_names = nn::json::array();
    for (auto v : m.spec.vars) {
        var_names.push_back(std::string(gridstore::var_name(v)));
    }
    desc["vars"] = std::move(var_names);
    desc["p"] = m.spec.p;
    desc["n_merge"] = m.spec.n_merge;
    desc["basin"] = m.spec.basin;
    desc["scaler"] = {{"mean", m.feat_mean}, {"stdev", m.feat_stdev}};
    desc["calibration"] = {{"a", m.calib.a},
                           {"b", m.calib.b},
                           {"n_pairs", m.calib.n_pairs}};
    nn::json extra;
    extra["intensity"] = std::move(desc);
    return nn::encode_checkpoint(m.params, m.spec.net, extra);
}

Model decode_model(const std::string& bytes) {
    const nn::Checkpoint ck =
        nn::decode_checkpoint(bytes, "intensity checkpoint");
    if (!ck.metadata.contains("intensity")) {
        throw ParseError("intensity checkpoint metadata lacks \"intensity\"");
    }
    Model m;
    m.spec.net = ck.config;
    m.params = ck.params;
    try {
        const nn::json& d = ck.metadata.at("intensity");
        for (const auto& name : d.at("vars")) {
            const auto v = gridstore::var_from_name(name.get<std::string>());
            if (!v) {
                throw ParseError(
                    "intensity checkpoint names unknown variable '" +
                    name.get<std::string>() + "'");
            }
            m.spec.vars.push_back(*v);
        }
        m.spec.p = d.at("p").get<int>();
        m.spec.n_merge = d.at("n_merge").get<int>();
        m.spec.basin = d.at("basin").get<std::string>();
        m.feat_mean = d.at("scaler").at("mean").get<std::vector<double>>();
        m.feat_stdev = d.at("scaler").at("stdev").get<std::vector<double>>();
        m.calib.a = d.at("calibration").at("a").get<double>();
        m.calib.b = d.at("calibration").at("b").get<double>();
        m.calib.n_pairs = d.at("calibration").at("n_pairs").get<std::size_t>();
    } catch (const nn::json::exception& e) {
        throw ParseError(std::string("intensity checkpoint metadata: ") +
                         e.what());
    }
    m.spec.validate();
    check_scaler(m);
    return m;
}

void save_model(const std::string& path, const Model& m) {
    binio::write_file(path, encode_model(m));
}

Model load_model(const std::string& path) {
    return decode_model(binio::read_file(path));
}

}  // namespace bgc::intensity
