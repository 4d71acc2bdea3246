#include "bgc/eval/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <utility>

#include "bgc/density/density.hpp"
#include "bgc/errors.hpp"
#include "bgc/gridstore/grid.hpp"
#include "bgc/rng.hpp"

namespace bgc::eval {

namespace {

std::string fmt(const char* f, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

void check_coord(LatLon p, const char* which) {
    if (!std::isfinite(p.lat) || !std::isfinite(p.lon) ||
        std::abs(p.lat) > 90.0) {
        throw InvalidCoordinate(fmt("%s point (%g, %g) is not on the globe",
                                    which, p.lat, p.lon));
    }
}

}  // namespace

double haversine_km(LatLon p1, LatLon p2) {
    check_coord(p1, "first");
    check_coord(p2, "second");
    const double phi1 = deg2rad(p1.lat);
    const double phi2 = deg2rad(p2.lat);
    const double dphi = deg2rad(p2.lat - p1.lat);
    const double dlam = deg2rad(p2.lon - p1.lon);
    const double sp = std::sin(0.5 * dphi);
    const double sl = std::sin(0.5 * dlam);
    const double a = sp * sp + std::cos(phi1) * std::cos(phi2) * sl * sl;
    const double c = 2.0 * std::atan2(std::sqrt(a), std::sqrt(1.0 - a));
    return kEarthRadiusKm * c;
}

double wind_mae(const std::vector<double>& preds,
                const std::vector<double>& truths) {
    if (preds.size() != truths.size()) {
        throw CoverageMismatch(fmt("%zu predictions against %zu truths",
                                   preds.size(), truths.size()));
    }
    if (preds.empty()) throw EmptySet("wind MAE over zero pairs");
    double sum = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (!std::isfinite(preds[i]) || !std::isfinite(truths[i])) {
            throw NonFiniteInput(fmt("wind pair (%g, %g)", preds[i],
                                     truths[i]));
        }
        sum += std::abs(preds[i] - truths[i]);
    }
    return sum / static_cast<double>(preds.size());
}

GridLockResult grid_locking_study(int n_samples, double cell_size_deg,
                                  std::uint64_t seed,
                                  double offset_half_width) {
    if (n_samples < 1) throw EmptySet("grid-locking study needs samples");
    if (!(cell_size_deg > 0.0) || !std::isfinite(cell_size_deg)) {
        throw ConfigError(fmt("cell size must be positive, got %g",
                              cell_size_deg));
    }
    if (offset_half_width < 0.0 || offset_half_width > 0.5) {
        throw ConfigError(fmt("offset half-width must lie in [0, 0.5] cells, "
                              "got %g",
                              offset_half_width));
    }
    gridstore::GridSpec spec;
    spec.nlat = spec.nlon = 25;
    spec.dlat = spec.dlon = cell_size_deg;
    spec.north_first = true;
    spec.lat0 = 20.0 + 12.0 * cell_size_deg;  // center node near 20 N
    spec.lon0 = 140.0 - 12.0 * cell_size_deg;

    density::KernelParams kernel;
    kernel.sigma_deg = cell_size_deg;
    kernel.radius_deg = 3.0 * cell_size_deg;

    GridLockResult res;
    res.n = n_samples;
    res.cell_size_deg = cell_size_deg;
    Rng rng(seed);
    for (int s = 0; s < n_samples; ++s) {
        const double di = rng.uniform(-offset_half_width, offset_half_width);
        const double dj = rng.uniform(-offset_half_width, offset_half_width);
        const LatLon truth =
            gridstore::index_to_latlon(12.0 + di, 12.0 + dj, spec);
        const density::DensityField field =
            density::encode_center(truth, spec, kernel);

        const LatLon am = density::decode_argmax(field);
        res.argmax_abs_lat_deg += std::abs(am.lat - truth.lat);
        res.argmax_abs_lon_deg += std::abs(lon_diff(am.lon, truth.lon));
        res.argmax_mean_km += haversine_km(am, truth);

        const LatLon ex = density::decode_expectation(field);
        res.expectation_abs_lat_deg += std::abs(ex.lat - truth.lat);
        res.expectation_abs_lon_deg += std::abs(lon_diff(ex.lon, truth.lon));
        res.expectation_mean_km += haversine_km(ex, truth);
    }
    const double inv = 1.0 / static_cast<double>(n_samples);
    res.argmax_abs_lat_deg *= inv;
    res.argmax_abs_lon_deg *= inv;
    res.argmax_mean_km *= inv;
    res.expectation_abs_lat_deg *= inv;
    res.expectation_abs_lon_deg *= inv;
    res.expectation_mean_km *= inv;
    return res;
}

namespace {

using TruthKey = std::pair<std::string, std::int64_t>;

std::map<TruthKey, const gridstore::BestTrackRecord*> truth_index(
    const std::vector<gridstore::BestTrackRecord>& truth) {
    std::map<TruthKey, const gridstore::BestTrackRecord*> index;
    for (const auto& r : truth) {
        index[{r.storm_id, r.timestamp}] = &r;
    }
    return index;
}

struct LeadAccum {
    std::size_t n = 0;
    double track_sum = 0.0;
    double wind_sum = 0.0;
};

}  // namespace

EvalReport evaluate_run(const ForecastRun& run,
                        const std::vector<gridstore::BestTrackRecord>& truth) {
    const auto index = truth_index(truth);
    std::map<int, LeadAccum> leads;
    EvalReport rep;
    rep.run_id = run.run_id;
    for (const auto& p : run.preds) {
        const auto it = index.find({p.storm_id, p.valid_time});
        if (it == index.end()) {
            ++rep.unmatched;
            continue;
        }
        const gridstore::BestTrackRecord& t = *it->second;
        LeadAccum& acc = leads[p.lead_h];
        acc.track_sum +=
            haversine_km({p.lat, p.lon}, {t.lat, t.lon});
        acc.wind_sum += std::abs(p.wind_ms - t.max_wind);
        ++acc.n;
        ++rep.matched;
    }
    for (const auto& [lead, acc] : leads) {
        LeadRow row;
        row.lead_h = lead;
        row.n = acc.n;
        row.track_km = acc.track_sum / static_cast<double>(acc.n);
        row.wind_mae_ms = acc.wind_sum / static_cast<double>(acc.n);
        rep.rows.push_back(row);
    }
    return rep;
}

std::string error_table_csv(const EvalReport& report) {
    std::string out = std::string(kErrorTableHeader) + "\n";
    for (const auto& r : report.rows) {
        out += fmt("%d,%zu,%.6f,%.6f\n", r.lead_h, r.n, r.track_km,
                   r.wind_mae_ms);
    }
    return out;
}

std::string report_text(const EvalReport& report) {
    std::string out;
    out += fmt("run %s: %zu matched, %zu unmatched\n",
               report.run_id.c_str(), report.matched, report.unmatched);
    out += fmt("%8s %8s %12s %14s\n", "lead_h", "n", "track_km",
               "wind_mae_ms");
    for (const auto& r : report.rows) {
        out += fmt("%8d %8zu %12.3f %14.3f\n", r.lead_h, r.n, r.track_km,
                   r.wind_mae_ms);
    }
    return out;
}

std::vector<ImprovementRow> compare_runs(
    const ForecastRun& a, const ForecastRun& b,
    const std::vector<gridstore::BestTrackRecord>& truth) {
    const auto index = truth_index(truth);
    auto matched_keys = [&index](const ForecastRun& run) {
        std::set<TruthKey> keys;
        for (const auto& p : run.preds) {
            if (index.count({p.storm_id, p.valid_time})) {
                keys.insert({p.storm_id, p.valid_time});
            }
        }
        return keys;
    };
    if (matched_keys(a) != matched_keys(b)) {
        throw CoverageMismatch(
            "runs '" + a.run_id + "' and '" + b.run_id +
            "' cover different (storm, valid time) sets");
    }

    const EvalReport ra = evaluate_run(a, truth);
    const EvalReport rb = evaluate_run(b, truth);
    if (ra.rows.size() != rb.rows.size()) {
        throw CoverageMismatch("runs disagree on lead times");
    }
    std::vector<ImprovementRow> out;
    for (std::size_t i = 0; i < ra.rows.size(); ++i) {
        if (ra.rows[i].lead_h != rb.rows[i].lead_h ||
            ra.rows[i].n != rb.rows[i].n) {
            throw CoverageMismatch(fmt(
                "lead %d h: %zu samples against %zu", ra.rows[i].lead_h,
                ra.rows[i].n, rb.rows[i].n));
        }
        auto pct = [&](double ea, double eb, const char* metric) {
            if (ea == 0.0 && eb == 0.0) return 0.0;
            if (eb == 0.0) {
                throw NonFiniteInput(fmt(
                    "baseline %s is zero at lead %d h", metric,
                    ra.rows[i].lead_h));
            }
            return 100.0 * (eb - ea) / eb;
        };
        out.push_back({ra.rows[i].lead_h, "track_km",
                       pct(ra.rows[i].track_km, rb.rows[i].track_km,
                           "track error")});
        out.push_back({ra.rows[i].lead_h, "wind_mae_ms",
                       pct(ra.rows[i].wind_mae_ms, rb.rows[i].wind_mae_ms,
                           "wind MAE")});
    }
    return out;
}

std::string comparison_csv(const std::vector<ImprovementRow>& rows) {
    std::string out = std::string(kComparisonHeader) + "\n";
    for (const auto& r : rows) {
        out += fmt("%d,%s,%.6f\n", r.lead_h, r.metric.c_str(),
                   r.improvement_pct);
    }
    return out;
}

}  // namespace bgc::eval
