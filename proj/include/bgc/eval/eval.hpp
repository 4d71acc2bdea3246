#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bgc/geo.hpp"
#include "bgc/gridstore/best_track.hpp"

namespace bgc::eval {

// Great-circle distance on the R = 6371 km sphere via the haversine form,
// which stays accurate for the small separations track errors produce.
double haversine_km(LatLon p1, LatLon p2);  // InvalidCoordinate

// Mean absolute wind error over matched pairs.
double wind_mae(const std::vector<double>& preds,
                const std::vector<double>& truths);

// Sub-cell discretization error of the two center decoders, measured by
// encoding uniformly offset true centers and decoding them back.
struct GridLockResult {
    int n = 0;
    double cell_size_deg = 0.0;
    double argmax_abs_lat_deg = 0.0;  // per-axis mean |error|, degrees
    double argmax_abs_lon_deg = 0.0;
    double argmax_mean_km = 0.0;
    double expectation_abs_lat_deg = 0.0;
    double expectation_abs_lon_deg = 0.0;
    double expectation_mean_km = 0.0;
};

// True centers are drawn uniformly within +/- offset_half_width cells of a
// node; 0 pins every center exactly on its node.
GridLockResult grid_locking_study(int n_samples, double cell_size_deg,
                                  std::uint64_t seed,
                                  double offset_half_width = 0.5);

// One forecast fix at a valid time; lead hours relative to its init time.
struct PredRecord {
    std::string storm_id;
    std::int64_t valid_time = 0;
    int lead_h = 0;
    double lat = 0.0;
    double lon = 0.0;
    double wind_ms = 0.0;
};

struct ForecastRun {
    std::string run_id;
    std::string config_hash;
    std::vector<PredRecord> preds;
};

struct LeadRow {
    int lead_h = 0;
    std::size_t n = 0;
    double track_km = 0.0;
    double wind_mae_ms = 0.0;
};

struct EvalReport {
    std::string run_id;
    std::vector<LeadRow> rows;  // ascending lead_h
    std::size_t matched = 0;
    std::size_t unmatched = 0;  // counted, never silently dropped
};

// Predictions match truth records at exact (storm_id, valid_time) only.
EvalReport evaluate_run(const ForecastRun& run,
                        const std::vector<gridstore::BestTrackRecord>& truth);

inline constexpr const char* kErrorTableHeader = "lead_h,n,track_km,wind_mae_ms";
std::string error_table_csv(const EvalReport& report);
// Aligned table plus the matched/unmatched tally.
std::string report_text(const EvalReport& report);

struct ImprovementRow {
    int lead_h = 0;
    std::string metric;  // "track_km" or "wind_mae_ms"
    double improvement_pct = 0.0;  // positive favors run a
};

// Per-lead improvement of run a over run b: 100*(err_b - err_a)/err_b.
// Both runs must match the identical (storm, valid time) set.
std::vector<ImprovementRow> compare_runs(
    const ForecastRun& a, const ForecastRun& b,
    const std::vector<gridstore::BestTrackRecord>& truth);

inline constexpr const char* kComparisonHeader = "lead_h,metric,improvement_pct";
std::string comparison_csv(const std::vector<ImprovementRow>& rows);

}  // namespace bgc::eval
