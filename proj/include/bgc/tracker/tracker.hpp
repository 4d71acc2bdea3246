#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bgc/config.hpp"
#include "bgc/geo.hpp"
#include "bgc/gridstore/grid.hpp"

namespace bgc::tracker {

enum class TrackSource { BestTrack, Kinematic, Refined };

struct TrackFix {
    std::int64_t timestamp = 0;
    double lat = 0.0;
    double lon = 0.0;
};

// A storm trajectory: strictly increasing timestamps, at most 12 h between
// fixes, and at most 5 degrees of great-circle displacement per 6 h.
struct TrackState {
    std::string storm_id;
    std::vector<TrackFix> fixes;
    TrackSource source = TrackSource::BestTrack;

    const TrackFix& last() const;
    void validate() const;
    // Validates the extended track before committing the fix.
    void append(TrackFix fix);
};

inline constexpr double kMaxDegPer6h = 5.0;
inline constexpr std::int64_t kSixHours = 21600;
inline constexpr std::int64_t kMaxFixGap = 43200;

struct SteeringVector {
    double u_mean = 0.0;
    double v_mean = 0.0;
    double radius_deg = 0.0;
    std::vector<double> level_weights;
};

struct TrackerConfig {
    double steering_radius_deg = 3.0;
    std::vector<double> steering_weights = {0.25, 0.35, 0.40};
    double alpha = 0.5;
    std::vector<double> box_schedule = {3.0, 1.5, 0.75};

    static TrackerConfig from_config(const Config& cfg);
    void validate() const;
};

// Level-weighted disk means of U/V at 500/700/850 hPa around a point.  The
// disk is the set of cells whose center lies within radius_deg great-circle
// degrees of the point.
SteeringVector steering_flow(const gridstore::FieldCube& cube, LatLon center,
                             double radius_deg,
                             const std::vector<double>& level_weights);

// Advance the last fix by the blend alpha*persistence + (1-alpha)*steering
// for dt seconds on the local tangent plane (111.195 km per degree).
LatLon extrapolate(const TrackState& history, const SteeringVector& steer,
                   std::int64_t dt_seconds, double alpha);

// Shrinking-box argmin descent to the nearest local MSL minimum; each stage
// re-centers on the current argmin.  Returns a grid node.
gridstore::NodeIndex refine_pressure_min_cell(
    const float* msl, const gridstore::GridSpec& spec, LatLon candidate,
    const std::vector<double>& box_schedule);
LatLon refine_pressure_min(const float* msl, const gridstore::GridSpec& spec,
                           LatLon candidate,
                           const std::vector<double>& box_schedule);
LatLon refine_pressure_min(const gridstore::FieldCube& cube, LatLon candidate,
                           const std::vector<double>& box_schedule);

// One kinematic tracker step at the cube's timestamp; returns the history
// extended by a Kinematic fix at a grid node.
TrackState track_step(const gridstore::FieldCube& cube,
                      const TrackState& history, const TrackerConfig& cfg);

}  // namespace bgc::tracker
