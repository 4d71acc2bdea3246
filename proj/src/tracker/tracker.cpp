#include "bgc/tracker/tracker.hpp"

#include <algorithm>
#include <cmath>

#include "bgc/errors.hpp"

namespace bgc::tracker {

using gridstore::FieldCube;
using gridstore::GridSpec;
using gridstore::NodeIndex;
using gridstore::VariableId;

const TrackFix& TrackState::last() const {
    if (fixes.empty()) throw EmptyHistory("track has no fixes");
    return fixes.back();
}

void TrackState::validate() const {
    for (std::size_t k = 1; k < fixes.size(); ++k) {
        const TrackFix& a = fixes[k - 1];
        const TrackFix& b = fixes[k];
        const std::int64_t dt = b.timestamp - a.timestamp;
        if (dt <= 0)
            throw ParseError("track '" + storm_id +
                             "': timestamps not strictly increasing at fix " +
                             std::to_string(k));
        if (dt > kMaxFixGap)
            throw ParseError("track '" + storm_id + "': " +
                             std::to_string(dt) +
                             " s gap between fixes exceeds 12 h");
        const double disp =
            central_angle_deg({a.lat, a.lon}, {b.lat, b.lon});
        const double bound =
            kMaxDegPer6h * (static_cast<double>(dt) / kSixHours);
        if (disp > bound)
            throw PlausibilityViolation(
                "track '" + storm_id + "': fix " + std::to_string(k) +
                " moved " + std::to_string(disp) + " deg in " +
                std::to_string(dt) + " s (bound " + std::to_string(bound) +
                " deg)");
    }
}

void TrackState::append(TrackFix fix) {
    fixes.push_back(fix);
    try {
        validate();
    } catch (...) {
        fixes.pop_back();
        throw;
    }
}

TrackerConfig TrackerConfig::from_config(const Config& cfg) {
    TrackerConfig t;
    t.steering_radius_deg =
        cfg.get_double("steering.radius_deg", t.steering_radius_deg);
    t.steering_weights =
        cfg.get_doubles("steering.weights", t.steering_weights);
    t.alpha = cfg.get_double("extrapolate.alpha", t.alpha);
    t.box_schedule = cfg.get_doubles("refine.box_schedule", t.box_schedule);
    t.validate();
    return t;
}

void TrackerConfig::validate() const {
    if (!(steering_radius_deg > 0.0))
        throw ConfigError("steering.radius_deg must be positive");
    if (steering_weights.size() != 3)
        throw ConfigError("steering.weights needs one weight per level "
                          "(500, 700, 850 hPa)");
    double sum = 0.0;
    for (double w : steering_weights) {
        if (w < 0.0) throw ConfigError("steering.weights must be nonnegative");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw ConfigError("steering.weights must sum to 1, got " +
                          std::to_string(sum));
    if (alpha < 0.0 || alpha > 1.0)
        throw ConfigError("extrapolate.alpha must lie in [0, 1]");
    if (box_schedule.empty())
        throw ConfigError("refine.box_schedule must be nonempty");
    for (std::size_t k = 0; k < box_schedule.size(); ++k) {
        if (!(box_schedule[k] > 0.0))
            throw ConfigError("refine.box_schedule entries must be positive");
        if (k > 0 && box_schedule[k] >= box_schedule[k - 1])
            throw ConfigError(
                "refine.box_schedule must be strictly decreasing");
    }
}

SteeringVector steering_flow(const FieldCube& cube, LatLon center,
                             double radius_deg,
                             const std::vector<double>& level_weights) {
    if (level_weights.size() != 3)
        throw ConfigError("steering needs 3 level weights");
    {
        double sum = 0.0;
        for (double w : level_weights) {
            if (w < 0.0)
                throw ConfigError("steering weights must be nonnegative");
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw ConfigError("steering weights must sum to 1");
    }
    if (!(radius_deg > 0.0))
        throw ConfigError("steering radius must be positive");

    const GridSpec& g = cube.spec;
    // The whole averaging disk has to fit inside the grid.
    gridstore::latlon_to_fractional_index(
        {center.lat + radius_deg, center.lon}, g);
    gridstore::latlon_to_fractional_index(
        {center.lat - radius_deg, center.lon}, g);
    if (!g.periodic_lon()) {
        const double top =
            std::min(89.9, std::abs(center.lat) + radius_deg);
        const double dlon = radius_deg / std::cos(deg2rad(top));
        gridstore::latlon_to_fractional_index(
            {center.lat, center.lon + dlon}, g);
        gridstore::latlon_to_fractional_index(
            {center.lat, center.lon - dlon}, g);
    }

    const VariableId uvars[3] = {VariableId::U500, VariableId::U700,
                                 VariableId::U850};
    const VariableId vvars[3] = {VariableId::V500, VariableId::V700,
                                 VariableId::V850};
    const float* up[3];
    const float* vp[3];
    for (int l = 0; l < 3; ++l) {
        up[l] = cube.var_plane(uvars[l]);
        vp[l] = cube.var_plane(vvars[l]);
    }

    double usum[3] = {0, 0, 0}, vsum[3] = {0, 0, 0};
    std::int64_t count = 0;
    for (int i = 0; i < g.nlat; ++i) {
        for (int j = 0; j < g.nlon; ++j) {
            const LatLon cell{g.lat_at(i), g.lon_at(j)};
            if (central_angle_deg(cell, center) > radius_deg) continue;
            const std::size_t idx =
                static_cast<std::size_t>(i) * g.nlon + j;
            for (int l = 0; l < 3; ++l) {
                usum[l] += up[l][idx];
                vsum[l] += vp[l][idx];
            }
            ++count;
        }
    }
    if (count == 0)
        throw OutOfBounds("no grid cell inside the steering disk of radius " +
                          std::to_string(radius_deg));

    SteeringVector s;
    s.radius_deg = radius_deg;
    s.level_weights = level_weights;
    for (int l = 0; l < 3; ++l) {
        s.u_mean += level_weights[l] * (usum[l] / count);
        s.v_mean += level_weights[l] * (vsum[l] / count);
    }
    return s;
}

LatLon extrapolate(const TrackState& history, const SteeringVector& steer,
                   std::int64_t dt_seconds, double alpha) {
    if (history.fixes.empty())
        throw EmptyHistory("extrapolate needs at least one fix");
    if (alpha < 0.0 || alpha > 1.0)
        throw ConfigError("extrapolate alpha must lie in [0, 1]");
    const TrackFix& cur = history.fixes.back();
    const double m_per_deg = kKmPerDegree * 1000.0;
    const double coslat = std::cos(deg2rad(cur.lat));

    double u_pers = steer.u_mean, v_pers = steer.v_mean;
    if (history.fixes.size() >= 2) {
        const TrackFix& prev = history.fixes[history.fixes.size() - 2];
        const double dt_p =
            static_cast<double>(cur.timestamp - prev.timestamp);
        u_pers = lon_diff(cur.lon, prev.lon) * m_per_deg * coslat / dt_p;
        v_pers = (cur.lat - prev.lat) * m_per_deg / dt_p;
    }

    const double u = alpha * u_pers + (1.0 - alpha) * steer.u_mean;
    const double v = alpha * v_pers + (1.0 - alpha) * steer.v_mean;
    const double dt = static_cast<double>(dt_seconds);
    const double lat = cur.lat + v * dt / m_per_deg;
    const double lon = wrap_lon(cur.lon + u * dt / (m_per_deg * coslat));
    return {lat, lon};
}

namespace {

NodeIndex box_argmin(const float* msl, const GridSpec& g, NodeIndex center,
                     int di, int dj) {
    const int i_lo = center.i - di;
    const int i_hi = center.i + di;
    if (i_lo < 0 || i_hi > g.nlat - 1)
        throw OutOfBounds("search box rows [" + std::to_string(i_lo) + ", " +
                          std::to_string(i_hi) + "] leave the grid (nlat=" +
                          std::to_string(g.nlat) + ")");
    const bool wrap = g.periodic_lon();
    if (!wrap && (center.j - dj < 0 || center.j + dj > g.nlon - 1))
        throw OutOfBounds("search box cols [" +
                          std::to_string(center.j - dj) + ", " +
                          std::to_string(center.j + dj) +
                          "] leave the grid (nlon=" + std::to_string(g.nlon) +
                          ")");

    NodeIndex best{-1, -1};
    float bv = 0.0f, lo = 0.0f, hi = 0.0f;
    bool first = true;
    for (int i = i_lo; i <= i_hi; ++i) {
        for (int dx = -dj; dx <= dj; ++dx) {
            int j = center.j + dx;
            if (wrap) j = ((j % g.nlon) + g.nlon) % g.nlon;
            const float v = msl[static_cast<std::size_t>(i) * g.nlon + j];
            if (first) {
                bv = lo = hi = v;
                best = {i, j};
                first = false;
                continue;
            }
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            if (v < bv) {
                bv = v;
                best = {i, j};
            }
        }
    }
    if (lo == hi)
        throw FlatField("search box is constant (MSL " + std::to_string(lo) +
                        " everywhere), no pressure minimum to follow");
    return best;
}

}  // namespace

NodeIndex refine_pressure_min_cell(const float* msl, const GridSpec& spec,
                                   LatLon candidate,
                                   const std::vector<double>& box_schedule) {
    if (box_schedule.empty())
        throw ConfigError("box schedule must be nonempty");
    for (std::size_t k = 1; k < box_schedule.size(); ++k)
        if (box_schedule[k] >= box_schedule[k - 1])
            throw ConfigError("box schedule must be strictly decreasing");

    NodeIndex cur = gridstore::nearest_node(candidate, spec);
    for (double h : box_schedule) {
        if (!(h > 0.0)) throw ConfigError("box half-width must be positive");
        const int di = static_cast<int>(std::floor(h / spec.dlat + 1e-9));
        const int dj = static_cast<int>(std::floor(h / spec.dlon + 1e-9));
        cur = box_argmin(msl, spec, cur, di, dj);
    }
    return cur;
}

LatLon refine_pressure_min(const float* msl, const GridSpec& spec,
                           LatLon candidate,
                           const std::vector<double>& box_schedule) {
    const NodeIndex c =
        refine_pressure_min_cell(msl, spec, candidate, box_schedule);
    return {spec.lat_at(c.i), spec.lon_at(c.j)};
}

LatLon refine_pressure_min(const FieldCube& cube, LatLon candidate,
                           const std::vector<double>& box_schedule) {
    return refine_pressure_min(cube.var_plane(VariableId::MSL), cube.spec,
                               candidate, box_schedule);
}

TrackState track_step(const FieldCube& cube, const TrackState& history,
                      const TrackerConfig& cfg) {
    cfg.validate();
    const TrackFix& cur = history.last();
    const std::int64_t dt = cube.timestamp - cur.timestamp;
    if (dt <= 0)
        throw ParseError("cube timestamp " + std::to_string(cube.timestamp) +
                         " is not after the last fix at " +
                         std::to_string(cur.timestamp));

    const SteeringVector steer =
        steering_flow(cube, {cur.lat, cur.lon}, cfg.steering_radius_deg,
                      cfg.steering_weights);
    const LatLon cand = extrapolate(history, steer, dt, cfg.alpha);
    const LatLon fix = refine_pressure_min(cube, cand, cfg.box_schedule);

    TrackState out = history;
    out.source = TrackSource::Kinematic;
    out.append({cube.timestamp, fix.lat, fix.lon});
    return out;
}

}  // namespace bgc::tracker
