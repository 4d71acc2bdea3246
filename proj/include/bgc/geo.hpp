#pragma once

#include <cmath>
#include <numbers>

namespace bgc {

// Mean Earth radius used everywhere a distance in km is produced.
inline constexpr double kEarthRadiusKm = 6371.0;

// Kilometers per degree of latitude for local-tangent-plane conversions
// (1 deg lon = kKmPerDegree * cos(lat) km).
inline constexpr double kKmPerDegree = 111.195;

struct LatLon {
    double lat = 0.0;  // degrees, [-90, 90]
    double lon = 0.0;  // degrees, [0, 360)
};

inline double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }

// Normalize a longitude into [0, 360).
inline double wrap_lon(double lon) {
    double w = std::fmod(lon, 360.0);
    if (w < 0.0) w += 360.0;
    // fmod can return 360.0 - epsilon rounding back up
    if (w >= 360.0) w -= 360.0;
    return w;
}

// Signed longitude difference a - b folded into (-180, 180].
inline double lon_diff(double a, double b) {
    double d = std::fmod(a - b, 360.0);
    if (d <= -180.0) d += 360.0;
    if (d > 180.0) d -= 360.0;
    return d;
}

// Central angle between two points in radians, haversine form:
//   a = sin^2(dphi/2) + cos(phi1) cos(phi2) sin^2(dlambda/2)
//   c = 2 atan2(sqrt(a), sqrt(1-a))
inline double central_angle_rad(const LatLon& p1, const LatLon& p2) {
    const double phi1 = deg2rad(p1.lat);
    const double phi2 = deg2rad(p2.lat);
    const double dphi = phi2 - phi1;
    const double dlam = deg2rad(p2.lon - p1.lon);
    const double sp = std::sin(dphi / 2.0);
    const double sl = std::sin(dlam / 2.0);
    double a = sp * sp + std::cos(phi1) * std::cos(phi2) * sl * sl;
    if (a < 0.0) a = 0.0;
    if (a > 1.0) a = 1.0;
    return 2.0 * std::atan2(std::sqrt(a), std::sqrt(1.0 - a));
}

// Great-circle separation expressed in degrees of arc.
inline double central_angle_deg(const LatLon& p1, const LatLon& p2) {
    return rad2deg(central_angle_rad(p1, p2));
}

}  // namespace bgc
