#include "bgc/synth/vortex.hpp"

#include <cmath>
#include <string>

#include "bgc/errors.hpp"

namespace bgc::synth {

using gridstore::FieldCube;
using gridstore::GridSpec;
using gridstore::VariableId;

void VortexParams::validate() const {
    if (!(v_max_ms > 0.0)) throw SpecMismatch("vortex: v_max must be > 0");
    if (!(r_max_km > 0.0)) throw SpecMismatch("vortex: r_max must be > 0");
    if (!(deficit_hpa > 0.0)) throw SpecMismatch("vortex: deficit must be > 0");
    if (!(shape_b >= 1.0 && shape_b <= 2.5))
        throw SpecMismatch("vortex: shape_b must be in [1, 2.5], got " +
                           std::to_string(shape_b));
    if (!(ambient_hpa > deficit_hpa))
        throw SpecMismatch("vortex: ambient pressure must exceed the deficit");
    if (std::abs(center.lat) > 90.0)
        throw SpecMismatch("vortex: center latitude out of range");
}

double holland_wind(const VortexParams& p, double r_km) {
    if (r_km <= 0.0) return 0.0;
    const double x = std::pow(p.r_max_km / r_km, p.shape_b);
    return p.v_max_ms * std::sqrt(x * std::exp(1.0 - x));
}

double holland_msl(const VortexParams& p, double r_km) {
    if (r_km <= 0.0) return p.ambient_hpa - p.deficit_hpa;
    const double x = std::pow(p.r_max_km / r_km, p.shape_b);
    return p.ambient_hpa - p.deficit_hpa * (1.0 - std::exp(-x));
}

namespace {

// Per-cell, per-storm geometry and profile values reused by every variable.
struct StormCell {
    double r_km = 0.0;    // great-circle distance to the storm center
    double tx = 0.0;      // tangential unit vector (east, north), spin-signed
    double ty = 0.0;
    double wind = 0.0;    // holland_wind at r
    double depress = 0.0; // deficit * (1 - exp(-(r_max/r)^b)), hPa
    double core = 0.0;    // exp(-(r / 3 r_max)^2)
    double ring = 0.0;    // exp(-((r - r_max)/r_max)^2)
};

StormCell eval_storm(const VortexParams& p, const LatLon& cell) {
    StormCell s;
    s.r_km = deg2rad(central_angle_deg(p.center, cell)) * kEarthRadiusKm;
    s.wind = holland_wind(p, s.r_km);
    s.depress = p.ambient_hpa - holland_msl(p, s.r_km);
    const double rr = s.r_km / (3.0 * p.r_max_km);
    s.core = std::exp(-rr * rr);
    const double ring = (s.r_km - p.r_max_km) / p.r_max_km;
    s.ring = std::exp(-ring * ring);

    // Local tangent-plane offsets for the spin direction.
    const double dy = (cell.lat - p.center.lat) * kKmPerDegree;
    const double dx = lon_diff(cell.lon, p.center.lon) * kKmPerDegree *
                      std::cos(deg2rad(0.5 * (cell.lat + p.center.lat)));
    const double rt = std::hypot(dx, dy);
    if (rt > 1e-9) {
        // Counterclockwise north of the equator, clockwise south.
        const double spin = p.center.lat >= 0.0 ? 1.0 : -1.0;
        s.tx = spin * (-dy / rt);
        s.ty = spin * (dx / rt);
    }
    return s;
}

}  // namespace

FieldCube render_vortices(const std::vector<VortexParams>& storms,
                          const GridSpec& spec, std::int64_t timestamp,
                          const std::vector<VariableId>& vars) {
    if (storms.empty()) throw EmptySet("render: no storms to draw");
    for (const auto& s : storms) s.validate();
    spec.validate();

    std::vector<VariableId> want = vars;
    if (want.empty())
        want.assign(gridstore::variable_catalog().begin(),
                    gridstore::variable_catalog().end());
    FieldCube cube(spec, want, timestamp);

    const double ambient = storms[0].ambient_hpa;
    const double bg_u = storms[0].bg_u_ms;
    const double bg_v = storms[0].bg_v_ms;

    std::vector<StormCell> sc(storms.size());
    for (int i = 0; i < spec.nlat; ++i) {
        for (int j = 0; j < spec.nlon; ++j) {
            const LatLon cell{spec.lat_at(i), spec.lon_at(j)};
            double u = 0.0, v = 0.0, depress = 0.0, core = 0.0, ring = 0.0;
            for (std::size_t k = 0; k < storms.size(); ++k) {
                sc[k] = eval_storm(storms[k], cell);
                u += sc[k].wind * sc[k].tx;
                v += sc[k].wind * sc[k].ty;
                depress += sc[k].depress;
                core += sc[k].core;
                ring += sc[k].ring;
            }
            const double msl = ambient - depress;

            for (std::size_t vi = 0; vi < want.size(); ++vi) {
                double val = 0.0;
                switch (want[vi]) {
                    case VariableId::MSL: val = msl; break;
                    case VariableId::SP: val = msl - 0.3; break;
                    case VariableId::U10: val = bg_u + u; break;
                    case VariableId::V10: val = bg_v + v; break;
                    case VariableId::U850: val = bg_u + 0.80 * u; break;
                    case VariableId::V850: val = bg_v + 0.80 * v; break;
                    case VariableId::U700: val = bg_u + 0.55 * u; break;
                    case VariableId::V700: val = bg_v + 0.55 * v; break;
                    case VariableId::U500: val = bg_u + 0.30 * u; break;
                    case VariableId::V500: val = bg_v + 0.30 * v; break;
                    case VariableId::T2M: val = 300.0 + 1.5 * core; break;
                    case VariableId::D2M:
                        val = 298.0 + 1.5 * core + 0.9 * core;
                        break;
                    case VariableId::T850: val = 293.0 + 4.0 * core; break;
                    case VariableId::T700: val = 283.0 + 5.0 * core; break;
                    case VariableId::T500: val = 267.0 + 6.0 * core; break;
                    case VariableId::Q850: val = 0.012 + 0.004 * core; break;
                    case VariableId::Q700: val = 0.007 + 0.003 * core; break;
                    case VariableId::Q500: val = 0.002 + 0.001 * core; break;
                    case VariableId::Z850: val = 1460.0 - 8.0 * depress; break;
                    case VariableId::Z700: val = 3010.0 - 6.5 * depress; break;
                    case VariableId::Z500: val = 5870.0 - 5.0 * depress; break;
                    case VariableId::W850: val = 0.3 * ring; break;
                    case VariableId::W700: val = 0.5 * ring; break;
                    case VariableId::W500: val = 0.4 * ring; break;
                    case VariableId::TCW: val = 50.0 + 15.0 * core; break;
                    case VariableId::TCWV: val = 48.0 + 14.0 * core; break;
                }
                cube.at(vi, i, j) = static_cast<float>(val);
            }
        }
    }
    return cube;
}

FieldCube downsample(const FieldCube& fine, int factor) {
    fine.validate();
    if (factor < 1)
        throw IndivisibleFactor("downsample: factor must be >= 1, got " +
                                std::to_string(factor));
    if (fine.spec.nlat % factor != 0 || fine.spec.nlon % factor != 0)
        throw IndivisibleFactor(
            "downsample: factor " + std::to_string(factor) +
            " does not divide " + std::to_string(fine.spec.nlat) + "x" +
            std::to_string(fine.spec.nlon));

    GridSpec coarse = fine.spec;
    coarse.nlat = fine.spec.nlat / factor;
    coarse.nlon = fine.spec.nlon / factor;
    coarse.dlat = fine.spec.dlat * factor;
    coarse.dlon = fine.spec.dlon * factor;
    const double half = 0.5 * (factor - 1);
    coarse.lat0 = fine.spec.lat_at(half);
    coarse.lon0 = fine.spec.lon_at(half);

    FieldCube out(coarse, fine.vars, fine.timestamp);
    const double inv = 1.0 / (static_cast<double>(factor) * factor);
    for (std::size_t vi = 0; vi < fine.vars.size(); ++vi) {
        for (int i = 0; i < coarse.nlat; ++i) {
            for (int j = 0; j < coarse.nlon; ++j) {
                double sum = 0.0;
                for (int di = 0; di < factor; ++di)
                    for (int dj = 0; dj < factor; ++dj)
                        sum += fine.at(vi, i * factor + di, j * factor + dj);
                out.at(vi, i, j) = static_cast<float>(sum * inv);
            }
        }
    }
    return out;
}

}  // namespace bgc::synth
