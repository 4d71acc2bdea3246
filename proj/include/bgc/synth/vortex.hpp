#pragma once

#include <vector>

#include "bgc/geo.hpp"
#include "bgc/gridstore/grid.hpp"

namespace bgc::synth {

// One axisymmetric Holland-style vortex plus a uniform background flow.
struct VortexParams {
    LatLon center;
    double v_max_ms = 35.0;       // peak gradient wind
    double r_max_km = 40.0;       // radius of maximum wind
    double shape_b = 1.8;         // profile exponent, [1, 2.5]
    double ambient_hpa = 1010.0;  // environmental sea-level pressure
    double deficit_hpa = 30.0;    // central pressure drop below ambient
    double bg_u_ms = 0.0;         // background (steering) flow
    double bg_v_ms = 0.0;

    void validate() const;  // SpecMismatch on violated bounds
};

// Tangential wind speed at great-circle radius r_km:
//   v(r) = v_max * sqrt(x * exp(1 - x)),  x = (r_max / r)^b
// peaking at exactly v_max at r = r_max and vanishing at r -> 0 and r -> inf.
double holland_wind(const VortexParams& p, double r_km);

// Sea-level pressure at radius r_km:
//   MSL(r) = ambient - deficit * (1 - exp(-(r_max / r)^b))
// so the minimum (ambient - deficit) sits at the storm center and the field
// relaxes to ambient far away.
double holland_msl(const VortexParams& p, double r_km);

// Every catalog variable rendered from the storm set. Multi-storm fields
// superpose: pressure deficits add, vortex winds add, and the background
// flow is taken from the first storm (twins are scripted with a shared
// environment). With D = sum of per-storm deficit*(1 - exp(-(r_max/r)^b)),
// WC = sum of warm-core bumps exp(-(r / 3 r_max)^2), and RG = sum of eyewall
// rings exp(-((r - r_max)/r_max)^2):
//   MSL  = ambient - D                SP   = MSL - 0.3
//   U10/V10   = bg + tangential vortex winds (counterclockwise north of the
//               equator, clockwise south)
//   U/V at 850/700/500 = bg + (0.8, 0.55, 0.30) * vortex winds
//   T2M  = 300 + 1.5*WC               D2M  = T2M - 2 + 0.9*WC
//   T at 850/700/500 = (293, 283, 267) + (4, 5, 6)*WC
//   Q at 850/700/500 = (0.012, 0.007, 0.002) + (0.004, 0.003, 0.001)*WC
//   Z at 850/700/500 = (1460, 3010, 5870) - (8.0, 6.5, 5.0)*D
//   W at 850/700/500 = (0.3, 0.5, 0.4)*RG
//   TCW  = 50 + 15*WC                 TCWV = 48 + 14*WC
gridstore::FieldCube render_vortices(
    const std::vector<VortexParams>& storms, const gridstore::GridSpec& spec,
    std::int64_t timestamp,
    const std::vector<gridstore::VariableId>& vars = {});  // {} = full catalog

// Area-mean pooling of factor x factor cell blocks, every variable.
// The coarse grid keeps the fine cell-center lattice's footprint: the new
// origin is the mean of the first block's centers and spacing scales by
// `factor`. Throws IndivisibleFactor unless factor >= 1 divides both dims.
gridstore::FieldCube downsample(const gridstore::FieldCube& fine, int factor);

}  // namespace bgc::synth
