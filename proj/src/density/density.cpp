#include "bgc/density/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bgc/errors.hpp"

namespace bgc::density {

namespace {
constexpr double kEps = 1e-12;
}

void KernelParams::validate() const {
    if (!(sigma_deg > 0.0))
        throw SpecMismatch("kernel sigma must be positive, got " +
                           std::to_string(sigma_deg));
    if (radius_deg < sigma_deg)
        throw SpecMismatch("kernel radius " + std::to_string(radius_deg) +
                           " must be at least sigma " +
                           std::to_string(sigma_deg));
}

Metric metric_from_name(const std::string& name) {
    if (name == "greatcircle") return Metric::GreatCircle;
    if (name == "index") return Metric::Index;
    throw ConfigError("density.metric must be 'greatcircle' or 'index', got '" +
                      name + "'");
}

void DensityField::validate() const {
    spec.validate();
    const std::size_t want =
        static_cast<std::size_t>(spec.nlat) * spec.nlon;
    if (w.size() != want)
        throw DimMismatch("density field size " + std::to_string(w.size()) +
                          " does not match nlat*nlon = " +
                          std::to_string(want));
    double sum = 0.0;
    for (double x : w) {
        if (!std::isfinite(x)) throw NonFiniteInput("non-finite density cell");
        if (x < 0.0) throw NonFiniteInput("negative density cell");
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw SpecMismatch("density mass " + std::to_string(sum) +
                           " is not 1 within 1e-9");
}

DensityField encode_center(LatLon center, const gridstore::GridSpec& spec,
                           const KernelParams& k, Metric metric) {
    k.validate();
    spec.validate();
    gridstore::FracIndex f;
    try {
        f = gridstore::latlon_to_fractional_index(center, spec);
    } catch (const OutOfBounds& e) {
        throw OutOfWindow(std::string("encode center outside window: ") +
                          e.what());
    }

    DensityField out;
    out.spec = spec;
    out.w.assign(static_cast<std::size_t>(spec.nlat) * spec.nlon, 0.0);

    const double inv2s2 = 1.0 / (2.0 * k.sigma_deg * k.sigma_deg);
    double sum = 0.0;
    for (int i = 0; i < spec.nlat; ++i) {
        for (int j = 0; j < spec.nlon; ++j) {
            double d;
            if (metric == Metric::GreatCircle) {
                const LatLon cell{spec.lat_at(i), spec.lon_at(j)};
                d = central_angle_deg(cell, center);
            } else {
                const double di = (f.fi - i) * spec.dlat;
                const double dj = (f.fj - j) * spec.dlon;
                d = std::hypot(di, dj);
            }
            if (d <= k.radius_deg) {
                const double g = std::exp(-d * d * inv2s2);
                out.at(i, j) = g;
                sum += g;
            }
        }
    }
    if (sum <= 0.0)
        throw EmptySupport("no window cell within truncation radius " +
                           std::to_string(k.radius_deg) + " of the center");
    for (double& x : out.w) x /= sum;
    return out;
}

DensityField softmax_normalize(const std::vector<double>& logits,
                               const gridstore::GridSpec& spec) {
    spec.validate();
    const std::size_t want =
        static_cast<std::size_t>(spec.nlat) * spec.nlon;
    if (logits.size() != want)
        throw DimMismatch("logits size " + std::to_string(logits.size()) +
                          " does not match nlat*nlon = " +
                          std::to_string(want));
    double mx = -std::numeric_limits<double>::infinity();
    for (double z : logits) {
        if (!std::isfinite(z)) throw NonFiniteInput("non-finite logit");
        mx = std::max(mx, z);
    }
    DensityField out;
    out.spec = spec;
    out.w.resize(logits.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        out.w[k] = std::exp(logits[k] - mx);
        sum += out.w[k];
    }
    for (double& x : out.w) x /= sum;
    return out;
}

double kl_divergence(const DensityField& gt, const DensityField& pred) {
    if (gt.spec != pred.spec)
        throw SpecMismatch("density fields live on different grids");
    if (gt.w.size() != pred.w.size())
        throw SpecMismatch("density fields have different sizes");
    double sum = 0.0;
    for (std::size_t k = 0; k < gt.w.size(); ++k) {
        const double g = gt.w[k];
        if (g <= 0.0) continue;
        const double p = std::max(pred.w[k], kEps);
        sum += g * std::log(g / p);
    }
    return sum > 0.0 ? sum : 0.0;
}

LatLon decode_expectation(const DensityField& field) {
    const gridstore::GridSpec& g = field.spec;
    double lat = 0.0, cx = 0.0, cy = 0.0;
    for (int i = 0; i < g.nlat; ++i) {
        double row = 0.0;
        for (int j = 0; j < g.nlon; ++j) {
            const double w = field.at(i, j);
            row += w;
            const double lon = deg2rad(g.lon_at(j));
            cx += w * std::cos(lon);
            cy += w * std::sin(lon);
        }
        lat += row * g.lat_at(i);
    }
    return {lat, wrap_lon(rad2deg(std::atan2(cy, cx)))};
}

gridstore::NodeIndex argmax_cell(const DensityField& field) {
    const gridstore::GridSpec& g = field.spec;
    gridstore::NodeIndex best{0, 0};
    double bw = -1.0;
    for (int i = 0; i < g.nlat; ++i)
        for (int j = 0; j < g.nlon; ++j)
            if (field.at(i, j) > bw) {
                bw = field.at(i, j);
                best = {i, j};
            }
    return best;
}

LatLon decode_argmax(const DensityField& field) {
    const auto c = argmax_cell(field);
    return {field.spec.lat_at(c.i), field.spec.lon_at(c.j)};
}

}  // namespace bgc::density
