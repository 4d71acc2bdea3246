#pragma once

#include <vector>

#include "bgc/geo.hpp"
#include "bgc/gridstore/grid.hpp"

namespace bgc::density {

// Truncated Gaussian kernel: width sigma and truncation radius, both in
// degrees of great-circle (or index-metric) distance.
struct KernelParams {
    double sigma_deg = 0.25;
    double radius_deg = 0.75;

    void validate() const;
};

enum class Metric { GreatCircle, Index };

Metric metric_from_name(const std::string& name);

// Normalized nonnegative mass over a storm window: sum(w) = 1 within 1e-9.
struct DensityField {
    gridstore::GridSpec spec;
    std::vector<double> w;

    double at(int i, int j) const {
        return w[static_cast<std::size_t>(i) * spec.nlon + j];
    }
    double& at(int i, int j) {
        return w[static_cast<std::size_t>(i) * spec.nlon + j];
    }
    void validate() const;
};

// Truncated-Gaussian encoding of a continuous center into cell weights.
DensityField encode_center(LatLon center, const gridstore::GridSpec& spec,
                           const KernelParams& k,
                           Metric metric = Metric::GreatCircle);

DensityField softmax_normalize(const std::vector<double>& logits,
                               const gridstore::GridSpec& spec);

// D_KL(gt || pred) with pred floored at eps = 1e-12 inside the log.
double kl_divergence(const DensityField& gt, const DensityField& pred);

// Mass-weighted mean position; longitude uses the circular mean.
LatLon decode_expectation(const DensityField& field);

// Cell of maximal weight; ties break to the lowest row, then column.
LatLon decode_argmax(const DensityField& field);
gridstore::NodeIndex argmax_cell(const DensityField& field);

}  // namespace bgc::density
