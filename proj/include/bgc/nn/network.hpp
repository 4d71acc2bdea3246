#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bgc/nn/tensor.hpp"

namespace bgc::nn {

enum class Activation { ReLU, Tanh };
enum class Head {
    DensityLogits,  // 1x1 conv -> one logit plane, softmax'd by the caller
    Residual,       // global average pool -> linear -> (dlat, dlon)
    RegionWind,     // per-region mean pool -> shared linear -> ReLU floor
};

const char* activation_name(Activation a);
const char* head_name(Head h);
Activation activation_from_name(const std::string& s);  // ConfigError
Head head_from_name(const std::string& s);              // ConfigError

struct ConvLayer {
    int channels = 0;
    int kernel = 3;
};

struct NetConfig {
    int in_channels = 0;
    std::vector<ConvLayer> hidden = {{16, 3}, {32, 3}, {16, 3}};
    Activation activation = Activation::ReLU;
    Head head = Head::DensityLogits;
    // RegionWind only: square region side, in cells; must divide H and W.
    int region_cells = 0;

    void validate() const;  // ShapeMismatch on any bad field

    struct Block {
        std::string name;
        std::size_t offset = 0;
        std::size_t count = 0;
    };
    // Flat parameter layout: per hidden layer weights then bias, then the
    // head's weights and bias. Offsets index into Parameters::values.
    std::vector<Block> param_blocks() const;
    std::size_t param_count() const;
};

struct Parameters {
    std::vector<double> values;
    std::uint64_t rng_seed = 0;
};

// Uniform(-s, s) with s = sqrt(1/fan_in) per layer, drawn in block order
// from a splitmix64 stream, so (cfg, seed) pins every weight.
Parameters init_params(const NetConfig& cfg, std::uint64_t seed);

struct Output {
    // DensityLogits: h*w logits. RegionWind: rows*cols nonnegative winds.
    std::vector<double> values;
    int h = 0, w = 0;  // shape of `values` (1x2 for Residual)
    double dlat() const { return values[0]; }
    double dlon() const { return values[1]; }
};

Output forward(const Parameters& params, const NetConfig& cfg,
               const Tensor3& input);

struct Target {
    std::vector<double> density;  // DensityLogits: h*w, sums to 1
    double dlat = 0.0, dlon = 0.0;           // Residual
    std::vector<double> region;              // RegionWind: rows*cols
};

struct Sample {
    Tensor3 input;
    Target target;
};

// Per-head losses, averaged over the batch:
//   DensityLogits -> KL(target || softmax(logits))
//   Residual      -> ((dlat-t)^2 + (dlon-t)^2) / 2
//   RegionWind    -> mean over regions of |pred - t|
double loss_only(const Parameters& params, const NetConfig& cfg,
                 const std::vector<Sample>& batch, int jobs = 1);

// Analytic gradient; `grad` is resized to |params|. Per-sample gradients are
// reduced in sample-index order regardless of `jobs`, so serial and parallel
// runs agree bitwise.
double loss_and_grad(const Parameters& params, const NetConfig& cfg,
                     const std::vector<Sample>& batch,
                     std::vector<double>& grad, int jobs = 1);

}  // namespace bgc::nn
