#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bgc/density/density.hpp"
#include "bgc/geo.hpp"
#include "bgc/gridstore/grid.hpp"
#include "bgc/nn/checkpoint.hpp"
#include "bgc/nn/network.hpp"
#include "bgc/nn/optimizer.hpp"

namespace bgc::correction {

// Per-channel standardization, fitted on the training split only.
struct FeatureScaler {
    std::vector<double> mean;
    std::vector<double> stdev;  // all > 0

    void validate(std::size_t nvars) const;
};

// One labeled case: an atmospheric window around a first-guess fix.
struct TrackCase {
    std::string storm_id;
    gridstore::FieldCube window;
    LatLon prior;  // continuous first guess (tracker output)
    LatLon truth;  // labeled center
};

struct ModelSpec {
    std::vector<gridstore::VariableId> vars;  // feature channel order
    nn::NetConfig net;  // in_channels must equal vars.size() + 1
    density::KernelParams kernel;  // prior channel and target encoding
    density::Metric metric = density::Metric::GreatCircle;
    int window_half = 16;  // refine_fix crops (2*half+1)^2 windows

    void validate() const;
};

struct Model {
    ModelSpec spec;
    FeatureScaler scaler;
    nn::Parameters params;
};

// Population mean/stdev over every cell of every training window, one pair
// per feature variable.  Throws EmptySet on no cases, DegenerateFit when a
// variable is constant across the split.
FeatureScaler fit_scaler(const std::vector<gridstore::VariableId>& vars,
                         const std::vector<TrackCase>& train_cases);

// Standardized feature channels in `vars` order, plus the prior encoded as
// a raw probability channel (sums to 1).
nn::Tensor3 build_input(const ModelSpec& spec, const FeatureScaler& scaler,
                        const gridstore::FieldCube& window, LatLon prior);

// Input plus the head target: the truth center encoded over the window grid
// (density head) or the prior->truth offset in degrees (residual head).
nn::Sample make_sample(const ModelSpec& spec, const FeatureScaler& scaler,
                       const TrackCase& c);

// Deterministic whole-storm holdout: no storm id appears on both sides.
struct Split {
    std::vector<TrackCase> train;
    std::vector<TrackCase> val;
};
Split split_by_storm(const std::vector<TrackCase>& cases, double val_fraction,
                     std::uint64_t seed);

struct TrainReport {
    Model model;
    std::vector<nn::EpochLog> log;
};

// Fits the scaler on the training cases, then trains the network; returns
// the best-validation-loss snapshot.
TrainReport train_model(const ModelSpec& spec,
                        const std::vector<TrackCase>& train_cases,
                        const std::vector<TrackCase>& val_cases,
                        const nn::TrainConfig& cfg);

// Refine a first-guess fix against a window already in hand.
LatLon refine_window(const Model& m, const gridstore::FieldCube& window,
                     LatLon prior);

// Crop a (2*window_half+1)^2 window around the prior, then refine.
LatLon refine_fix(const Model& m, const gridstore::FieldCube& cube,
                  LatLon prior);

// BGP1 checkpoint whose metadata carries the full model description.
std::string encode_model(const Model& m);
Model decode_model(const std::string& bytes);
void save_model(const std::string& path, const Model& m);
Model load_model(const std::string& path);

}  // namespace bgc::correction
