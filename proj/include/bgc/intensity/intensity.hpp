#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bgc/geo.hpp"
#include "bgc/gridstore/grid.hpp"
#include "bgc/nn/checkpoint.hpp"
#include "bgc/nn/network.hpp"
#include "bgc/nn/optimizer.hpp"

namespace bgc::intensity {

// Window split into square regions of 2^n_merge * p cells per side.
struct RegionPartition {
    int p = 4;
    int n_merge = 0;
    int h = 0, w = 0;  // window cells
    int rows = 0, cols = 0;
    int region_cells = 0;  // 2^n_merge * p
    double region_extent_deg = 0.0;
};

// Sentinel distance < 0 marks basins with no recorded twin cyclones; they
// carry no region-size constraint.
struct BasinStats {
    std::string basin;
    double min_inter_tc_distance_deg = -1.0;

    bool no_twins() const { return min_inter_tc_distance_deg < 0.0; }
};

const std::array<BasinStats, 6>& basin_table();
const BasinStats& basin_stats(const std::string& basin);  // ConfigError

// rows = h/(2^n_merge*p), cols likewise.  With a basin given, the region
// side must stay strictly below a third of its minimum twin distance.
RegionPartition make_partition(int h, int w, int p, int n_merge,
                               double cell_size_deg,
                               const BasinStats* basin = nullptr);

struct RegionIntensityMap {
    RegionPartition part;
    gridstore::GridSpec spec;  // window geometry the map was computed over
    std::vector<double> values;  // rows*cols, nonnegative

    double at(int r, int c) const {
        return values[static_cast<std::size_t>(r) * part.cols + c];
    }
    double& at(int r, int c) {
        return values[static_cast<std::size_t>(r) * part.cols + c];
    }
    void validate() const;
};

// Per-region max of sqrt(U10^2 + V10^2) over the window.
RegionIntensityMap region_truth(const gridstore::FieldCube& window,
                                const RegionPartition& part);

// Affine map from grid-diagnosed wind to best-track wind.
struct Calibration {
    double a = 1.0;
    double b = 0.0;
    std::size_t n_pairs = 0;

    double apply(double x) const { return a * x + b; }
};

// Least squares over (grid_diagnosed, best_track) pairs.
Calibration calibrate(const std::vector<std::pair<double, double>>& pairs);

inline constexpr const char* kCalibrationHeader = "basin,a,b,n_pairs";
std::string format_calibration_csv(
    const std::vector<std::pair<std::string, Calibration>>& rows);
std::vector<std::pair<std::string, Calibration>> parse_calibration_csv(
    const std::string& text);

// Value of the region containing the point.  Cells are half-open, so a
// point on a region boundary belongs to the larger row/col index; the far
// window edge clamps to the last region.
double coupled_lookup(LatLon center, const RegionIntensityMap& map);

// ---- trainable per-region wind model ----

struct IntensityCase {
    std::string storm_id;
    gridstore::FieldCube window;
};

struct ModelSpec {
    std::vector<gridstore::VariableId> vars;  // feature channel order
    nn::NetConfig net;  // RegionWind head; in_channels = vars.size()
    int p = 4;
    int n_merge = 0;
    std::string basin = "WP";

    void validate() const;
};

struct Model {
    ModelSpec spec;
    std::vector<double> feat_mean;
    std::vector<double> feat_stdev;  // all > 0
    Calibration calib;  // applied to the training labels
    nn::Parameters params;
};

// Standardized feature tensor in `vars` order.
nn::Tensor3 build_input(const Model& m, const gridstore::FieldCube& window);

// Input plus per-region calibrated truth labels (floored at zero).
nn::Sample make_sample(const Model& m, const gridstore::FieldCube& window);

struct TrainReport {
    Model model;
    std::vector<nn::EpochLog> log;
};

TrainReport train_model(const ModelSpec& spec, const Calibration& calib,
                        const std::vector<IntensityCase>& train_cases,
                        const std::vector<IntensityCase>& val_cases,
                        const nn::TrainConfig& cfg);

// Per-region wind prediction over one window; the partition is rebuilt from
// the window shape and checked against the model's basin.
RegionIntensityMap predict(const Model& m, const gridstore::FieldCube& window);

// BGP1 checkpoint carrying the model description in its metadata.
std::string encode_model(const Model& m);
Model decode_model(const std::string& bytes);
void save_model(const std::string& path, const Model& m);
Model load_model(const std::string& path);

}  // namespace bgc::intensity
