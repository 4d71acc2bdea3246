#pragma once

#include <cstdint>
#include <vector>

#include "bgc/nn/network.hpp"

namespace bgc::nn {

enum class OptKind { SGD, Adam };

const char* opt_name(OptKind k);
OptKind opt_from_name(const std::string& s);  // ConfigError

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

struct TrainConfig {
    OptKind optimizer = OptKind::Adam;
    double lr = 1e-3;  // >= 0; zero is a documented no-op
    int epochs = 100;
    int batch = 0;  // 0 = full batch, otherwise minibatches reshuffled per epoch
    std::uint64_t seed = 0;
    int jobs = 1;

    void validate() const;  // ConfigError
};

struct EpochLog {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
    bool is_best = false;
};

struct TrainResult {
    Parameters params;  // snapshot with the best validation loss
    std::vector<EpochLog> log;
};

// Initializes from (cfg.seed, net), then runs cfg.epochs of SGD/Adam.
// Validation defaults to the training set when val_set is empty. Bitwise
// reproducible from the seed; `jobs` only distributes batch items.
TrainResult train(const NetConfig& net, const std::vector<Sample>& train_set,
                  const std::vector<Sample>& val_set, const TrainConfig& cfg);

}  // namespace bgc::nn
