#include "bgc/nn/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "bgc/errors.hpp"
#include "bgc/rng.hpp"

namespace bgc::nn {

const char* opt_name(OptKind k) { return k == OptKind::SGD ? "sgd" : "adam"; }

OptKind opt_from_name(const std::string& s) {
    if (s == "sgd") return OptKind::SGD;
    if (s == "adam") return OptKind::Adam;
    throw ConfigError("unknown optimizer '" + s + "'");
}

void TrainConfig::validate() const {
    if (!(lr >= 0.0) || !std::isfinite(lr))
        throw ConfigError("lr must be finite and >= 0");
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
    if (batch < 0) throw ConfigError("batch must be >= 0 (0 = full batch)");
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
}

namespace {

struct AdamState {
    std::vector<double> m, v;
    long t = 0;
};

void apply_step(std::vector<double>& p, const std::vector<double>& g,
                const TrainConfig& cfg, AdamState& adam) {
    if (cfg.optimizer == OptKind::SGD) {
        for (std::size_t k = 0; k < p.size(); ++k) p[k] -= cfg.lr * g[k];
        return;
    }
    adam.t += 1;
    const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(adam.t));
    const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(adam.t));
    for (std::size_t k = 0; k < p.size(); ++k) {
        adam.m[k] = kAdamBeta1 * adam.m[k] + (1.0 - kAdamBeta1) * g[k];
        adam.v[k] = kAdamBeta2 * adam.v[k] + (1.0 - kAdamBeta2) * g[k] * g[k];
        const double mh = adam.m[k] / bc1;
        const double vh = adam.v[k] / bc2;
        p[k] -= cfg.lr * mh / (std::sqrt(vh) + kAdamEps);
    }
}

}  // namespace

TrainResult train(const NetConfig& net, const std::vector<Sample>& train_set,
                  const std::vector<Sample>& val_set, const TrainConfig& cfg) {
    cfg.validate();
    net.validate();
    if (train_set.empty()) throw EmptySet("training set is empty");

    // Inputs are checked finite on the first pass, so a non-finite activation
    // later in the run means the parameters blew up.
    auto guarded = [](auto&& fn, int epoch) -> double {
        try {
            return fn();
        } catch (const NonFiniteActivation& e) {
            throw DivergedTraining("training diverged at epoch " +
                                   std::to_string(epoch) + ": " + e.what());
        }
    };

    Parameters params = init_params(net, cfg.seed);
    AdamState adam;
    adam.m.assign(params.values.size(), 0.0);
    adam.v.assign(params.values.size(), 0.0);

    // Separate stream from init_params so adding layers never reorders the
    // shuffle sequence.
    Rng shuffler = Rng(cfg.seed).fork(0x53484653ULL);

    TrainResult result;
    result.params = params;
    double best_val = std::numeric_limits<double>::infinity();

    const std::size_t n = train_set.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> grad;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        if (cfg.batch == 0 || static_cast<std::size_t>(cfg.batch) >= n) {
            const double step_loss = guarded(
                [&] { return loss_and_grad(params, net, train_set, grad,
                                           cfg.jobs); },
                epoch);
            if (!std::isfinite(step_loss))
                throw DivergedTraining("non-finite loss at epoch " +
                                       std::to_string(epoch));
            apply_step(params.values, grad, cfg, adam);
        } else {
            // Fisher-Yates reshuffle per epoch, then fixed-size slices.
            for (std::size_t i = n - 1; i > 0; --i) {
                const std::size_t j = static_cast<std::size_t>(
                    shuffler.uniform_int(0, static_cast<int>(i)));
                std::swap(order[i], order[j]);
            }
            for (std::size_t lo = 0; lo < n; lo += cfg.batch) {
                const std::size_t hi = std::min(n, lo + cfg.batch);
                std::vector<Sample> mb;
                mb.reserve(hi - lo);
                for (std::size_t i = lo; i < hi; ++i)
                    mb.push_back(train_set[order[i]]);
                const double step_loss = guarded(
                    [&] { return loss_and_grad(params, net, mb, grad,
                                               cfg.jobs); },
                    epoch);
                if (!std::isfinite(step_loss))
                    throw DivergedTraining("non-finite loss at epoch " +
                                           std::to_string(epoch));
                apply_step(params.values, grad, cfg, adam);
            }
        }

        EpochLog log;
        log.epoch = epoch;
        log.train_loss = guarded(
            [&] { return loss_only(params, net, train_set, cfg.jobs); }, epoch);
        log.val_loss =
            val_set.empty()
                ? log.train_loss
                : guarded([&] { return loss_only(params, net, val_set,
                                                 cfg.jobs); },
                          epoch);
        if (!std::isfinite(log.train_loss) || !std::isfinite(log.val_loss))
            throw DivergedTraining("non-finite loss at epoch " +
                                   std::to_string(epoch));
        if (log.val_loss < best_val) {
            best_val = log.val_loss;
            result.params = params;
            log.is_best = true;
        }
        result.log.push_back(log);
    }
    return result;
}

}  // namespace bgc::nn
