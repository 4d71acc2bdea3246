#include "bgc/nn/network.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <thread>

#include "bgc/errors.hpp"
#include "bgc/nn/layers.hpp"
#include "bgc/rng.hpp"

namespace bgc::nn {

namespace {

std::string fmt(const char* f, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

void check_finite(const Tensor3& t, const char* where) {
    for (double x : t.v)
        if (!std::isfinite(x))
            throw NonFiniteActivation(fmt("non-finite value in %s", where));
}

}  // namespace

const char* activation_name(Activation a) {
    return a == Activation::ReLU ? "relu" : "tanh";
}

const char* head_name(Head h) {
    switch (h) {
        case Head::DensityLogits: return "density_logits";
        case Head::Residual: return "residual";
        case Head::RegionWind: return "region_wind";
    }
    return "?";
}

Activation activation_from_name(const std::string& s) {
    if (s == "relu") return Activation::ReLU;
    if (s == "tanh") return Activation::Tanh;
    throw ConfigError("unknown activation '" + s + "'");
}

Head head_from_name(const std::string& s) {
    if (s == "density_logits") return Head::DensityLogits;
    if (s == "residual") return Head::Residual;
    if (s == "region_wind") return Head::RegionWind;
    throw ConfigError("unknown head '" + s + "'");
}

void NetConfig::validate() const {
    if (in_channels < 1)
        throw ShapeMismatch(fmt("in_channels must be >= 1, got %d", in_channels));
    if (hidden.empty()) throw ShapeMismatch("network needs at least one layer");
    for (std::size_t i = 0; i < hidden.size(); ++i) {
        const auto& l = hidden[i];
        if (l.channels < 1)
            throw ShapeMismatch(fmt("layer %zu: channels must be >= 1", i));
        if (l.kernel < 1 || l.kernel % 2 == 0)
            throw ShapeMismatch(
                fmt("layer %zu: kernel must be odd and >= 1, got %d", i,
                    l.kernel));
    }
    if (head == Head::RegionWind && region_cells < 1)
        throw ShapeMismatch("region_wind head needs region_cells >= 1");
}

std::vector<NetConfig::Block> NetConfig::param_blocks() const {
    validate();
    std::vector<Block> blocks;
    std::size_t off = 0;
    int c_prev = in_channels;
    auto push = [&](std::string name, std::size_t count) {
        blocks.push_back({std::move(name), off, count});
        off += count;
    };
    for (std::size_t i = 0; i < hidden.size(); ++i) {
        const auto& l = hidden[i];
        push(fmt("conv%zu.w", i),
             static_cast<std::size_t>(l.channels) * c_prev * l.kernel * l.kernel);
        push(fmt("conv%zu.b", i), static_cast<std::size_t>(l.channels));
        c_prev = l.channels;
    }
    switch (head) {
        case Head::DensityLogits:
            push("head.w", static_cast<std::size_t>(c_prev));
            push("head.b", 1);
            break;
        case Head::Residual:
            push("head.w", static_cast<std::size_t>(2) * c_prev);
            push("head.b", 2);
            break;
        case Head::RegionWind:
            push("head.w", static_cast<std::size_t>(c_prev));
            push("head.b", 1);
            break;
    }
    return blocks;
}

std::size_t NetConfig::param_count() const {
    const auto blocks = param_blocks();
    return blocks.back().offset + blocks.back().count;
}

Parameters init_params(const NetConfig& cfg, std::uint64_t seed) {
    const auto blocks = cfg.param_blocks();
    Parameters p;
    p.rng_seed = seed;
    p.values.resize(cfg.param_count());
    Rng rng(seed);
    int c_prev = cfg.in_channels;
    // Weights and bias of a layer share that layer's fan-in scale.
    for (std::size_t i = 0; i < cfg.hidden.size(); ++i) {
        const auto& l = cfg.hidden[i];
        const double s =
            std::sqrt(1.0 / (static_cast<double>(c_prev) * l.kernel * l.kernel));
        const auto& w = blocks[2 * i];
        const auto& b = blocks[2 * i + 1];
        for (std::size_t k = 0; k < w.count; ++k)
            p.values[w.offset + k] = rng.uniform(-s, s);
        for (std::size_t k = 0; k < b.count; ++k)
            p.values[b.offset + k] = rng.uniform(-s, s);
        c_prev = l.channels;
    }
    const double s = std::sqrt(1.0 / c_prev);
    const auto& hw = blocks[blocks.size() - 2];
    const auto& hb = blocks[blocks.size() - 1];
    for (std::size_t k = 0; k < hw.count; ++k)
        p.values[hw.offset + k] = rng.uniform(-s, s);
    for (std::size_t k = 0; k < hb.count; ++k)
        p.values[hb.offset + k] = rng.uniform(-s, s);
    return p;
}

namespace {

struct Trace {
    std::vector<Tensor3> pre;   // conv outputs, one per hidden layer
    std::vector<Tensor3> act;   // act[0] = input, act[i+1] = activated pre[i]
    // Head intermediates needed by the backward pass.
    std::vector<double> gap;    // Residual: per-channel global means
    std::vector<double> pool;   // RegionWind: [region][channel] means
    std::vector<double> z;      // RegionWind: pre-ReLU region outputs
};

Output run_forward(const Parameters& params, const NetConfig& cfg,
                   const Tensor3& input, Trace* trace) {
    cfg.validate();
    if (params.values.size() != cfg.param_count())
        throw ShapeMismatch(fmt("parameter vector has %zu values, config needs %zu",
                                params.values.size(), cfg.param_count()));
    if (input.c != cfg.in_channels)
        throw ShapeMismatch(fmt("input has %d channels, config expects %d",
                                input.c, cfg.in_channels));
    if (input.h < 1 || input.w < 1) throw ShapeMismatch("empty input window");
    check_finite(input, "input");

    const auto blocks = cfg.param_blocks();
    const double* base = params.values.data();

    Trace local;
    Trace& tr = trace ? *trace : local;
    tr.act.clear();
    tr.pre.clear();
    tr.act.push_back(input);

    for (std::size_t i = 0; i < cfg.hidden.size(); ++i) {
        const auto& l = cfg.hidden[i];
        Tensor3 pre;
        conv_forward(tr.act.back(), base + blocks[2 * i].offset,
                     base + blocks[2 * i + 1].offset, l.channels, l.kernel, pre);
        check_finite(pre, "conv output");
        Tensor3 act;
        if (cfg.activation == Activation::ReLU)
            relu_forward(pre, act);
        else
            tanh_forward(pre, act);
        tr.pre.push_back(std::move(pre));
        tr.act.push_back(std::move(act));
    }

    const Tensor3& feat = tr.act.back();
    const int C = feat.c, H = feat.h, W = feat.w;
    const double* hw = base + blocks[blocks.size() - 2].offset;
    const double* hb = base + blocks[blocks.size() - 1].offset;

    Output out;
    switch (cfg.head) {
        case Head::DensityLogits: {
            out.h = H;
            out.w = W;
            out.values.assign(static_cast<std::size_t>(H) * W, hb[0]);
            for (int c = 0; c < C; ++c) {
                const double* fp = feat.plane(c);
                const double wv = hw[c];
                for (std::size_t t = 0; t < out.values.size(); ++t)
                    out.values[t] += wv * fp[t];
            }
            break;
        }
        case Head::Residual: {
            tr.gap.assign(C, 0.0);
            const double inv = 1.0 / (static_cast<double>(H) * W);
            for (int c = 0; c < C; ++c) {
                const double* fp = feat.plane(c);
                double s = 0.0;
                for (std::size_t t = 0; t < static_cast<std::size_t>(H) * W; ++t)
                    s += fp[t];
                tr.gap[c] = s * inv;
            }
            out.h = 1;
            out.w = 2;
            out.values.assign(2, 0.0);
            for (int r = 0; r < 2; ++r) {
                double s = hb[r];
                for (int c = 0; c < C; ++c) s += hw[r * C + c] * tr.gap[c];
                out.values[r] = s;
            }
            break;
        }
        case Head::RegionWind: {
            const int rc = cfg.region_cells;
            if (H % rc != 0 || W % rc != 0)
                throw ShapeMismatch(
                    fmt("window %dx%d not divisible into %d-cell regions", H, W,
                        rc));
            const int rows = H / rc, cols = W / rc;
            const double inv = 1.0 / (static_cast<double>(rc) * rc);
            tr.pool.assign(static_cast<std::size_t>(rows) * cols * C, 0.0);
            tr.z.assign(static_cast<std::size_t>(rows) * cols, 0.0);
            out.h = rows;
            out.w = cols;
            out.values.assign(tr.z.size(), 0.0);
            for (int r = 0; r < rows; ++r) {
                for (int cc = 0; cc < cols; ++cc) {
                    const std::size_t ri = static_cast<std::size_t>(r) * cols + cc;
                    double zval = hb[0];
                    for (int c = 0; c < C; ++c) {
                        const double* fp = feat.plane(c);
                        double s = 0.0;
                        for (int y = r * rc; y < (r + 1) * rc; ++y)
                            for (int x = cc * rc; x < (cc + 1) * rc; ++x)
                                s += fp[static_cast<std::size_t>(y) * W + x];
                        const double m = s * inv;
                        tr.pool[ri * C + c] = m;
                        zval += hw[c] * m;
                    }
                    tr.z[ri] = zval;
                    out.values[ri] = zval > 0.0 ? zval : 0.0;
                }
            }
            break;
        }
    }
    for (double x : out.values)
        if (!std::isfinite(x))
            throw NonFiniteActivation("non-finite value in head output");
    return out;
}

double sample_loss(const NetConfig& cfg, const Output& out, const Target& tgt,
                   std::vector<double>* d_out) {
    const std::size_t n = out.values.size();
    switch (cfg.head) {
        case Head::DensityLogits: {
            if (tgt.density.size() != n)
                throw ShapeMismatch(fmt("target density has %zu cells, logits %zu",
                                        tgt.density.size(), n));
            // Stable log-softmax.
            double mx = out.values[0];
            for (double z : out.values) mx = std::max(mx, z);
            double se = 0.0;
            for (double z : out.values) se += std::exp(z - mx);
            const double lse = mx + std::log(se);
            double loss = 0.0;
            for (std::size_t t = 0; t < n; ++t) {
                const double g = tgt.density[t];
                if (g > 0.0) loss += g * (std::log(g) - (out.values[t] - lse));
            }
            if (d_out) {
                d_out->resize(n);
                for (std::size_t t = 0; t < n; ++t)
                    (*d_out)[t] = std::exp(out.values[t] - lse) - tgt.density[t];
            }
            return loss;
        }
        case Head::Residual: {
            const double da = out.values[0] - tgt.dlat;
            const double db = out.values[1] - tgt.dlon;
            if (d_out) *d_out = {da, db};
            return 0.5 * (da * da + db * db);
        }
        case Head::RegionWind: {
            if (tgt.region.size() != n)
                throw ShapeMismatch(fmt("target has %zu regions, head emits %zu",
                                        tgt.region.size(), n));
            const double inv = 1.0 / static_cast<double>(n);
            double loss = 0.0;
            if (d_out) d_out->assign(n, 0.0);
            for (std::size_t t = 0; t < n; ++t) {
                const double d = out.values[t] - tgt.region[t];
                loss += std::abs(d) * inv;
                if (d_out && d != 0.0) (*d_out)[t] = (d > 0.0 ? inv : -inv);
            }
            return loss;
        }
    }
    return 0.0;
}

// Gradient of one sample's loss with respect to every parameter, accumulated
// into `grad` (same layout as Parameters::values).
double sample_loss_and_grad(const Parameters& params, const NetConfig& cfg,
                            const Sample& smp, std::vector<double>& grad) {
    Trace tr;
    const Output out = run_forward(params, cfg, smp.input, &tr);
    std::vector<double> d_out;
    const double loss = sample_loss(cfg, out, smp.target, &d_out);

    const auto blocks = cfg.param_blocks();
    const double* base = params.values.data();
    const Tensor3& feat = tr.act.back();
    const int C = feat.c, H = feat.h, W = feat.w;
    const double* hw = base + blocks[blocks.size() - 2].offset;
    double* d_hw = grad.data() + blocks[blocks.size() - 2].offset;
    double* d_hb = grad.data() + blocks[blocks.size() - 1].offset;

    Tensor3 d_feat;
    switch (cfg.head) {
        case Head::DensityLogits: {
            // The head is a 1x1 conv to one channel; reuse the conv backward.
            Tensor3 dz(1, H, W);
            dz.v = d_out;
            conv_backward(feat, hw, 1, 1, dz, d_feat, d_hw, d_hb);
            break;
        }
        case Head::Residual: {
            d_feat = Tensor3(C, H, W);
            const double inv = 1.0 / (static_cast<double>(H) * W);
            for (int r = 0; r < 2; ++r) {
                d_hb[r] += d_out[r];
                for (int c = 0; c < C; ++c) {
                    d_hw[r * C + c] += d_out[r] * tr.gap[c];
                }
            }
            for (int c = 0; c < C; ++c) {
                const double dg =
                    (d_out[0] * hw[c] + d_out[1] * hw[C + c]) * inv;
                double* dp = d_feat.plane(c);
                for (std::size_t t = 0; t < static_cast<std::size_t>(H) * W; ++t)
                    dp[t] += dg;
            }
            break;
        }
        case Head::RegionWind: {
            d_feat = Tensor3(C, H, W);
            const int rc = cfg.region_cells;
            const int rows = H / rc, cols = W / rc;
            const double inv = 1.0 / (static_cast<double>(rc) * rc);
            for (int r = 0; r < rows; ++r) {
                for (int cc = 0; cc < cols; ++cc) {
                    const std::size_t ri = static_cast<std::size_t>(r) * cols + cc;
                    // ReLU floor: no gradient where the head clipped to 0.
                    const double dz = tr.z[ri] > 0.0 ? d_out[ri] : 0.0;
                    if (dz == 0.0) continue;
                    d_hb[0] += dz;
                    for (int c = 0; c < C; ++c) {
                        d_hw[c] += dz * tr.pool[ri * C + c];
                        const double dp = dz * hw[c] * inv;
                        double* fp = d_feat.plane(c);
                        for (int y = r * rc; y < (r + 1) * rc; ++y)
                            for (int x = cc * rc; x < (cc + 1) * rc; ++x)
                                fp[static_cast<std::size_t>(y) * W + x] += dp;
                    }
                }
            }
            break;
        }
    }

    // Trunk, last layer first.
    Tensor3 d_act = std::move(d_feat);
    for (int i = static_cast<int>(cfg.hidden.size()) - 1; i >= 0; --i) {
        Tensor3 d_pre;
        if (cfg.activation == Activation::ReLU)
            relu_backward(tr.pre[i], d_act, d_pre);
        else
            tanh_backward(tr.act[i + 1], d_act, d_pre);
        Tensor3 d_in;
        conv_backward(tr.act[i], base + blocks[2 * i].offset,
                      cfg.hidden[i].channels, cfg.hidden[i].kernel, d_pre, d_in,
                      grad.data() + blocks[2 * i].offset,
                      grad.data() + blocks[2 * i + 1].offset);
        d_act = std::move(d_in);
    }
    return loss;
}

struct PerSample {
    double loss = 0.0;
    std::vector<double> grad;  // empty for loss-only passes
    std::exception_ptr err;
};

// Runs `fn(i)` for every sample index across `jobs` threads; results land in
// index order so the caller's reduction is independent of scheduling.
void for_each_sample(std::size_t n, int jobs,
                     const std::function<void(std::size_t)>& fn) {
    jobs = std::clamp<int>(jobs, 1, static_cast<int>(n));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (int t = 0; t < jobs; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1))
                fn(i);
        });
    for (auto& th : pool) th.join();
}

}  // namespace

Output forward(const Parameters& params, const NetConfig& cfg,
               const Tensor3& input) {
    return run_forward(params, cfg, input, nullptr);
}

double loss_only(const Parameters& params, const NetConfig& cfg,
                 const std::vector<Sample>& batch, int jobs) {
    if (batch.empty()) throw EmptySet("loss over an empty batch");
    std::vector<PerSample> res(batch.size());
    for_each_sample(batch.size(), jobs, [&](std::size_t i) {
        try {
            const Output out = run_forward(params, cfg, batch[i].input, nullptr);
            res[i].loss = sample_loss(cfg, out, batch[i].target, nullptr);
        } catch (...) {
            res[i].err = std::current_exception();
        }
    });
    double total = 0.0;
    for (const auto& r : res) {
        if (r.err) std::rethrow_exception(r.err);
        total += r.loss;
    }
    return total / static_cast<double>(batch.size());
}

double loss_and_grad(const Parameters& params, const NetConfig& cfg,
                     const std::vector<Sample>& batch, std::vector<double>& grad,
                     int jobs) {
    if (batch.empty()) throw EmptySet("loss over an empty batch");
    const std::size_t np = cfg.param_count();
    std::vector<PerSample> res(batch.size());
    for_each_sample(batch.size(), jobs, [&](std::size_t i) {
        try {
            res[i].grad.assign(np, 0.0);
            res[i].loss =
                sample_loss_and_grad(params, cfg, batch[i], res[i].grad);
        } catch (...) {
            res[i].err = std::current_exception();
        }
    });
    grad.assign(np, 0.0);
    double total = 0.0;
    const double n = static_cast<double>(batch.size());
    for (const auto& r : res) {
        if (r.err) std::rethrow_exception(r.err);
        total += r.loss;
        for (std::size_t k = 0; k < np; ++k) grad[k] += r.grad[k];
    }
    for (std::size_t k = 0; k < np; ++k) grad[k] /= n;
    return total / n;
}

}  // namespace bgc::nn
