#include "bgc/correction/correction.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <string>
#include <utility>

#include "bgc/binio.hpp"
#include "bgc/errors.hpp"
#include "bgc/rng.hpp"

namespace bgc::correction {

namespace {

std::string fmt(const char* f, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

const char* metric_name(density::Metric m) {
    return m == density::Metric::GreatCircle ? "greatcircle" : "index";
}

}  // namespace

void FeatureScaler::validate(std::size_t nvars) const {
    if (mean.size() != nvars || stdev.size() != nvars) {
        throw ShapeMismatch(fmt(
            "scaler has %zu/%zu entries for %zu feature variables",
            mean.size(), stdev.size(), nvars));
    }
    for (std::size_t i = 0; i < stdev.size(); ++i) {
        if (!std::isfinite(mean[i]) || !std::isfinite(stdev[i]) ||
            stdev[i] <= 0.0) {
            throw DegenerateFit(fmt(
                "scaler channel %zu has mean %g, stdev %g", i, mean[i],
                stdev[i]));
        }
    }
}

void ModelSpec::validate() const {
    if (vars.empty()) throw ConfigError("correction model needs feature variables");
    std::set<gridstore::VariableId> seen(vars.begin(), vars.end());
    if (seen.size() != vars.size()) {
        throw ConfigError("correction feature variables repeat");
    }
    if (net.head == nn::Head::RegionWind) {
        throw ConfigError(
            "correction models use the density or residual head");
    }
    net.validate();
    if (net.in_channels != static_cast<int>(vars.size()) + 1) {
        throw ShapeMismatch(fmt(
            "net expects %d input channels but %zu variables + prior give %zu",
            net.in_channels, vars.size(), vars.size() + 1));
    }
    kernel.validate();
    if (window_half < 1) {
        throw ConfigError(fmt("window_half must be >= 1, got %d", window_half));
    }
}

FeatureScaler fit_scaler(const std::vector<gridstore::VariableId>& vars,
                         const std::vector<TrackCase>& train_cases) {
    if (train_cases.empty()) {
        throw EmptySet("cannot fit a feature scaler on zero cases");
    }
    FeatureScaler s;
    s.mean.resize(vars.size());
    s.stdev.resize(vars.size());
    for (std::size_t vi = 0; vi < vars.size(); ++vi) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& c : train_cases) {
            const float* p = c.window.var_plane(vars[vi]);
            const std::size_t m = c.window.plane_size();
            for (std::size_t k = 0; k < m; ++k) sum += p[k];
            n += m;
        }
        const double mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (const auto& c : train_cases) {
            const float* p = c.window.var_plane(vars[vi]);
            const std::size_t m = c.window.plane_size();
            for (std::size_t k = 0; k < m; ++k) {
                const double d = p[k] - mean;
                ss += d * d;
            }
        }
        const double sd = std::sqrt(ss / static_cast<double>(n));
        if (sd <= 1e-12 * std::max(1.0, std::abs(mean))) {
            throw DegenerateFit(fmt(
                "variable %s is constant (mean %g) across the training split",
                std::string(gridstore::var_name(vars[vi])).c_str(), mean));
        }
        s.mean[vi] = mean;
        s.stdev[vi] = sd;
    }
    return s;
}

nn::Tensor3 build_input(const ModelSpec& spec, const FeatureScaler& scaler,
                        const gridstore::FieldCube& window, LatLon prior) {
    scaler.validate(spec.vars.size());
    const int h = window.spec.nlat;
    const int w = window.spec.nlon;
    nn::Tensor3 t(static_cast<int>(spec.vars.size()) + 1, h, w);
    for (std::size_t vi = 0; vi < spec.vars.size(); ++vi) {
        const float* p = window.var_plane(spec.vars[vi]);
        const double inv = 1.0 / scaler.stdev[vi];
        double* dst = t.plane(static_cast<int>(vi));
        for (std::size_t k = 0; k < window.plane_size(); ++k) {
            dst[k] = (p[k] - scaler.mean[vi]) * inv;
        }
    }
    const density::DensityField prior_field =
        density::encode_center(prior, window.spec, spec.kernel, spec.metric);
    std::copy(prior_field.w.begin(), prior_field.w.end(),
              t.plane(static_cast<int>(spec.vars.size())));
    return t;
}

nn::Sample make_sample(const ModelSpec& spec, const FeatureScaler& scaler,
                       const TrackCase& c) {
    nn::Sample s;
    s.input = build_input(spec, scaler, c.window, c.prior);
    if (spec.net.head == nn::Head::DensityLogits) {
        s.target.density =
            density::encode_center(c.truth, c.window.spec, spec.kernel,
                                   spec.metric)
                .w;
    } else {
        s.target.dlat = c.truth.lat - c.prior.lat;
        s.target.dlon = lon_diff(c.truth.lon, c.prior.lon);
    }
    return s;
}

Split split_by_storm(const std::vector<TrackCase>& cases, double val_fraction,
                     std::uint64_t seed) {
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
        throw ConfigError(fmt("val_fraction must lie in (0,1), got %g",
                              val_fraction));
    }
    std::set<std::string> id_set;
    for (const auto& c : cases) id_set.insert(c.storm_id);
    if (id_set.size() < 2) {
        throw EmptySet("storm-level split needs at least two storms");
    }
    std::vector<std::string> ids(id_set.begin(), id_set.end());
    Rng rng(seed);
    for (std::size_t i = ids.size() - 1; i > 0; --i) {
        const auto j =
            static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i)));
        std::swap(ids[i], ids[j]);
    }
    auto n_val = static_cast<std::size_t>(
        std::llround(val_fraction * static_cast<double>(ids.size())));
    n_val = std::clamp<std::size_t>(n_val, 1, ids.size() - 1);
    const std::set<std::string> val_ids(ids.begin(),
                                        ids.begin() + static_cast<long>(n_val));
    Split out;
    for (const auto& c : cases) {
        (val_ids.count(c.storm_id) ? out.val : out.train).push_back(c);
    }
    return out;
}

TrainReport train_model(const ModelSpec& spec,
                        const std::vector<TrackCase>& train_cases,
                        const std::vector<TrackCase>& val_cases,
                        const nn::TrainConfig& cfg) {
    spec.validate();
    TrainReport rep;
    rep.model.spec = spec;
    rep.model.scaler = fit_scaler(spec.vars, train_cases);
    std::vector<nn::Sample> tr, va;
    tr.reserve(train_cases.size());
    va.reserve(val_cases.size());
    for (const auto& c : train_cases) {
        tr.push_back(make_sample(spec, rep.model.scaler, c));
    }
    for (const auto& c : val_cases) {
        va.push_back(make_sample(spec, rep.model.scaler, c));
    }
    nn::TrainResult res = nn::train(spec.net, tr, va, cfg);
    rep.model.params = std::move(res.params);
    rep.log = std::move(res.log);
    return rep;
}

LatLon refine_window(const Model& m, const gridstore::FieldCube& window,
                     LatLon prior) {
    m.spec.validate();
    const nn::Tensor3 in = build_input(m.spec, m.scaler, window, prior);
    const nn::Output out = nn::forward(m.params, m.spec.net, in);
    if (m.spec.net.head == nn::Head::DensityLogits) {
        if (out.h != window.spec.nlat || out.w != window.spec.nlon) {
            throw ShapeMismatch(fmt("logit plane %dx%d for a %dx%d window",
                                    out.h, out.w, window.spec.nlat,
                                    window.spec.nlon));
        }
        const density::DensityField p =
            density::softmax_normalize(out.values, window.spec);
        return density::decode_expectation(p);
    }
    return {prior.lat + out.dlat(), wrap_lon(prior.lon + out.dlon())};
}

LatLon refine_fix(const Model& m, const gridstore::FieldCube& cube,
                  LatLon prior) {
    const gridstore::FieldCube window =
        gridstore::crop_window(cube, prior, m.spec.window_half);
    return refine_window(m, window, prior);
}

std::string encode_model(const Model& m) {
    m.spec.validate();
    m.scaler.validate(m.spec.vars.size());
    nn::json desc;
    nn::json var_names = nn::json::array();
    for (auto v : m.spec.vars) {
        var_names.push_back(std::string(gridstore::var_name(v)));
    }
    desc["vars"] = std::move(var_names);
    desc["kernel"] = {{"sigma_deg", m.spec.kernel.sigma_deg},
                      {"radius_deg", m.spec.kernel.radius_deg}};
    desc["metric"] = metric_name(m.spec.metric);
    desc["window_half"] = m.spec.window_half;
    desc["scaler"] = {{"mean", m.scaler.mean}, {"stdev", m.scaler.stdev}};
    nn::json extra;
    extra["model"] = std::move(desc);
    return nn::encode_checkpoint(m.params, m.spec.net, extra);
}

Model decode_model(const std::string& bytes) {
    const nn::Checkpoint ck = nn::decode_checkpoint(bytes, "model checkpoint");
    if (!ck.metadata.contains("model")) {
        throw ParseError("model checkpoint metadata lacks \"model\"");
    }
    Model m;
    m.spec.net = ck.config;
    m.params = ck.params;
    try {
        const nn::json& d = ck.metadata.at("model");
        for (const auto& name : d.at("vars")) {
            const auto v =
                gridstore::var_from_name(name.get<std::string>());
            if (!v) {
                throw ParseError("model checkpoint names unknown variable '" +
                                 name.get<std::string>() + "'");
            }
            m.spec.vars.push_back(*v);
        }
        m.spec.kernel.sigma_deg = d.at("kernel").at("sigma_deg").get<double>();
        m.spec.kernel.radius_deg =
            d.at("kernel").at("radius_deg").get<double>();
        m.spec.metric =
            density::metric_from_name(d.at("metric").get<std::string>());
        m.spec.window_half = d.at("window_half").get<int>();
        m.scaler.mean = d.at("scaler").at("mean").get<std::vector<double>>();
        m.scaler.stdev = d.at("scaler").at("stdev").get<std::vector<double>>();
    } catch (const nn::json::exception& e) {
        throw ParseError(std::string("model checkpoint metadata: ") +
                         e.what());
    }
    m.spec.validate();
    m.scaler.validate(m.spec.vars.size());
    return m;
}

void save_model(const std::string& path, const Model& m) {
    binio::write_file(path, encode_model(m));
}

Model load_model(const std::string& path) {
    return decode_model(binio::read_file(path));
}

}  // namespace bgc::correction
