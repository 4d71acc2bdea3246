#include "bgc/nn/checkpoint.hpp"

#include <cmath>

#include "bgc/binio.hpp"
#include "bgc/errors.hpp"

namespace bgc::nn {

json net_config_to_json(const NetConfig& cfg) {
    json j;
    j["in_channels"] = cfg.in_channels;
    json layers = json::array();
    for (const auto& l : cfg.hidden) layers.push_back({l.channels, l.kernel});
    j["hidden"] = layers;
    j["activation"] = activation_name(cfg.activation);
    j["head"] = head_name(cfg.head);
    if (cfg.head == Head::RegionWind) j["region_cells"] = cfg.region_cells;
    return j;
}

NetConfig net_config_from_json(const json& j) {
    NetConfig cfg;
    try {
        cfg.in_channels = j.at("in_channels").get<int>();
        cfg.hidden.clear();
        for (const auto& l : j.at("hidden")) {
            if (!l.is_array() || l.size() != 2)
                throw ParseError("checkpoint config: each hidden layer must be "
                                 "[channels, kernel]");
            cfg.hidden.push_back({l[0].get<int>(), l[1].get<int>()});
        }
        cfg.activation = activation_from_name(j.at("activation").get<std::string>());
        cfg.head = head_from_name(j.at("head").get<std::string>());
        cfg.region_cells = j.value("region_cells", 0);
    } catch (const json::exception& e) {
        throw ParseError(std::string("checkpoint config: ") + e.what());
    } catch (const ConfigError& e) {
        throw ParseError(std::string("checkpoint config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

std::string encode_checkpoint(const Parameters& params, const NetConfig& cfg,
                              const json& extra) {
    if (params.values.size() != cfg.param_count())
        throw ShapeMismatch("checkpoint: parameter count " +
                            std::to_string(params.values.size()) +
                            " does not match config (" +
                            std::to_string(cfg.param_count()) + ")");
    for (double v : params.values)
        if (!std::isfinite(v))
            throw NonFiniteInput("checkpoint: non-finite parameter value");

    json meta;
    meta["config"] = net_config_to_json(cfg);
    meta["seed"] = params.rng_seed;
    for (const auto& [k, v] : extra.items())
        if (k != "config" && k != "seed") meta[k] = v;
    const std::string mtext = meta.dump();

    std::string out;
    out += "BGP1";
    binio::put_u32(out, 1);
    binio::put_u64(out, params.values.size());
    for (double v : params.values) binio::put_f64(out, v);
    binio::put_u32(out, static_cast<std::uint32_t>(mtext.size()));
    out += mtext;
    return out;
}

Checkpoint decode_checkpoint(const std::string& bytes,
                             const std::string& context) {
    binio::Reader r(bytes, context);
    const std::string magic = r.get_bytes(4, "magic");
    if (magic != "BGP1")
        throw BadMagic(context + ": bad magic at offset 0 (expected \"BGP1\")");
    const std::uint32_t version = r.get_u32("version");
    if (version != 1)
        throw DimMismatch(context + ": unsupported version " +
                          std::to_string(version) + " at offset 4");
    const std::uint64_t count = r.get_u64("param count");
    if (count == 0 || count > (1ULL << 30))
        throw DimMismatch(context + ": implausible parameter count " +
                          std::to_string(count) + " at offset 8");

    Checkpoint ck;
    ck.params.values.resize(count);
    for (std::uint64_t i = 0; i < count; ++i)
        ck.params.values[i] = r.get_f64("parameter");
    for (double v : ck.params.values)
        if (!std::isfinite(v))
            throw NonFiniteInput(context + ": non-finite parameter value");

    const std::uint32_t mlen = r.get_u32("metadata length");
    const std::string mtext = r.get_bytes(mlen, "metadata");
    try {
        ck.metadata = json::parse(mtext);
    } catch (const json::exception& e) {
        throw ParseError(context + ": metadata is not valid JSON: " + e.what());
    }
    if (r.remaining() != 0)
        throw DimMismatch(context + ": " + std::to_string(r.remaining()) +
                          " trailing bytes after metadata");

    if (!ck.metadata.contains("config"))
        throw ParseError(context + ": metadata lacks a \"config\" entry");
    ck.config = net_config_from_json(ck.metadata["config"]);
    if (ck.params.values.size() != ck.config.param_count())
        throw DimMismatch(context + ": payload holds " +
                          std::to_string(ck.params.values.size()) +
                          " parameters but config needs " +
                          std::to_string(ck.config.param_count()));
    ck.params.rng_seed = ck.metadata.value("seed", std::uint64_t{0});
    return ck;
}

void save_checkpoint(const std::string& path, const Parameters& params,
                     const NetConfig& cfg, const json& extra) {
    binio::write_file(path, encode_checkpoint(params, cfg, extra));
}

Checkpoint load_checkpoint(const std::string& path) {
    return decode_checkpoint(binio::read_file(path), path);
}

}  // namespace bgc::nn
