#pragma once

#include <string>

#include "bgc/nn/network.hpp"
#include "json.hpp"

namespace bgc::nn {

using json = nlohmann::ordered_json;

struct Checkpoint {
    Parameters params;
    NetConfig config;
    json metadata;  // everything stored alongside the payload
};

json net_config_to_json(const NetConfig& cfg);
NetConfig net_config_from_json(const json& j);  // ParseError

// Byte layout: "BGP1", u32 version, u64 param count, f64 LE payload,
// u32 metadata length, UTF-8 JSON. The metadata always gets "config" and
// "seed" entries; `extra` supplies the rest (normalization stats, run info).
std::string encode_checkpoint(const Parameters& params, const NetConfig& cfg,
                              const json& extra);
Checkpoint decode_checkpoint(const std::string& bytes,
                             const std::string& context = "checkpoint");

void save_checkpoint(const std::string& path, const Parameters& params,
                     const NetConfig& cfg, const json& extra);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace bgc::nn
