#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bgc/config.hpp"
#include "bgc/gridstore/best_track.hpp"
#include "bgc/synth/vortex.hpp"

namespace bgc::synth {

struct Keyframe {
    double t_hours = 0.0;  // relative to the forecast init time
    VortexParams params;
};

struct StormScript {
    std::string storm_id;
    std::string basin = "WP";
    std::vector<Keyframe> keys;  // strictly increasing t_hours
};

// A self-contained world: one or two storms, the domain they live on, and
// the verification times (6-hourly; -6 h history through +72 h).
struct ScenarioScript {
    std::vector<StormScript> storms;
    gridstore::GridSpec grid;
    std::vector<int> lead_hours;
    std::int64_t init_time = 0;  // unix seconds of lead 0

    void validate() const;  // ParseError / SpecMismatch
};

// Wrap-aware linear interpolation of a storm's keyframes at t. Throws
// OutOfSpan when t falls outside [first key, last key].
VortexParams params_at(const StormScript& storm, double t_hours);

// All interpolated storms rendered on `spec` (every storm must cover t).
gridstore::FieldCube render_field(const ScenarioScript& script, double t_hours,
                                  const gridstore::GridSpec& spec,
                                  const std::vector<gridstore::VariableId>&
                                      vars = {});

// Plain-text round trip in the key-value config format.
Config script_to_config(const ScenarioScript& script);
ScenarioScript script_from_config(const Config& cfg);

// Scenario-kind weights; must sum to 1.
struct ScenarioMix {
    double straight = 0.55;
    double recurve = 0.20;
    double stall = 0.10;
    double twin = 0.10;
    double reintensify = 0.05;

    void validate() const;  // ConfigError unless weights sum to 1
    static ScenarioMix from_config(const Config& cfg);
};

struct Dataset {
    std::vector<ScenarioScript> scenarios;
    // Continuous ground truth per storm and verification time: center,
    // peak wind (the profile's v_max) and minimum pressure (ambient-deficit),
    // sorted by (storm_id, timestamp).
    std::vector<gridstore::BestTrackRecord> truth;

    // FNV-1a over the serialized scenario scripts and the truth CSV.
    std::uint64_t content_hash() const;
};

// Deterministic world generation: n_storms storms across scenarios drawn
// from the mix (a twin scenario consumes two storms). Genesis positions are
// continuous, so sub-cell offsets are uniform within cells.
Dataset gen_dataset(std::uint64_t seed, int n_storms, const ScenarioMix& mix);

}  // namespace bgc::synth
