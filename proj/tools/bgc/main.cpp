// bgc: the synthetic tropical-cyclone pipeline in one binary.
//
// Subcommands cover the full loop: dataset generation (synth), kinematic
// tracking (track), center-correction training and inference (train-track,
// refine), region intensity (train-intensity, intensity), and verification
// (eval, gridlock).  Every command writes a run manifest before its outputs
// and refuses to overwrite anything without --force.  All state comes from
// flags and config files; no environment variables are read.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "bgc/binio.hpp"
#include "bgc/config.hpp"
#include "bgc/correction/correction.hpp"
#include "bgc/density/density.hpp"
#include "bgc/errors.hpp"
#include "bgc/eval/eval.hpp"
#include "bgc/geo.hpp"
#include "bgc/gridstore/best_track.hpp"
#include "bgc/gridstore/grid.hpp"
#include "bgc/gridstore/grid_io.hpp"
#include "bgc/intensity/intensity.hpp"
#include "bgc/nn/optimizer.hpp"
#include "bgc/rng.hpp"
#include "bgc/synth/scenario.hpp"
#include "bgc/timeutil.hpp"
#include "bgc/tracker/tracker.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace bgc;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return std::string(buf);
}

// ---------------------------------------------------------------------------
// small utilities

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

void ensure_parent_dir(const std::string& path) {
    fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

void require_fresh(const std::vector<std::string>& paths, bool force) {
    if (force) return;
    for (const auto& p : paths)
        if (fs::exists(p))
            throw OutputExists(
                fmt("%s already exists (pass --force to overwrite)",
                    p.c_str()));
}

void require_fresh_dir(const std::string& dir, bool force) {
    if (force) return;
    if (fs::exists(dir) && fs::is_directory(dir) && !fs::is_empty(dir))
        throw OutputExists(
            fmt("%s is not empty (pass --force to overwrite)", dir.c_str()));
    if (fs::exists(dir) && !fs::is_directory(dir))
        throw OutputExists(fmt("%s exists and is not a directory", dir.c_str()));
}

json parse_json_file(const std::string& path) {
    const std::string text = binio::read_file(path);
    try {
        return json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(fmt("%s: %s", path.c_str(), e.what()));
    }
}

// Index-sharded work queue; each item writes only its own slot, so results
// are ordered no matter how the threads are scheduled.
template <class F>
void parallel_items(std::size_t n, int jobs, F&& work) {
    if (jobs < 1) throw ConfigError("--jobs must be >= 1");
    const int k = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
    if (k <= 1) {
        for (std::size_t i = 0; i < n; ++i) work(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    std::vector<std::thread> pool;
    pool.reserve(k);
    for (int t = 0; t < k; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    work(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mu);
                    if (!err) err = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

// ---------------------------------------------------------------------------
// config plumbing

Config effective_config(const std::string& config_path,
                        const std::vector<std::string>& sets) {
    Config cfg = config_path.empty() ? Config::from_text("")
                                     : Config::from_file(config_path);
    for (const auto& kv : sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ConfigError(
                fmt("--set expects key=value, got \"%s\"", kv.c_str()));
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cfg;
}

std::vector<gridstore::VariableId> parse_vars(const Config& cfg,
                                              const std::string& key,
                                              const std::string& dflt) {
    std::vector<gridstore::VariableId> out;
    for (const auto& name : split_csv(cfg.get_str(key, dflt))) {
        const auto v = gridstore::var_from_name(name);
        if (!v)
            throw ConfigError(
                fmt("%s: unknown variable \"%s\"", key.c_str(), name.c_str()));
        out.push_back(*v);
    }
    if (out.empty()) throw ConfigError(key + ": empty variable list");
    return out;
}

std::vector<nn::ConvLayer> parse_hidden(const Config& cfg,
                                        const std::string& key,
                                        const std::string& dflt) {
    std::vector<nn::ConvLayer> out;
    for (const auto& tok : split_csv(cfg.get_str(key, dflt))) {
        const auto x = tok.find('x');
        if (x == std::string::npos || x == 0 || x + 1 >= tok.size())
            throw ConfigError(fmt(
                "%s: expected CHANNELSxKERNEL tokens, got \"%s\"", key.c_str(),
                tok.c_str()));
        try {
            out.push_back({std::stoi(tok.substr(0, x)),
                           std::stoi(tok.substr(x + 1))});
        } catch (const std::exception&) {
            throw ConfigError(fmt("%s: bad layer token \"%s\"", key.c_str(),
                                  tok.c_str()));
        }
    }
    if (out.empty()) throw ConfigError(key + ": empty layer list");
    return out;
}

nn::TrainConfig train_config_from(const Config& cfg, double default_lr,
                                  int default_epochs) {
    nn::TrainConfig t;
    t.optimizer = nn::opt_from_name(cfg.get_str("train.optimizer", "adam"));
    t.lr = cfg.get_double("train.lr", default_lr);
    t.epochs = cfg.get_int("train.epochs", default_epochs);
    t.batch = cfg.get_int("train.batch", 0);
    t.seed = static_cast<std::uint64_t>(cfg.get_int("train.seed", 1));
    t.jobs = cfg.get_int("train.jobs", 1);
    t.validate();
    return t;
}

// ---------------------------------------------------------------------------
// run manifests

struct CommandIo {
    std::string command;
    const Config* cfg = nullptr;
    std::uint64_t seed = 0;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
};

void write_manifest(const std::string& path, const CommandIo& io) {
    json m;
    m["tool"] = "bgc";
    m["version"] = kVersion;
    m["command"] = io.command;
    m["config_hash"] = io.cfg->hash_hex();
    m["config"] = io.cfg->canonical_text();
    m["seed"] = io.seed;
    m["inputs"] = io.inputs;
    m["outputs"] = io.outputs;
    m["wall_clock_utc"] =
        format_iso8601(static_cast<std::int64_t>(std::time(nullptr)));
    ensure_parent_dir(path);
    binio::write_file(path, m.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// dataset layout: DIR/dataset.json + DIR/truth.csv + DIR/cubes/*.bgc1

struct DataEntry {
    std::string storm_id;
    std::string basin;
    int lead_h = 0;
    std::int64_t valid_time = 0;
    std::string path;  // relative to the dataset directory
};

struct DataIndex {
    std::string dir;
    std::uint64_t seed = 0;
    int n_storms = 0;
    int window_cells = 0;
    std::string hash_hex;
    std::vector<gridstore::VariableId> vars;
    std::vector<DataEntry> entries;  // sorted by (storm_id, lead_h)
    std::vector<gridstore::BestTrackRecord> truth;
};

DataIndex load_index(const std::string& dir) {
    const std::string index_path = (fs::path(dir) / "dataset.json").string();
    const json j = parse_json_file(index_path);
    DataIndex idx;
    idx.dir = dir;
    try {
        if (j.at("format").get<std::string>() != "bgc-dataset")
            throw ParseError(index_path + ": not a bgc dataset index");
        idx.seed = j.at("seed").get<std::uint64_t>();
        idx.n_storms = j.at("n_storms").get<int>();
        idx.window_cells = j.at("window_cells").get<int>();
        idx.hash_hex = j.at("hash").get<std::string>();
        for (const auto& name : j.at("vars")) {
            const auto v = gridstore::var_from_name(name.get<std::string>());
            if (!v)
                throw ParseError(fmt("%s: unknown variable \"%s\"",
                                     index_path.c_str(),
                                     name.get<std::string>().c_str()));
            idx.vars.push_back(*v);
        }
        for (const auto& e : j.at("entries")) {
            DataEntry d;
            d.storm_id = e.at("storm_id").get<std::string>();
            d.basin = e.at("basin").get<std::string>();
            d.lead_h = e.at("lead_h").get<int>();
            d.valid_time = parse_iso8601(e.at("valid_time").get<std::string>());
            d.path = e.at("path").get<std::string>();
            idx.entries.push_back(std::move(d));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(fmt("%s: %s", index_path.c_str(), e.what()));
    }
    if (idx.entries.empty()) throw EmptySet(index_path + ": no entries");
    idx.truth = gridstore::read_besttrack_csv(
        (fs::path(dir) / j.value("truth", "truth.csv")).string());
    return idx;
}

gridstore::FieldCube load_cube(const DataIndex& idx, const DataEntry& e) {
    return gridstore::read_grid_file((fs::path(idx.dir) / e.path).string());
}

using StormGroup = std::pair<std::string, std::vector<const DataEntry*>>;

std::vector<StormGroup> group_by_storm(const DataIndex& idx) {
    std::map<std::string, std::vector<const DataEntry*>> m;
    for (const auto& e : idx.entries) m[e.storm_id].push_back(&e);
    std::vector<StormGroup> out(m.begin(), m.end());
    for (auto& [id, leads] : out)
        std::sort(leads.begin(), leads.end(),
                  [](const DataEntry* a, const DataEntry* b) {
                      return a->lead_h < b->lead_h;
                  });
    return out;
}

using TruthMap =
    std::map<std::pair<std::string, std::int64_t>,
             const gridstore::BestTrackRecord*>;

TruthMap truth_map(const std::vector<gridstore::BestTrackRecord>& truth) {
    TruthMap m;
    for (const auto& r : truth) m[{r.storm_id, r.timestamp}] = &r;
    return m;
}

const gridstore::BestTrackRecord* must_truth(const TruthMap& m,
                                             const std::string& id,
                                             std::int64_t ts) {
    const auto it = m.find({id, ts});
    if (it == m.end())
        throw ParseError(fmt("truth.csv: no record for %s at %s", id.c_str(),
                             format_iso8601(ts).c_str()));
    return it->second;
}

// Largest 10 m wind speed over the cells within radius_deg of a point.
double diagnosed_wind(const gridstore::FieldCube& cube, LatLon center,
                      double radius_deg) {
    const float* u = cube.var_plane(gridstore::VariableId::U10);
    const float* v = cube.var_plane(gridstore::VariableId::V10);
    const double max_angle = deg2rad(radius_deg);
    double best = 0.0;
    for (int i = 0; i < cube.spec.nlat; ++i) {
        for (int j = 0; j < cube.spec.nlon; ++j) {
            const LatLon node = gridstore::index_to_latlon(i, j, cube.spec);
            if (central_angle_rad(center, node) > max_angle) continue;
            const std::size_t n = static_cast<std::size_t>(i) * cube.spec.nlon + j;
            const double s = std::hypot(u[n], v[n]);
            best = std::max(best, s);
        }
    }
    return best;
}

// Pulls a point at least margin_cells inside the grid along both axes.
LatLon clamp_interior(LatLon p, const gridstore::GridSpec& g,
                      int margin_cells) {
    const double m = margin_cells;
    double fi =
        g.north_first ? (g.lat0 - p.lat) / g.dlat : (p.lat - g.lat0) / g.dlat;
    double fj = lon_diff(p.lon, g.lon0) / g.dlon;
    fi = std::clamp(fi, m, static_cast<double>(g.nlat - 1) - m);
    fj = std::clamp(fj, m, static_cast<double>(g.nlon - 1) - m);
    return gridstore::index_to_latlon(fi, fj, g);
}

// Margin that keeps a prior both croppable at window_half and close enough
// to the cube center that the storm-centered truth stays inside the crop.
int prior_margin_for(const gridstore::GridSpec& g, int window_half) {
    const int n = std::min(g.nlat, g.nlon);
    if (2 * window_half + 1 > n)
        throw ConfigError(
            fmt("window_half=%d needs %d-cell windows but the dataset "
                "provides %d cells",
                window_half, 2 * window_half + 1, n));
    const int half_n = (n - 1) / 2;
    return std::max(window_half, half_n + 1 - window_half);
}

// One tracker step that survives losing the storm.  Twin scenarios can drag
// the re-centering minimum search onto the neighboring low and off the
// storm-centered window; when that happens the track is kept alive with the
// blended first guess, clamped far enough inside the window that the next
// step's steering disk still fits.
tracker::TrackState safe_track_step(const gridstore::FieldCube& cube,
                                    const tracker::TrackState& st,
                                    const tracker::TrackerConfig& tcfg) {
    try {
        return tracker::track_step(cube, st, tcfg);
    } catch (const OutOfBounds&) {
        tracker::SteeringVector steer;
        double alpha = tcfg.alpha;
        try {
            steer = tracker::steering_flow(cube,
                                           {st.last().lat, st.last().lon},
                                           tcfg.steering_radius_deg,
                                           tcfg.steering_weights);
        } catch (const OutOfBounds&) {
            alpha = 1.0;  // even the disk left the window: persistence only
        }
        const std::int64_t dt = cube.timestamp - st.last().timestamp;
        const LatLon cand = tracker::extrapolate(st, steer, dt, alpha);
        const int margin =
            static_cast<int>(
                std::ceil(tcfg.steering_radius_deg / cube.spec.dlat)) +
            1;
        const LatLon fix = clamp_interior(cand, cube.spec, margin);
        tracker::TrackState out = st;
        out.source = tracker::TrackSource::Kinematic;
        out.append({cube.timestamp, fix.lat, fix.lon});
        return out;
    }
}

// Walks the kinematic tracker over one storm's forecast cubes.  History is
// seeded from the two best-track rows before the first lead; visit sees each
// entry, its cube, and the fix appended at that valid time.
template <class F>
void kinematic_walk(const DataIndex& idx,
                    const std::vector<const DataEntry*>& leads,
                    const TruthMap& truth, const tracker::TrackerConfig& tcfg,
                    F&& visit) {
    const DataEntry* first = leads.front();
    const std::int64_t init =
        first->valid_time - static_cast<std::int64_t>(first->lead_h) * 3600;
    tracker::TrackState st;
    st.storm_id = first->storm_id;
    st.source = tracker::TrackSource::BestTrack;
    for (const std::int64_t ts : {init - tracker::kSixHours, init}) {
        const auto* r = must_truth(truth, first->storm_id, ts);
        st.append({r->timestamp, r->lat, r->lon});
    }
    for (const DataEntry* e : leads) {
        const auto cube = load_cube(idx, *e);
        st = safe_track_step(cube, st, tcfg);
        visit(*e, cube, st.last());
    }
}

// ---------------------------------------------------------------------------
// run files: fixed-key-order JSON so reruns diff cleanly

json run_to_json(const eval::ForecastRun& run, const std::string& command,
                 const std::string& data_dir) {
    json j;
    j["format"] = "bgc-run";
    j["version"] = 1;
    j["run_id"] = run.run_id;
    j["command"] = command;
    j["data"] = data_dir;
    j["config_hash"] = run.config_hash;
    json preds = json::array();
    for (const auto& p : run.preds) {
        json r;
        r["storm_id"] = p.storm_id;
        r["valid_time"] = format_iso8601(p.valid_time);
        r["lead_h"] = p.lead_h;
        r["lat"] = p.lat;
        r["lon"] = p.lon;
        r["wind_ms"] = p.wind_ms;
        preds.push_back(std::move(r));
    }
    j["preds"] = std::move(preds);
    return j;
}

eval::ForecastRun run_from_file(const std::string& path,
                                std::string* data_dir) {
    const json j = parse_json_file(path);
    eval::ForecastRun run;
    try {
        if (j.at("format").get<std::string>() != "bgc-run")
            throw ParseError(path + ": not a bgc run file");
        run.run_id = j.at("run_id").get<std::string>();
        run.config_hash = j.at("config_hash").get<std::string>();
        if (data_dir) *data_dir = j.at("data").get<std::string>();
        for (const auto& r : j.at("preds")) {
            eval::PredRecord p;
            p.storm_id = r.at("storm_id").get<std::string>();
            p.valid_time = parse_iso8601(r.at("valid_time").get<std::string>());
            p.lead_h = r.at("lead_h").get<int>();
            p.lat = r.at("lat").get<double>();
            p.lon = r.at("lon").get<double>();
            p.wind_ms = r.at("wind_ms").get<double>();
            run.preds.push_back(std::move(p));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(fmt("%s: %s", path.c_str(), e.what()));
    }
    return run;
}

void write_run(const std::string& path, const eval::ForecastRun& run,
               const std::string& command, const std::string& data_dir) {
    ensure_parent_dir(path);
    binio::write_file(path, run_to_json(run, command, data_dir).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// model-spec assembly from config

constexpr const char* kDefaultSynthVars =
    "Z500,T850,Q850,U500,V500,U700,V700,U850,V850,MSL,U10,V10";
constexpr const char* kDefaultTrackVars = "MSL,U10,V10,U850,V850,Z500,T850";
constexpr const char* kDefaultIntensityVars = "U10,V10,MSL,T850,Q850";

correction::ModelSpec correction_spec_from(const Config& cfg) {
    correction::ModelSpec s;
    s.vars = parse_vars(cfg, "correction.vars", kDefaultTrackVars);
    s.window_half = cfg.get_int("correction.window_half", 16);
    s.kernel.sigma_deg = cfg.get_double("correction.sigma_deg", 0.25);
    s.kernel.radius_deg = cfg.get_double("correction.radius_deg", 0.75);
    s.metric =
        density::metric_from_name(cfg.get_str("correction.metric",
                                              "greatcircle"));
    const std::string head = cfg.get_str("correction.head", "density");
    if (head == "density")
        s.net.head = nn::Head::DensityLogits;
    else if (head == "residual")
        s.net.head = nn::Head::Residual;
    else
        throw ConfigError(
            fmt("correction.head must be density or residual, got \"%s\"",
                head.c_str()));
    s.net.in_channels = static_cast<int>(s.vars.size()) + 1;
    s.net.hidden = parse_hidden(cfg, "correction.hidden", "16x3,32x3,16x3");
    s.net.activation =
        nn::activation_from_name(cfg.get_str("correction.activation", "relu"));
    s.validate();
    return s;
}

intensity::ModelSpec intensity_spec_from(const Config& cfg) {
    intensity::ModelSpec s;
    s.vars = parse_vars(cfg, "intensity.vars", kDefaultIntensityVars);
    s.p = cfg.get_int("intensity.p", 4);
    s.n_merge = cfg.get_int("intensity.n_merge", 0);
    s.basin = cfg.get_str("intensity.basin", "WP");
    s.net.in_channels = static_cast<int>(s.vars.size());
    s.net.hidden = parse_hidden(cfg, "intensity.hidden", "8x3");
    s.net.activation =
        nn::activation_from_name(cfg.get_str("intensity.activation", "relu"));
    s.net.head = nn::Head::RegionWind;
    s.net.region_cells = s.p << s.n_merge;
    s.validate();
    return s;
}

// Same storm-level split as training uses elsewhere: shuffle the sorted
// storm ids, peel off a validation share, never let either side go empty.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
split_indices_by_storm(const std::vector<std::string>& case_storm,
                       double val_fraction, std::uint64_t seed) {
    if (!(val_fraction > 0.0 && val_fraction < 1.0))
        throw ConfigError("split.val_fraction must lie in (0, 1)");
    std::vector<std::string> ids(case_storm.begin(), case_storm.end());
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    if (ids.size() < 2)
        throw EmptySet("storm split needs at least two distinct storms");
    Rng rng(seed);
    for (std::size_t i = ids.size() - 1; i > 0; --i)
        std::swap(ids[i], ids[rng.uniform_int(0, static_cast<int>(i))]);
    std::size_t n_val = static_cast<std::size_t>(
        std::llround(val_fraction * static_cast<double>(ids.size())));
    n_val = std::clamp<std::size_t>(n_val, 1, ids.size() - 1);
    std::set<std::string> val_ids(ids.begin(), ids.begin() + n_val);
    std::pair<std::vector<std::size_t>, std::vector<std::size_t>> out;
    for (std::size_t i = 0; i < case_storm.size(); ++i) {
        if (val_ids.count(case_storm[i]))
            out.second.push_back(i);
        else
            out.first.push_back(i);
    }
    return out;
}

// ---------------------------------------------------------------------------
// synth

struct SynthOpts {
    std::string out, mix, config;
    std::vector<std::string> sets;
    std::uint64_t seed = 1;
    int storms = 20;
    bool force = false;
};

gridstore::GridSpec window_spec_for(LatLon center, double cell, int cells) {
    const int half = (cells - 1) / 2;
    gridstore::GridSpec w;
    w.dlat = w.dlon = cell;
    w.nlat = w.nlon = cells;
    w.north_first = true;
    w.lat0 = std::round(center.lat / cell) * cell + half * cell;
    w.lon0 = wrap_lon(std::round(center.lon / cell) * cell - half * cell);
    return w;
}

void cmd_synth(const SynthOpts& o) {
    const Config cfg = effective_config(o.config, o.sets);
    const int wc = cfg.get_int("synth.window_cells", 61);
    if (wc < 21 || wc % 2 == 0)
        throw ConfigError("synth.window_cells must be odd and >= 21");
    const auto vars = parse_vars(cfg, "synth.vars", kDefaultSynthVars);

    require_fresh_dir(o.out, o.force);
    fs::create_directories(fs::path(o.out) / "cubes");

    CommandIo io{"synth", &cfg, o.seed, {}, {o.out}};
    if (!o.mix.empty()) io.inputs.push_back(o.mix);
    write_manifest((fs::path(o.out) / "manifest.json").string(), io);

    const synth::ScenarioMix mix =
        o.mix.empty() ? synth::ScenarioMix{}
                      : synth::ScenarioMix::from_config(Config::from_file(o.mix));
    const synth::Dataset ds = synth::gen_dataset(o.seed, o.storms, mix);
    binio::write_file((fs::path(o.out) / "truth.csv").string(),
                      gridstore::format_besttrack_csv(ds.truth));

    const TruthMap tm = truth_map(ds.truth);
    json entries = json::array();
    int files = 0;
    for (const auto& sc : ds.scenarios) {
        for (const auto& storm : sc.storms) {
            for (const int lead : sc.lead_hours) {
                if (lead < 6) continue;  // history comes from truth.csv
                const std::int64_t ts =
                    sc.init_time + static_cast<std::int64_t>(lead) * 3600;
                const auto* rec = must_truth(tm, storm.storm_id, ts);
                const auto spec =
                    window_spec_for({rec->lat, rec->lon}, sc.grid.dlat, wc);
                const auto cube = synth::render_field(sc, lead, spec, vars);
                const std::string rel =
                    fmt("cubes/%s_%03d.bgc1", storm.storm_id.c_str(), lead);
                gridstore::write_grid_file(cube,
                                           (fs::path(o.out) / rel).string());
                json e;
                e["storm_id"] = storm.storm_id;
                e["basin"] = storm.basin;
                e["lead_h"] = lead;
                e["valid_time"] = format_iso8601(ts);
                e["path"] = rel;
                entries.push_back(std::move(e));
                ++files;
            }
        }
    }
    json dj;
    dj["format"] = "bgc-dataset";
    dj["version"] = 1;
    dj["seed"] = o.seed;
    dj["n_storms"] = o.storms;
    dj["hash"] = fmt("%016llx",
                     static_cast<unsigned long long>(ds.content_hash()));
    dj["window_cells"] = wc;
    json var_names = json::array();
    for (const auto v : vars) var_names.push_back(std::string(var_name(v)));
    dj["vars"] = std::move(var_names);
    dj["truth"] = "truth.csv";
    dj["entries"] = std::move(entries);
    binio::write_file((fs::path(o.out) / "dataset.json").string(),
                      dj.dump(2) + "\n");
    std::cout << fmt("synth: %d storms, %d cubes, hash %s -> %s\n", o.storms,
                     files,
                     dj["hash"].get<std::string>().c_str(), o.out.c_str());
}

// ---------------------------------------------------------------------------
// track

struct TrackOpts {
    std::string data, out, config, run_id;
    std::vector<std::string> sets;
    int jobs = 1;
    bool force = false;
};

void cmd_track(const TrackOpts& o) {
    const Config cfg = effective_config(o.config, o.sets);
    const auto tcfg = tracker::TrackerConfig::from_config(cfg);
    const double wind_radius = cfg.get_double("track.wind_radius_deg", 2.0);
    const DataIndex idx = load_index(o.data);

    require_fresh({o.out, o.out + ".manifest.json"}, o.force);
    write_manifest(o.out + ".manifest.json",
                   {"track", &cfg, 0, {o.data}, {o.out}});

    const TruthMap tm = truth_map(idx.truth);
    const auto storms = group_by_storm(idx);
    std::vector<std::vector<eval::PredRecord>> per(storms.size());
    parallel_items(storms.size(), o.jobs, [&](std::size_t si) {
        kinematic_walk(idx, storms[si].second, tm, tcfg,
                       [&](const DataEntry& e, const gridstore::FieldCube& cube,
                           tracker::TrackFix fix) {
                           per[si].push_back(
                               {e.storm_id, e.valid_time, e.lead_h, fix.lat,
                                fix.lon,
                                diagnosed_wind(cube, {fix.lat, fix.lon},
                                               wind_radius)});
                       });
    });

    eval::ForecastRun run;
    run.config_hash = cfg.hash_hex();
    run.run_id = o.run_id.empty() ? "kinematic-" + run.config_hash.substr(0, 8)
                                  : o.run_id;
    for (auto& v : per)
        run.preds.insert(run.preds.end(), v.begin(), v.end());
    write_run(o.out, run, "track", o.data);
    std::cout << fmt("track: %zu fixes over %zu storms -> %s\n",
                     run.preds.size(), storms.size(), o.out.c_str());
}

// ---------------------------------------------------------------------------
// train-track

struct TrainTrackOpts {
    std::string data, out, config, head;
    std::vector<std::string> sets;
    std::int64_t seed = -1;
    int epochs = -1;
    double lr = -1.0;
    int jobs = -1;
    bool force = false;
};

std::vector<correction::TrackCase> collect_track_cases(
    const DataIndex& idx, const Config& cfg, const correction::ModelSpec& spec,
    int jobs) {
    const std::string mode = cfg.get_str("prior.mode", "tracker");
    const auto storms = group_by_storm(idx);
    const TruthMap tm = truth_map(idx.truth);
    std::vector<std::vector<correction::TrackCase>> per(storms.size());

    if (mode == "tracker") {
        const auto tcfg = tracker::TrackerConfig::from_config(cfg);
        parallel_items(storms.size(), jobs, [&](std::size_t si) {
            kinematic_walk(
                idx, storms[si].second, tm, tcfg,
                [&](const DataEntry& e, const gridstore::FieldCube& cube,
                    tracker::TrackFix fix) {
                    const auto* t = must_truth(tm, e.storm_id, e.valid_time);
                    // A lost storm can wander; the window is cut where the
                    // clamped prior lands, with the truth kept inside it.
                    const LatLon prior = clamp_interior(
                        {fix.lat, fix.lon}, cube.spec,
                        prior_margin_for(cube.spec, spec.window_half));
                    per[si].push_back(
                        {e.storm_id,
                         gridstore::crop_window(cube, prior, spec.window_half)
                             .select_vars(spec.vars),
                         prior,
                         {t->lat, t->lon}});
                });
        });
    } else if (mode == "bias") {
        const double blat = cfg.get_double("prior.bias_lat_deg", 0.2);
        const double blon = cfg.get_double("prior.bias_lon_deg", 0.2);
        const double noise = cfg.get_double("prior.noise_deg", 0.1);
        const auto pseed =
            static_cast<std::uint64_t>(cfg.get_int("prior.seed", 1));
        parallel_items(storms.size(), jobs, [&](std::size_t si) {
            const auto& [id, leads] = storms[si];
            Rng rng = Rng(pseed).fork(fnv1a(id.data(), id.size()));
            for (const DataEntry* e : leads) {
                const auto cube = load_cube(idx, *e);
                const auto* t = must_truth(tm, id, e->valid_time);
                const LatLon prior = clamp_interior(
                    {t->lat + blat + noise * rng.normal(),
                     wrap_lon(t->lon + blon + noise * rng.normal())},
                    cube.spec,
                    prior_margin_for(cube.spec, spec.window_half));
                per[si].push_back(
                    {id,
                     gridstore::crop_window(cube, prior, spec.window_half)
                         .select_vars(spec.vars),
                     prior,
                     {t->lat, t->lon}});
            }
        });
    } else {
        throw ConfigError(
            fmt("prior.mode must be tracker or bias, got \"%s\"",
                mode.c_str()));
    }

    std::vector<correction::TrackCase> cases;
    for (auto& v : per)
        for (auto& c : v) cases.push_back(std::move(c));
    return cases;
}

void cmd_train_track(const TrainTrackOpts& o) {
    Config cfg = effective_config(o.config, o.sets);
    if (!o.head.empty()) cfg.set("correction.head", o.head);
    if (o.seed >= 0) cfg.set("train.seed", std::to_string(o.seed));
    if (o.epochs >= 0) cfg.set("train.epochs", std::to_string(o.epochs));
    if (o.lr >= 0.0) cfg.set("train.lr", fmt("%.17g", o.lr));
    if (o.jobs >= 1) cfg.set("train.jobs", std::to_string(o.jobs));

    const auto spec = correction_spec_from(cfg);
    const auto tc = train_config_from(cfg, 3e-3, 80);
    const DataIndex idx = load_index(o.data);

    require_fresh({o.out, o.out + ".manifest.json"}, o.force);
    write_manifest(o.out + ".manifest.json",
                   {"train-track", &cfg, tc.seed, {o.data}, {o.out}});

    auto cases = collect_track_cases(idx, cfg, spec, std::max(tc.jobs, 1));
    const auto split = correction::split_by_storm(
        cases, cfg.get_double("split.val_fraction", 0.2),
        static_cast<std::uint64_t>(cfg.get_int("split.seed", 1)));
    const auto report = correction::train_model(spec, split.train, split.val, tc);
    ensure_parent_dir(o.out);
    correction::save_model(o.out, report.model);

    double best_val = 0.0;
    for (const auto& ep : report.log)
        if (ep.is_best) best_val = ep.val_loss;
    std::cout << fmt(
        "train-track: %zu cases (%zu train / %zu val), %d epochs, "
        "best val loss %.6g -> %s\n",
        cases.size(), split.train.size(), split.val.size(), tc.epochs,
        best_val, o.out.c_str());
}

// ---------------------------------------------------------------------------
// refine

struct RefineOpts {
    std::string data, ckpt, out, config, run_id;
    std::vector<std::string> sets;
    int jobs = 1;
    bool force = false;
};

void cmd_refine(const RefineOpts& o) {
    const Config cfg = effective_config(o.config, o.sets);
    const auto tcfg = tracker::TrackerConfig::from_config(cfg);
    const double wind_radius = cfg.get_double("track.wind_radius_deg", 2.0);
    const correction::Model model = correction::load_model(o.ckpt);
    const DataIndex idx = load_index(o.data);

    require_fresh({o.out, o.out + ".manifest.json"}, o.force);
    write_manifest(o.out + ".manifest.json",
                   {"refine", &cfg, 0, {o.data, o.ckpt}, {o.out}});

    const TruthMap tm = truth_map(idx.truth);
    const auto storms = group_by_storm(idx);
    std::vector<std::vector<eval::PredRecord>> per(storms.size());
    parallel_items(storms.size(), o.jobs, [&](std::size_t si) {
        kinematic_walk(idx, storms[si].second, tm, tcfg,
                       [&](const DataEntry& e, const gridstore::FieldCube& cube,
                           tracker::TrackFix fix) {
                           const LatLon prior = clamp_interior(
                               {fix.lat, fix.lon}, cube.spec,
                               prior_margin_for(cube.spec,
                                                model.spec.window_half));
                           const LatLon refined =
                               correction::refine_fix(model, cube, prior);
                           per[si].push_back(
                               {e.storm_id, e.valid_time, e.lead_h, refined.lat,
                                refined.lon,
                                diagnosed_wind(cube, refined, wind_radius)});
                       });
    });

    eval::ForecastRun run;
    run.config_hash = cfg.hash_hex();
    run.run_id = o.run_id.empty() ? "refined-" + run.config_hash.substr(0, 8)
                                  : o.run_id;
    for (auto& v : per)
        run.preds.insert(run.preds.end(), v.begin(), v.end());
    write_run(o.out, run, "refine", o.data);
    std::cout << fmt("refine: %zu fixes over %zu storms -> %s\n",
                     run.preds.size(), storms.size(), o.out.c_str());
}

// ---------------------------------------------------------------------------
// train-intensity

struct TrainIntensityOpts {
    std::string data, out, config, basin;
    std::vector<std::string> sets;
    std::int64_t seed = -1;
    int epochs = -1;
    double lr = -1.0;
    int jobs = -1;
    bool force = false;
};

// Diagnosed peak wind near the window center.  The disk keeps the
// calibration pair local to this storm; a full-window maximum would read the
// stronger storm of a twin pair for both of them.
double center_speed_max(const gridstore::FieldCube& w, double radius_deg) {
    const LatLon c = gridstore::index_to_latlon((w.spec.nlat - 1) * 0.5,
                                                (w.spec.nlon - 1) * 0.5,
                                                w.spec);
    return diagnosed_wind(w, c, radius_deg);
}

std::vector<gridstore::VariableId> with_wind_vars(
    std::vector<gridstore::VariableId> vars) {
    for (const auto v :
         {gridstore::VariableId::U10, gridstore::VariableId::V10})
        if (std::find(vars.begin(), vars.end(), v) == vars.end())
            vars.push_back(v);
    return vars;
}

void cmd_train_intensity(const TrainIntensityOpts& o) {
    Config cfg = effective_config(o.config, o.sets);
    if (!o.basin.empty()) cfg.set("intensity.basin", o.basin);
    if (o.seed >= 0) cfg.set("train.seed", std::to_string(o.seed));
    if (o.epochs >= 0) cfg.set("train.epochs", std::to_string(o.epochs));
    if (o.lr >= 0.0) cfg.set("train.lr", fmt("%.17g", o.lr));
    if (o.jobs >= 1) cfg.set("train.jobs", std::to_string(o.jobs));

    const auto spec = intensity_spec_from(cfg);
    // Wind targets sit tens of m/s above the near-zero init, so the head
    // needs a wind-scale learning rate and a few hundred steps by default.
    const auto tc = train_config_from(cfg, 0.05, 200);
    const DataIndex idx = load_index(o.data);

    const int wc = cfg.get_int("intensity.window_cells", 56);
    if (wc < spec.net.region_cells || wc > idx.window_cells)
        throw ConfigError(
            fmt("intensity.window_cells=%d must lie in [%d, %d]", wc,
                spec.net.region_cells, idx.window_cells));
    const int off = (idx.window_cells - wc) / 2;

    require_fresh({o.out, o.out + ".manifest.json"}, o.force);
    write_manifest(o.out + ".manifest.json",
                   {"train-intensity", &cfg, tc.seed, {o.data}, {o.out}});

    const TruthMap tm = truth_map(idx.truth);
    const auto keep = with_wind_vars(spec.vars);
    std::vector<intensity::IntensityCase> cases(idx.entries.size());
    std::vector<std::string> case_storm(idx.entries.size());
    std::vector<double> vmax(idx.entries.size());
    parallel_items(idx.entries.size(), std::max(tc.jobs, 1),
                   [&](std::size_t i) {
                       const DataEntry& e = idx.entries[i];
                       const auto cube = load_cube(idx, e);
                       cases[i] = {e.storm_id,
                                   gridstore::crop_cells(cube, off, off, wc, wc)
                                       .select_vars(keep)};
                       case_storm[i] = e.storm_id;
                       vmax[i] =
                           must_truth(tm, e.storm_id, e.valid_time)->max_wind;
                   });

    const auto [train_ix, val_ix] = split_indices_by_storm(
        case_storm, cfg.get_double("split.val_fraction", 0.2),
        static_cast<std::uint64_t>(cfg.get_int("split.seed", 1)));

    // Calibration maps the coarse-grid diagnosed maximum onto the continuous
    // peak wind; fitted on the training storms only.
    const double calib_radius = cfg.get_double("intensity.calib_radius_deg", 1.0);
    std::vector<std::pair<double, double>> pairs;
    for (const std::size_t i : train_ix)
        pairs.push_back({center_speed_max(cases[i].window, calib_radius),
                         vmax[i]});
    const auto calib = intensity::calibrate(pairs);

    std::vector<intensity::IntensityCase> train_cases, val_cases;
    for (const std::size_t i : train_ix)
        train_cases.push_back(std::move(cases[i]));
    for (const std::size_t i : val_ix) val_cases.push_back(std::move(cases[i]));

    const auto report =
        intensity::train_model(spec, calib, train_cases, val_cases, tc);
    ensure_parent_dir(o.out);
    intensity::save_model(o.out, report.model);

    double best_val = 0.0;
    for (const auto& ep : report.log)
        if (ep.is_best) best_val = ep.val_loss;
    std::cout << fmt(
        "train-intensity: %zu cases (%zu train / %zu val), calibration "
        "a=%.4f b=%.4f, best val loss %.6g -> %s\n",
        case_storm.size(), train_cases.size(), val_cases.size(), calib.a,
        calib.b, best_val, o.out.c_str());
}

// ---------------------------------------------------------------------------
// intensity

struct IntensityOpts {
    std::string run, ckpt, data, out, config, run_id;
    std::vector<std::string> sets;
    int jobs = 1;
    bool force = false;
};

void cmd_intensity(const IntensityOpts& o) {
    const Config cfg = effective_config(o.config, o.sets);
    const intensity::Model model = intensity::load_model(o.ckpt);
    std::string run_data;
    const eval::ForecastRun base = run_from_file(o.run, &run_data);
    const std::string data_dir = o.data.empty() ? run_data : o.data;
    const DataIndex idx = load_index(data_dir);

    const int wc = cfg.get_int("intensity.window_cells", 56);
    if (wc < model.spec.net.region_cells || wc > idx.window_cells)
        throw ConfigError(
            fmt("intensity.window_cells=%d must lie in [%d, %d]", wc,
                model.spec.net.region_cells, idx.window_cells));
    const int off = (idx.window_cells - wc) / 2;

    require_fresh({o.out, o.out + ".manifest.json"}, o.force);
    write_manifest(o.out + ".manifest.json",
                   {"intensity", &cfg, 0, {o.run, o.ckpt, data_dir}, {o.out}});

    std::map<std::pair<std::string, int>, const DataEntry*> by_key;
    for (const auto& e : idx.entries) by_key[{e.storm_id, e.lead_h}] = &e;

    eval::ForecastRun out_run;
    out_run.config_hash = cfg.hash_hex();
    out_run.run_id = o.run_id.empty() ? base.run_id + "+si" : o.run_id;
    out_run.preds = base.preds;
    parallel_items(out_run.preds.size(), o.jobs, [&](std::size_t i) {
        eval::PredRecord& p = out_run.preds[i];
        const auto it = by_key.find({p.storm_id, p.lead_h});
        if (it == by_key.end())
            throw ParseError(fmt("%s: dataset has no cube for %s lead %d h",
                                 o.run.c_str(), p.storm_id.c_str(), p.lead_h));
        const auto cube = load_cube(idx, *it->second);
        const auto window = gridstore::crop_cells(cube, off, off, wc, wc)
                                .select_vars(model.spec.vars);
        const auto map = intensity::predict(model, window);
        p.wind_ms = intensity::coupled_lookup({p.lat, p.lon}, map);
    });
    write_run(o.out, out_run, "intensity", data_dir);
    std::cout << fmt("intensity: %zu winds attached (%s) -> %s\n",
                     out_run.preds.size(), out_run.run_id.c_str(),
                     o.out.c_str());
}

// ---------------------------------------------------------------------------
// eval

struct EvalOpts {
    std::string run, baseline, truth, out, config;
    std::vector<std::string> sets;
    bool force = false;
};

void cmd_eval(const EvalOpts& o) {
    const Config cfg = effective_config(o.config, o.sets);
    std::string data_a;
    const eval::ForecastRun run_a = run_from_file(o.run, &data_a);
    const std::string truth_path =
        o.truth.empty() ? (fs::path(data_a) / "truth.csv").string() : o.truth;
    const auto truth = gridstore::read_besttrack_csv(truth_path);

    require_fresh_dir(o.out, o.force);
    fs::create_directories(o.out);
    CommandIo io{"eval", &cfg, 0, {o.run, truth_path}, {o.out}};
    if (!o.baseline.empty()) io.inputs.push_back(o.baseline);
    write_manifest((fs::path(o.out) / "manifest.json").string(), io);

    const auto report = eval::evaluate_run(run_a, truth);
    binio::write_file((fs::path(o.out) / "error_table.csv").string(),
                      eval::error_table_csv(report));
    const std::string text = eval::report_text(report);
    binio::write_file((fs::path(o.out) / "report.txt").string(), text);
    std::cout << text;

    if (!o.baseline.empty()) {
        const eval::ForecastRun run_b = run_from_file(o.baseline, nullptr);
        const auto rows = eval::compare_runs(run_a, run_b, truth);
        binio::write_file((fs::path(o.out) / "comparison.csv").string(),
                          eval::comparison_csv(rows));
        std::cout << fmt("vs baseline %s (positive favors %s):\n",
                         run_b.run_id.c_str(), run_a.run_id.c_str());
        for (const auto& r : rows)
            std::cout << fmt("  %3d h  %-12s %+8.2f%%\n", r.lead_h,
                             r.metric.c_str(), r.improvement_pct);
    }
}

// ---------------------------------------------------------------------------
// gridlock

struct GridlockOpts {
    std::string out;
    int n = 10000;
    double cell = 0.25;
    std::uint64_t seed = 1;
    bool force = false;
};

void cmd_gridlock(const GridlockOpts& o) {
    const auto r = eval::grid_locking_study(o.n, o.cell, o.seed);
    std::cout << fmt("grid-locking study: n=%d, cell=%.4g deg\n", r.n,
                     r.cell_size_deg);
    std::cout << fmt("%-12s %14s %14s %10s\n", "decoder", "mean|dlat| deg",
                     "mean|dlon| deg", "mean km");
    std::cout << fmt("%-12s %14.6f %14.6f %10.3f\n", "argmax",
                     r.argmax_abs_lat_deg, r.argmax_abs_lon_deg,
                     r.argmax_mean_km);
    std::cout << fmt("%-12s %14.6f %14.6f %10.3f\n", "expectation",
                     r.expectation_abs_lat_deg, r.expectation_abs_lon_deg,
                     r.expectation_mean_km);
    if (!o.out.empty()) {
        require_fresh({o.out, o.out + ".manifest.json"}, o.force);
        const Config cfg = Config::from_text("");
        write_manifest(o.out + ".manifest.json",
                       {"gridlock", &cfg, o.seed, {}, {o.out}});
        std::string csv =
            "decoder,n,cell_deg,mean_abs_lat_deg,mean_abs_lon_deg,mean_km\n";
        csv += fmt("argmax,%d,%.17g,%.17g,%.17g,%.17g\n", r.n, r.cell_size_deg,
                   r.argmax_abs_lat_deg, r.argmax_abs_lon_deg,
                   r.argmax_mean_km);
        csv += fmt("expectation,%d,%.17g,%.17g,%.17g,%.17g\n", r.n,
                   r.cell_size_deg, r.expectation_abs_lat_deg,
                   r.expectation_abs_lon_deg, r.expectation_mean_km);
        ensure_parent_dir(o.out);
        binio::write_file(o.out, csv);
    }
}

// ---------------------------------------------------------------------------

constexpr const char* kCommonKeys =
    "Common flags: --config FILE (key=value lines), --set key=value\n"
    "(repeatable, wins over the file), --force to overwrite outputs.\n";

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "bgc: synthetic tropical-cyclone pipeline (dataset generation, "
        "kinematic tracking, probabilistic center correction, region "
        "intensity, verification)"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("bgc ") + kVersion);

    SynthOpts so;
    auto* synth = app.add_subcommand(
        "synth", "Generate a seeded synthetic dataset (BGC1 cubes + CSV)");
    synth->add_option("--out", so.out, "dataset directory")->required();
    synth->add_option("--seed", so.seed, "generation seed");
    synth->add_option("--storms", so.storms, "number of storms");
    synth->add_option("--mix", so.mix, "scenario-mix config file");
    synth->add_option("--config", so.config, "config file");
    synth->add_option("--set", so.sets, "config override key=value");
    synth->add_flag("--force", so.force, "overwrite existing outputs");
    synth->footer(std::string(kCommonKeys) +
                  "Config keys: synth.window_cells (odd, default 61), "
                  "synth.vars (comma list).\n"
                  "Mix file keys: mix.straight, mix.recurve, mix.stall, "
                  "mix.twin, mix.reintensify (sum to 1).");

    TrackOpts to;
    auto* track = app.add_subcommand(
        "track", "Run the kinematic tracker over a dataset");
    track->add_option("--data", to.data, "dataset directory")->required();
    track->add_option("--out", to.out, "output run.json")->required();
    track->add_option("--config", to.config, "config file");
    track->add_option("--set", to.sets, "config override key=value");
    track->add_option("--run-id", to.run_id, "run identifier");
    track->add_option("--jobs", to.jobs, "parallel storms");
    track->add_flag("--force", to.force, "overwrite existing outputs");
    track->footer(std::string(kCommonKeys) +
                  "Config keys: steering.radius_deg, steering.weights, "
                  "extrapolate.alpha, refine.box_schedule, "
                  "track.wind_radius_deg.");

    TrainTrackOpts tto;
    auto* train_track = app.add_subcommand(
        "train-track", "Train a center-correction model on a dataset");
    train_track->add_option("--data", tto.data, "dataset directory")
        ->required();
    train_track->add_option("--out", tto.out, "output checkpoint")->required();
    train_track->add_option("--head", tto.head, "density | residual");
    train_track->add_option("--seed", tto.seed, "training seed");
    train_track->add_option("--epochs", tto.epochs, "training epochs");
    train_track->add_option("--lr", tto.lr, "learning rate");
    train_track->add_option("--jobs", tto.jobs, "training threads");
    train_track->add_option("--config", tto.config, "config file");
    train_track->add_option("--set", tto.sets, "config override key=value");
    train_track->add_flag("--force", tto.force, "overwrite existing outputs");
    train_track->footer(std::string(kCommonKeys) +
                        "Config keys: correction.head, correction.vars, "
                        "correction.hidden, correction.activation, "
                        "correction.window_half, correction.sigma_deg, "
                        "correction.radius_deg, correction.metric;\n"
                        "train.optimizer, train.lr, train.epochs, "
                        "train.batch, train.seed, train.jobs; "
                        "split.val_fraction, split.seed;\n"
                        "prior.mode (tracker|bias), prior.bias_lat_deg, "
                        "prior.bias_lon_deg, prior.noise_deg, prior.seed; "
                        "plus the track config keys when prior.mode=tracker.");

    RefineOpts ro;
    auto* refine = app.add_subcommand(
        "refine", "Refine kinematic fixes with a trained correction model");
    refine->add_option("--data", ro.data, "dataset directory")->required();
    refine->add_option("--ckpt", ro.ckpt, "correction checkpoint")->required();
    refine->add_option("--out", ro.out, "output run.json")->required();
    refine->add_option("--config", ro.config, "config file");
    refine->add_option("--set", ro.sets, "config override key=value");
    refine->add_option("--run-id", ro.run_id, "run identifier");
    refine->add_option("--jobs", ro.jobs, "parallel storms");
    refine->add_flag("--force", ro.force, "overwrite existing outputs");
    refine->footer(std::string(kCommonKeys) +
                   "Config keys: the track config keys (priors come from the "
                   "kinematic tracker); the model itself is read from --ckpt.");

    TrainIntensityOpts tio;
    auto* train_intensity = app.add_subcommand(
        "train-intensity", "Train a region intensity model on a dataset");
    train_intensity->add_option("--data", tio.data, "dataset directory")
        ->required();
    train_intensity->add_option("--out", tio.out, "output checkpoint")
        ->required();
    train_intensity->add_option("--basin", tio.basin,
                                "basin code (WP, EP, NA, NI, SI, SP)");
    train_intensity->add_option("--seed", tio.seed, "training seed");
    train_intensity->add_option("--epochs", tio.epochs, "training epochs");
    train_intensity->add_option("--lr", tio.lr, "learning rate");
    train_intensity->add_option("--jobs", tio.jobs, "training threads");
    train_intensity->add_option("--config", tio.config, "config file");
    train_intensity->add_option("--set", tio.sets,
                                "config override key=value");
    train_intensity->add_flag("--force", tio.force,
                              "overwrite existing outputs");
    train_intensity->footer(std::string(kCommonKeys) +
                            "Config keys: intensity.basin, intensity.p, "
                            "intensity.n_merge, intensity.window_cells, "
                            "intensity.calib_radius_deg, "
                            "intensity.vars, intensity.hidden, "
                            "intensity.activation;\n"
                            "train.optimizer, train.lr, train.epochs, "
                            "train.batch, train.seed, train.jobs; "
                            "split.val_fraction, split.seed.");

    IntensityOpts io2;
    auto* intensity_cmd = app.add_subcommand(
        "intensity",
        "Attach region-intensity winds to a run's fixes (pass the refined "
        "run for coupled lookups, the raw tracker run for a decoupled "
        "baseline)");
    intensity_cmd
        ->add_option("--coupled", io2.run,
                     "run.json whose fixes index the region map")
        ->required();
    intensity_cmd->add_option("--ckpt", io2.ckpt, "intensity checkpoint")
        ->required();
    intensity_cmd->add_option("--out", io2.out, "output run.json")->required();
    intensity_cmd->add_option("--data", io2.data,
                              "dataset directory (default: the run's)");
    intensity_cmd->add_option("--config", io2.config, "config file");
    intensity_cmd->add_option("--set", io2.sets, "config override key=value");
    intensity_cmd->add_option("--run-id", io2.run_id, "run identifier");
    intensity_cmd->add_option("--jobs", io2.jobs, "parallel fixes");
    intensity_cmd->add_flag("--force", io2.force,
                            "overwrite existing outputs");
    intensity_cmd->footer(std::string(kCommonKeys) +
                          "Config keys: intensity.window_cells.");

    EvalOpts eo;
    auto* eval_cmd = app.add_subcommand(
        "eval", "Verify a run against ground truth; optionally compare runs");
    eval_cmd->add_option("--run", eo.run, "run.json to evaluate")->required();
    eval_cmd->add_option("--baseline", eo.baseline,
                         "baseline run.json for comparison");
    eval_cmd->add_option("--truth", eo.truth,
                         "truth CSV (default: the run's dataset truth.csv)");
    eval_cmd->add_option("--out", eo.out, "report directory")->required();
    eval_cmd->add_option("--config", eo.config, "config file");
    eval_cmd->add_option("--set", eo.sets, "config override key=value");
    eval_cmd->add_flag("--force", eo.force, "overwrite existing outputs");
    eval_cmd->footer(std::string(kCommonKeys) + "Config keys: none.");

    GridlockOpts go;
    auto* gridlock = app.add_subcommand(
        "gridlock",
        "Quantify the argmax vs expectation decoder grid-locking error");
    gridlock->add_option("--n", go.n, "sample count");
    gridlock->add_option("--cell", go.cell, "cell size in degrees");
    gridlock->add_option("--seed", go.seed, "sampling seed");
    gridlock->add_option("--out", go.out, "optional CSV output path");
    gridlock->add_flag("--force", go.force, "overwrite existing outputs");
    gridlock->footer("Config keys: none.");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "bgc: Usage: " << e.what() << "\n";
        return 2;
    }

    try {
        if (synth->parsed()) cmd_synth(so);
        if (track->parsed()) cmd_track(to);
        if (train_track->parsed()) cmd_train_track(tto);
        if (refine->parsed()) cmd_refine(ro);
        if (train_intensity->parsed()) cmd_train_intensity(tio);
        if (intensity_cmd->parsed()) cmd_intensity(io2);
        if (eval_cmd->parsed()) cmd_eval(eo);
        if (gridlock->parsed()) cmd_gridlock(go);
    } catch (const Error& e) {
        std::cerr << "bgc: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "bgc: Internal: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
