#include "bgc/synth/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <string>

#include "bgc/errors.hpp"
#include "bgc/rng.hpp"
#include "bgc/timeutil.hpp"

namespace bgc::synth {

using gridstore::BestTrackRecord;
using gridstore::FieldCube;
using gridstore::GridSpec;

void ScenarioScript::validate() const {
    if (storms.empty()) throw SpecMismatch("scenario: no storms");
    std::set<std::string> ids;
    for (const auto& s : storms) {
        if (s.storm_id.empty()) throw SpecMismatch("scenario: empty storm id");
        if (!ids.insert(s.storm_id).second)
            throw SpecMismatch("scenario: duplicate storm id " + s.storm_id);
        if (!gridstore::is_known_basin(s.basin))
            throw SpecMismatch("scenario: unknown basin " + s.basin);
        if (s.keys.empty())
            throw SpecMismatch("scenario: storm " + s.storm_id +
                               " has no keyframes");
        for (std::size_t k = 0; k + 1 < s.keys.size(); ++k)
            if (!(s.keys[k].t_hours < s.keys[k + 1].t_hours))
                throw SpecMismatch("scenario: keyframe times must increase");
        for (const auto& key : s.keys) key.params.validate();
    }
    if (lead_hours.empty()) throw SpecMismatch("scenario: no lead times");
    grid.validate();
}

VortexParams params_at(const StormScript& storm, double t_hours) {
    if (storm.keys.empty())
        throw SpecMismatch("scenario: storm " + storm.storm_id +
                           " has no keyframes");
    const double lo = storm.keys.front().t_hours;
    const double hi = storm.keys.back().t_hours;
    constexpr double eps = 1e-9;
    if (t_hours < lo - eps || t_hours > hi + eps)
        throw OutOfSpan("t = " + std::to_string(t_hours) + " h outside storm " +
                        storm.storm_id + " span [" + std::to_string(lo) + ", " +
                        std::to_string(hi) + "]");
    if (storm.keys.size() == 1) return storm.keys.front().params;

    std::size_t k = 0;
    while (k + 2 < storm.keys.size() && storm.keys[k + 1].t_hours < t_hours) ++k;
    const Keyframe& a = storm.keys[k];
    const Keyframe& b = storm.keys[k + 1];
    const double f = std::clamp(
        (t_hours - a.t_hours) / (b.t_hours - a.t_hours), 0.0, 1.0);

    auto lerp = [f](double x, double y) { return x + f * (y - x); };
    VortexParams p = a.params;
    p.center.lat = lerp(a.params.center.lat, b.params.center.lat);
    p.center.lon = wrap_lon(a.params.center.lon +
                            f * lon_diff(b.params.center.lon,
                                         a.params.center.lon));
    p.v_max_ms = lerp(a.params.v_max_ms, b.params.v_max_ms);
    p.r_max_km = lerp(a.params.r_max_km, b.params.r_max_km);
    p.shape_b = lerp(a.params.shape_b, b.params.shape_b);
    p.ambient_hpa = lerp(a.params.ambient_hpa, b.params.ambient_hpa);
    p.deficit_hpa = lerp(a.params.deficit_hpa, b.params.deficit_hpa);
    p.bg_u_ms = lerp(a.params.bg_u_ms, b.params.bg_u_ms);
    p.bg_v_ms = lerp(a.params.bg_v_ms, b.params.bg_v_ms);
    return p;
}

FieldCube render_field(const ScenarioScript& script, double t_hours,
                       const GridSpec& spec,
                       const std::vector<gridstore::VariableId>& vars) {
    std::vector<VortexParams> states;
    states.reserve(script.storms.size());
    for (const auto& s : script.storms) states.push_back(params_at(s, t_hours));
    const std::int64_t ts =
        script.init_time + static_cast<std::int64_t>(std::llround(t_hours * 3600));
    return render_vortices(states, spec, ts, vars);
}

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_key(const Keyframe& k) {
    std::string out = fmt_double(k.t_hours);
    const double fields[] = {k.params.center.lat, k.params.center.lon,
                             k.params.v_max_ms,   k.params.r_max_km,
                             k.params.shape_b,    k.params.ambient_hpa,
                             k.params.deficit_hpa, k.params.bg_u_ms,
                             k.params.bg_v_ms};
    for (double f : fields) out += "," + fmt_double(f);
    return out;
}

}  // namespace

Config script_to_config(const ScenarioScript& script) {
    Config c;
    c.set("grid.lat0", fmt_double(script.grid.lat0));
    c.set("grid.lon0", fmt_double(script.grid.lon0));
    c.set("grid.dlat", fmt_double(script.grid.dlat));
    c.set("grid.dlon", fmt_double(script.grid.dlon));
    c.set("grid.nlat", std::to_string(script.grid.nlat));
    c.set("grid.nlon", std::to_string(script.grid.nlon));
    c.set("grid.north_first", script.grid.north_first ? "true" : "false");
    c.set("init_time", format_iso8601(script.init_time));
    std::string leads;
    for (std::size_t i = 0; i < script.lead_hours.size(); ++i)
        leads += (i ? "," : "") + std::to_string(script.lead_hours[i]);
    c.set("leads", leads);
    c.set("storms", std::to_string(script.storms.size()));
    for (std::size_t s = 0; s < script.storms.size(); ++s) {
        const std::string pre = "storm." + std::to_string(s);
        c.set(pre + ".id", script.storms[s].storm_id);
        c.set(pre + ".basin", script.storms[s].basin);
        c.set(pre + ".keys", std::to_string(script.storms[s].keys.size()));
        for (std::size_t k = 0; k < script.storms[s].keys.size(); ++k)
            c.set(pre + ".key." + std::to_string(k),
                  fmt_key(script.storms[s].keys[k]));
    }
    return c;
}

ScenarioScript script_from_config(const Config& cfg) {
    ScenarioScript sc;
    sc.grid.lat0 = cfg.get_double("grid.lat0", 0.0);
    sc.grid.lon0 = cfg.get_double("grid.lon0", 0.0);
    sc.grid.dlat = cfg.get_double("grid.dlat", 0.25);
    sc.grid.dlon = cfg.get_double("grid.dlon", 0.25);
    sc.grid.nlat = cfg.get_int("grid.nlat", 0);
    sc.grid.nlon = cfg.get_int("grid.nlon", 0);
    sc.grid.north_first = cfg.get_bool("grid.north_first", true);
    sc.init_time = parse_iso8601(cfg.get_str("init_time", "1970-01-01T00:00:00Z"));
    for (double h : cfg.get_doubles("leads", {}))
        sc.lead_hours.push_back(static_cast<int>(std::llround(h)));

    const int nstorms = cfg.get_int("storms", 0);
    for (int s = 0; s < nstorms; ++s) {
        const std::string pre = "storm." + std::to_string(s);
        StormScript storm;
        storm.storm_id = cfg.get_str(pre + ".id", "");
        storm.basin = cfg.get_str(pre + ".basin", "WP");
        const int nkeys = cfg.get_int(pre + ".keys", 0);
        for (int k = 0; k < nkeys; ++k) {
            const std::string name = pre + ".key." + std::to_string(k);
            if (!cfg.has(name))
                throw ParseError("scenario: missing " + name);
            const auto f = cfg.get_doubles(name, {});
            if (f.size() != 10)
                throw ParseError("scenario: " + name + " needs 10 fields, got " +
                                 std::to_string(f.size()));
            Keyframe key;
            key.t_hours = f[0];
            key.params.center = {f[1], wrap_lon(f[2])};
            key.params.v_max_ms = f[3];
            key.params.r_max_km = f[4];
            key.params.shape_b = f[5];
            key.params.ambient_hpa = f[6];
            key.params.deficit_hpa = f[7];
            key.params.bg_u_ms = f[8];
            key.params.bg_v_ms = f[9];
            storm.keys.push_back(key);
        }
        sc.storms.push_back(std::move(storm));
    }
    sc.validate();
    return sc;
}

void ScenarioMix::validate() const {
    const double w[] = {straight, recurve, stall, twin, reintensify};
    double sum = 0.0;
    for (double x : w) {
        if (!(x >= 0.0)) throw ConfigError("scenario mix weights must be >= 0");
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw ConfigError("scenario mix weights must sum to 1, got " +
                          std::to_string(sum));
}

ScenarioMix ScenarioMix::from_config(const Config& cfg) {
    ScenarioMix m;
    m.straight = cfg.get_double("mix.straight", m.straight);
    m.recurve = cfg.get_double("mix.recurve", m.recurve);
    m.stall = cfg.get_double("mix.stall", m.stall);
    m.twin = cfg.get_double("mix.twin", m.twin);
    m.reintensify = cfg.get_double("mix.reintensify", m.reintensify);
    m.validate();
    return m;
}

std::uint64_t Dataset::content_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& sc : scenarios) {
        const std::string text = script_to_config(sc).canonical_text();
        h = fnv1a(text.data(), text.size(), h);
    }
    const std::string csv = gridstore::format_besttrack_csv(truth);
    return fnv1a(csv.data(), csv.size(), h);
}

namespace {

enum class Kind { Straight, Recurve, Stall, Twin, Reintensify };

// Degrees-per-hour track velocity converted to the m/s the wind fields use.
constexpr double kDegPerHourToMs = kKmPerDegree * 1000.0 / 3600.0;

struct PathPoint {
    double t = 0.0;
    LatLon pos;
};

double clamp_deficit(double v_max) {
    return std::clamp(1.05 * v_max - 8.0, 8.0, 90.0);
}

StormScript build_storm(const std::string& id, const std::vector<PathPoint>& path,
                        const std::vector<double>& v_max_at, double r_max,
                        double b, Rng& rng) {
    StormScript storm;
    storm.storm_id = id;
    for (std::size_t k = 0; k < path.size(); ++k) {
        Keyframe key;
        key.t_hours = path[k].t;
        key.params.center = path[k].pos;
        key.params.v_max_ms = v_max_at[k];
        key.params.r_max_km = r_max;
        key.params.shape_b = b;
        key.params.ambient_hpa = 1010.0;
        key.params.deficit_hpa = clamp_deficit(v_max_at[k]);

        // Background flow tracks the storm's own motion so the steering-flow
        // average carries real signal.
        const std::size_t seg = k + 1 < path.size() ? k : k - 1;
        const double dt = path[seg + 1].t - path[seg].t;
        const double v_deg =
            (path[seg + 1].pos.lat - path[seg].pos.lat) / dt;
        const double u_deg =
            lon_diff(path[seg + 1].pos.lon, path[seg].pos.lon) / dt;
        key.params.bg_v_ms =
            v_deg * kDegPerHourToMs + rng.uniform(-0.4, 0.4);
        key.params.bg_u_ms =
            u_deg * kDegPerHourToMs * std::cos(deg2rad(path[k].pos.lat)) +
            rng.uniform(-0.4, 0.4);
        storm.keys.push_back(key);
    }
    return storm;
}

ScenarioScript make_scenario(Kind kind, Rng& rng, int first_storm_number,
                             std::int64_t init_time) {
    ScenarioScript sc;
    sc.init_time = init_time;
    for (int h = -6; h <= 72; h += 6) sc.lead_hours.push_back(h);

    const LatLon genesis{rng.uniform(8.0, 28.0), rng.uniform(120.0, 165.0)};
    const double r_max = rng.uniform(25.0, 60.0);
    const double shape_b = rng.uniform(1.2, 2.2);
    const double v0 = rng.uniform(28.0, 42.0);
    const double u1 = rng.uniform(-0.20, -0.08);  // deg/h, westward drift
    const double v1 = rng.uniform(0.02, 0.10);    // deg/h, slow poleward

    auto advance = [](PathPoint p, double u, double v, double hours) {
        PathPoint q;
        q.t = p.t + hours;
        q.pos.lat = p.pos.lat + v * hours;
        q.pos.lon = wrap_lon(p.pos.lon + u * hours);
        return q;
    };

    std::vector<PathPoint> path;
    std::vector<double> vmax;
    PathPoint start{-6.0, genesis};

    switch (kind) {
        case Kind::Straight:
        case Kind::Twin: {
            path = {start, advance(start, u1, v1, 78.0)};
            vmax = {v0, v0 + rng.uniform(-5.0, 8.0)};
            break;
        }
        case Kind::Recurve: {
            const PathPoint mid = advance(start, u1, v1, 36.0);
            const double u2 = -0.7 * u1;
            const double v2 = v1 + rng.uniform(0.08, 0.16);
            path = {start, mid, advance(mid, u2, v2, 42.0)};
            vmax = {v0, v0 + rng.uniform(-2.0, 6.0), v0 + rng.uniform(-8.0, 4.0)};
            break;
        }
        case Kind::Stall: {
            const PathPoint a = advance(start, u1, v1, 30.0);
            const PathPoint b = advance(a, 0.12 * u1, 0.12 * v1, 18.0);
            path = {start, a, b, advance(b, u1, v1, 30.0)};
            vmax = {v0, v0 + rng.uniform(0.0, 5.0), v0 + rng.uniform(-4.0, 4.0),
                    v0 + rng.uniform(-6.0, 4.0)};
            break;
        }
        case Kind::Reintensify: {
            const PathPoint mid = advance(start, u1, v1, 36.0);
            path = {start, mid, advance(mid, u1, v1, 42.0)};
            vmax = {v0, v0 - rng.uniform(6.0, 12.0), v0 + rng.uniform(4.0, 10.0)};
            break;
        }
    }

    char id[16];
    std::snprintf(id, sizeof id, "SYN%04d", first_storm_number);
    sc.storms.push_back(build_storm(id, path, vmax, r_max, shape_b, rng));

    if (kind == Kind::Twin) {
        // Separation straddles the WP twin-distance scale on both sides.
        const double sep = rng.uniform(2.0, 5.0);
        const double bearing = rng.uniform(0.0, 360.0);
        const double dlat = sep * std::cos(deg2rad(bearing));
        const double dlon = sep * std::sin(deg2rad(bearing)) /
                            std::cos(deg2rad(genesis.lat));
        std::vector<PathPoint> p2 = path;
        for (auto& p : p2) {
            p.pos.lat += dlat;
            p.pos.lon = wrap_lon(p.pos.lon + dlon);
        }
        std::vector<double> vm2 = vmax;
        for (auto& v : vm2) v += rng.uniform(-4.0, 4.0);
        std::snprintf(id, sizeof id, "SYN%04d", first_storm_number + 1);
        sc.storms.push_back(build_storm(id, p2, vm2, r_max * rng.uniform(0.8, 1.2),
                                        shape_b, rng));
    }

    // Domain: a 101x101 quarter-degree box centered on the union of key
    // positions, generous enough for off-center crops and steering disks.
    double lat_lo = 90.0, lat_hi = -90.0, lon_ref = path[0].pos.lon;
    double lon_lo = 0.0, lon_hi = 0.0;
    for (const auto& s : sc.storms)
        for (const auto& k : s.keys) {
            lat_lo = std::min(lat_lo, k.params.center.lat);
            lat_hi = std::max(lat_hi, k.params.center.lat);
            const double d = lon_diff(k.params.center.lon, lon_ref);
            lon_lo = std::min(lon_lo, d);
            lon_hi = std::max(lon_hi, d);
        }
    sc.grid.dlat = sc.grid.dlon = 0.25;
    sc.grid.nlat = sc.grid.nlon = 101;
    sc.grid.north_first = true;
    // Snapped to the global quarter-degree lattice, like a real analysis
    // grid; cell-relative offsets of continuous centers stay uniform.
    sc.grid.lat0 =
        std::ceil((0.5 * (lat_lo + lat_hi) + 12.5) / 0.25) * 0.25;
    sc.grid.lon0 = wrap_lon(
        std::floor((lon_ref + 0.5 * (lon_lo + lon_hi) - 12.5) / 0.25) * 0.25);
    sc.validate();
    return sc;
}

}  // namespace

Dataset gen_dataset(std::uint64_t seed, int n_storms, const ScenarioMix& mix) {
    mix.validate();
    if (n_storms < 0) throw ConfigError("n_storms must be >= 0");

    Dataset ds;
    Rng root(seed);
    const std::int64_t base_time = utc_from_civil(2024, 6, 1, 0, 0, 0);

    int made = 0, scenario_idx = 0;
    while (made < n_storms) {
        Rng rng = root.fork(static_cast<std::uint64_t>(scenario_idx));
        const double roll = rng.uniform();
        Kind kind;
        if (roll < mix.straight) kind = Kind::Straight;
        else if (roll < mix.straight + mix.recurve) kind = Kind::Recurve;
        else if (roll < mix.straight + mix.recurve + mix.stall)
            kind = Kind::Stall;
        else if (roll < mix.straight + mix.recurve + mix.stall + mix.twin)
            kind = Kind::Twin;
        else kind = Kind::Reintensify;
        if (kind == Kind::Twin && n_storms - made < 2) kind = Kind::Straight;

        const std::int64_t init =
            base_time + static_cast<std::int64_t>(made) * 10 * 86400;
        ScenarioScript sc = make_scenario(kind, rng, made, init);

        for (const auto& storm : sc.storms) {
            for (int lead : sc.lead_hours) {
                const VortexParams p = params_at(storm, lead);
                BestTrackRecord rec;
                rec.storm_id = storm.storm_id;
                rec.basin = storm.basin;
                rec.timestamp = init + static_cast<std::int64_t>(lead) * 3600;
                rec.lat = p.center.lat;
                rec.lon = p.center.lon;
                rec.max_wind = p.v_max_ms;
                rec.min_pressure = p.ambient_hpa - p.deficit_hpa;
                ds.truth.push_back(std::move(rec));
            }
        }
        made += static_cast<int>(sc.storms.size());
        ds.scenarios.push_back(std::move(sc));
        ++scenario_idx;
    }
    return ds;
}

}  // namespace bgc::synth
