#include "bgc/gridstore/best_track.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "bgc/binio.hpp"
#include "bgc/errors.hpp"
#include "bgc/geo.hpp"
#include "bgc/timeutil.hpp"

namespace bgc::gridstore {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_number(const std::string& s, const char* field, int row,
                    const std::string& context) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size() || !std::isfinite(v))
            throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ParseError(context + ": row " + std::to_string(row) + ": " +
                         field + " is not a number: '" + s + "'");
    }
}

}  // namespace

bool is_known_basin(const std::string& basin) {
    return basin == "WP" || basin == "EP" || basin == "NA" || basin == "NI" ||
           basin == "SI" || basin == "SP";
}

std::vector<BestTrackRecord> parse_besttrack_csv(const std::string& text,
                                                 const std::string& context) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line))
        throw ParseError(context + ": empty file, expected header row");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kBestTrackHeader)
        throw ParseError(context + ": row 1: header must be exactly '" +
                         std::string(kBestTrackHeader) + "'");

    std::vector<BestTrackRecord> out;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        const auto f = split_fields(line);
        if (f.size() != 7)
            throw ParseError(context + ": row " + std::to_string(row) +
                             ": expected 7 fields, got " +
                             std::to_string(f.size()));
        BestTrackRecord rec;
        rec.storm_id = f[0];
        rec.basin = f[1];
        if (rec.storm_id.empty())
            throw ParseError(context + ": row " + std::to_string(row) +
                             ": empty storm_id");
        if (!is_known_basin(rec.basin))
            throw ParseError(context + ": row " + std::to_string(row) +
                             ": unknown basin '" + rec.basin + "'");
        try {
            rec.timestamp = parse_iso8601(f[2]);
        } catch (const Error& e) {
            throw ParseError(context + ": row " + std::to_string(row) + ": " +
                             e.what());
        }
        rec.lat = parse_number(f[3], "lat", row, context);
        rec.lon = wrap_lon(parse_number(f[4], "lon", row, context));
        rec.max_wind = parse_number(f[5], "max_wind_ms", row, context);
        if (rec.lat < -90.0 || rec.lat > 90.0)
            throw ParseError(context + ": row " + std::to_string(row) +
                             ": lat " + f[3] + " outside [-90, 90]");
        if (rec.max_wind < 0.0)
            throw ParseError(context + ": row " + std::to_string(row) +
                             ": negative max_wind_ms");
        if (!f[6].empty()) {
            const double p = parse_number(f[6], "min_pres_hpa", row, context);
            if (p <= 800.0 || p >= 1100.0)
                throw ParseError(context + ": row " + std::to_string(row) +
                                 ": min_pres_hpa " + f[6] +
                                 " outside (800, 1100)");
            rec.min_pressure = p;
        }
        out.push_back(std::move(rec));
    }

    std::stable_sort(out.begin(), out.end(),
                     [](const BestTrackRecord& a, const BestTrackRecord& b) {
                         if (a.storm_id != b.storm_id)
                             return a.storm_id < b.storm_id;
                         return a.timestamp < b.timestamp;
                     });
    for (std::size_t k = 1; k < out.size(); ++k) {
        if (out[k].storm_id == out[k - 1].storm_id &&
            out[k].timestamp == out[k - 1].timestamp)
            throw DuplicateFix(context + ": duplicate fix for storm '" +
                               out[k].storm_id + "' at " +
                               format_iso8601(out[k].timestamp));
    }
    return out;
}

std::vector<BestTrackRecord> read_besttrack_csv(const std::string& path) {
    return parse_besttrack_csv(binio::read_file(path), path);
}

std::string format_besttrack_csv(const std::vector<BestTrackRecord>& records) {
    std::string out = kBestTrackHeader;
    out += '\n';
    char buf[160];
    for (const BestTrackRecord& r : records) {
        std::snprintf(buf, sizeof(buf), "%s,%s,%s,%.6f,%.6f,%.3f,",
                      r.storm_id.c_str(), r.basin.c_str(),
                      format_iso8601(r.timestamp).c_str(), r.lat,
                      wrap_lon(r.lon), r.max_wind);
        out += buf;
        if (r.min_pressure) {
            std::snprintf(buf, sizeof(buf), "%.2f", *r.min_pressure);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

void write_besttrack_csv(const std::vector<BestTrackRecord>& records,
                         const std::string& path) {
    binio::write_file(path, format_besttrack_csv(records));
}

}  // namespace bgc::gridstore
