#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace bgc::gridstore {

inline constexpr const char* kBestTrackHeader =
    "storm_id,basin,timestamp,lat,lon,max_wind_ms,min_pres_hpa";

struct BestTrackRecord {
    std::string storm_id;
    std::string basin;
    std::int64_t timestamp = 0;
    double lat = 0.0;
    double lon = 0.0;
    double max_wind = 0.0;
    std::optional<double> min_pressure;

    bool operator==(const BestTrackRecord&) const = default;
};

bool is_known_basin(const std::string& basin);

// Records come back sorted by (storm_id, timestamp).  Throws ParseError with
// the 1-based row number (the header is row 1) and DuplicateFix on repeated
// (storm_id, timestamp) pairs.
std::vector<BestTrackRecord> read_besttrack_csv(const std::string& path);
std::vector<BestTrackRecord> parse_besttrack_csv(const std::string& text,
                                                 const std::string& context);

void write_besttrack_csv(const std::vector<BestTrackRecord>& records,
                         const std::string& path);
std::string format_besttrack_csv(const std::vector<BestTrackRecord>& records);

}  // namespace bgc::gridstore
