#pragma once

#include <cstdint>
#include <string>

namespace bgc {

// UTC timestamps are carried as seconds since the Unix epoch. Conversions
// are implemented with the days-from-civil algorithm so they do not depend
// on the process time zone.

std::int64_t utc_from_civil(int year, int month, int day, int hour, int minute,
                            int second);

// Formats as ISO-8601 Zulu: 2024-06-29T18:00:00Z
std::string format_iso8601(std::int64_t unix_seconds);

// Parses the exact format above. Throws ParseError on malformed input.
std::int64_t parse_iso8601(const std::string& text);

}  // namespace bgc
