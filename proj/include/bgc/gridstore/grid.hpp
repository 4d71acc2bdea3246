#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bgc/geo.hpp"

namespace bgc::gridstore {

// Regular lat/lon grid.  dlat/dlon are positive magnitudes; row direction is
// carried by north_first (row 0 at lat0 going south when true).
struct GridSpec {
    double lat0 = 0.0;
    double lon0 = 0.0;
    double dlat = 0.25;
    double dlon = 0.25;
    int nlat = 0;
    int nlon = 0;
    bool north_first = true;

    double lat_at(double i) const {
        return north_first ? lat0 - i * dlat : lat0 + i * dlat;
    }
    double lon_at(double j) const { return wrap_lon(lon0 + j * dlon); }

    // True when the grid covers the full circle of longitudes, so column
    // indices wrap modulo nlon.
    bool periodic_lon() const {
        return std::abs(nlon * dlon - 360.0) < 1e-9;
    }

    double lat_min() const { return north_first ? lat_at(nlat - 1) : lat0; }
    double lat_max() const { return north_first ? lat0 : lat_at(nlat - 1); }

    void validate() const;

    bool operator==(const GridSpec&) const = default;
};

// Closed variable catalog.  Pressure-level tags encode family in the high
// nibble and level index (500, 700, 850 hPa) in the low nibble; surface tags
// start at 0x100.
enum class VariableId : std::uint16_t {
    Z500 = 0x10,
    Z700 = 0x11,
    Z850 = 0x12,
    T500 = 0x20,
    T700 = 0x21,
    T850 = 0x22,
    U500 = 0x30,
    U700 = 0x31,
    U850 = 0x32,
    V500 = 0x40,
    V700 = 0x41,
    V850 = 0x42,
    W500 = 0x50,
    W700 = 0x51,
    W850 = 0x52,
    Q500 = 0x60,
    Q700 = 0x61,
    Q850 = 0x62,
    T2M = 0x100,
    D2M = 0x101,
    U10 = 0x102,
    V10 = 0x103,
    MSL = 0x104,
    SP = 0x105,
    TCW = 0x106,
    TCWV = 0x107,
};

constexpr std::size_t kVariableCount = 26;
const std::array<VariableId, kVariableCount>& variable_catalog();

std::string_view var_name(VariableId v);
std::optional<VariableId> var_from_name(std::string_view name);
std::optional<VariableId> var_from_code(std::uint16_t code);

// Multi-variable gridded state.  data is var-major, row-major:
// data[(vi*nlat + i)*nlon + j].
struct FieldCube {
    GridSpec spec;
    std::vector<VariableId> vars;
    std::int64_t timestamp = 0;
    std::vector<float> data;

    FieldCube() = default;
    FieldCube(GridSpec s, std::vector<VariableId> v, std::int64_t ts);

    std::size_t plane_size() const {
        return static_cast<std::size_t>(spec.nlat) * spec.nlon;
    }
    float* plane(std::size_t vi) { return data.data() + vi * plane_size(); }
    const float* plane(std::size_t vi) const {
        return data.data() + vi * plane_size();
    }
    float at(std::size_t vi, int i, int j) const {
        return data[(vi * spec.nlat + i) * static_cast<std::size_t>(spec.nlon) +
                    j];
    }
    float& at(std::size_t vi, int i, int j) {
        return data[(vi * spec.nlat + i) * static_cast<std::size_t>(spec.nlon) +
                    j];
    }

    bool has_var(VariableId v) const;
    std::size_t var_index(VariableId v) const;  // throws MissingVariable
    const float* var_plane(VariableId v) const {
        return plane(var_index(v));
    }

    // Checks dimension consistency and finiteness of every value.
    void validate() const;

    FieldCube select_vars(const std::vector<VariableId>& wanted) const;
};

struct FracIndex {
    double fi = 0.0;
    double fj = 0.0;
};

// Continuous grid coordinates of a point.  Throws OutOfBounds when the point
// lies more than half a cell outside the grid extent.
FracIndex latlon_to_fractional_index(LatLon p, const GridSpec& spec);
LatLon index_to_latlon(double fi, double fj, const GridSpec& spec);

// Copy of the cell block rows [i0, i0+nrows) x cols [j0, j0+ncols).  Column
// indices wrap only on longitude-periodic grids.  Values are copies.
FieldCube crop_cells(const FieldCube& cube, int i0, int j0, int nrows,
                     int ncols);

// Odd (2*half_cells+1)^2 window centered on the grid node nearest to center.
FieldCube crop_window(const FieldCube& cube, LatLon center, int half_cells);

// Grid node nearest to a point (after the half-cell bounds check).
struct NodeIndex {
    int i = 0;
    int j = 0;
};
NodeIndex nearest_node(LatLon p, const GridSpec& spec);

}  // namespace bgc::gridstore
