#include "bgc/gridstore/grid.hpp"

#include <cmath>

#include "bgc/errors.hpp"

namespace bgc::gridstore {

void GridSpec::validate() const {
    if (!(dlat > 0.0) || !(dlon > 0.0))
        throw DimMismatch("grid spacing must be positive (dlat=" +
                          std::to_string(dlat) + ", dlon=" +
                          std::to_string(dlon) + ")");
    if (nlat < 1 || nlon < 1)
        throw DimMismatch("grid needs at least one cell (nlat=" +
                          std::to_string(nlat) + ", nlon=" +
                          std::to_string(nlon) + ")");
    if (!std::isfinite(lat0) || !std::isfinite(lon0))
        throw InvalidCoordinate("grid origin is not finite");
    if (lat_max() > 90.0 + 1e-12 || lat_min() < -90.0 - 1e-12)
        throw InvalidCoordinate("grid latitudes leave [-90, 90] (rows span " +
                                std::to_string(lat_min()) + " to " +
                                std::to_string(lat_max()) + ")");
}

const std::array<VariableId, kVariableCount>& variable_catalog() {
    static const std::array<VariableId, kVariableCount> cat = {
        VariableId::Z500, VariableId::Z700, VariableId::Z850,
        VariableId::T500, VariableId::T700, VariableId::T850,
        VariableId::U500, VariableId::U700, VariableId::U850,
        VariableId::V500, VariableId::V700, VariableId::V850,
        VariableId::W500, VariableId::W700, VariableId::W850,
        VariableId::Q500, VariableId::Q700, VariableId::Q850,
        VariableId::T2M,  VariableId::D2M,  VariableId::U10,
        VariableId::V10,  VariableId::MSL,  VariableId::SP,
        VariableId::TCW,  VariableId::TCWV,
    };
    return cat;
}

std::string_view var_name(VariableId v) {
    switch (v) {
        case VariableId::Z500: return "Z500";
        case VariableId::Z700: return "Z700";
        case VariableId::Z850: return "Z850";
        case VariableId::T500: return "T500";
        case VariableId::T700: return "T700";
        case VariableId::T850: return "T850";
        case VariableId::U500: return "U500";
        case VariableId::U700: return "U700";
        case VariableId::U850: return "U850";
        case VariableId::V500: return "V500";
        case VariableId::V700: return "V700";
        case VariableId::V850: return "V850";
        case VariableId::W500: return "W500";
        case VariableId::W700: return "W700";
        case VariableId::W850: return "W850";
        case VariableId::Q500: return "Q500";
        case VariableId::Q700: return "Q700";
        case VariableId::Q850: return "Q850";
        case VariableId::T2M: return "T2M";
        case VariableId::D2M: return "D2M";
        case VariableId::U10: return "U10";
        case VariableId::V10: return "V10";
        case VariableId::MSL: return "MSL";
        case VariableId::SP: return "SP";
        case VariableId::TCW: return "TCW";
        case VariableId::TCWV: return "TCWV";
    }
    throw ParseError("variable code " +
                     std::to_string(static_cast<unsigned>(v)) +
                     " is not in the catalog");
}

std::optional<VariableId> var_from_name(std::string_view name) {
    for (VariableId v : variable_catalog())
        if (var_name(v) == name) return v;
    return std::nullopt;
}

std::optional<VariableId> var_from_code(std::uint16_t code) {
    for (VariableId v : variable_catalog())
        if (static_cast<std::uint16_t>(v) == code) return v;
    return std::nullopt;
}

FieldCube::FieldCube(GridSpec s, std::vector<VariableId> v, std::int64_t ts)
    : spec(s), vars(std::move(v)), timestamp(ts) {
    spec.validate();
    data.assign(vars.size() * plane_size(), 0.0f);
}

bool FieldCube::has_var(VariableId v) const {
    for (VariableId u : vars)
        if (u == v) return true;
    return false;
}

std::size_t FieldCube::var_index(VariableId v) const {
    for (std::size_t k = 0; k < vars.size(); ++k)
        if (vars[k] == v) return k;
    throw MissingVariable("cube has no variable " + std::string(var_name(v)));
}

void FieldCube::validate() const {
    spec.validate();
    const std::size_t want = vars.size() * plane_size();
    if (data.size() != want)
        throw DimMismatch("cube data size " + std::to_string(data.size()) +
                          " does not match |vars|*nlat*nlon = " +
                          std::to_string(want));
    for (std::size_t k = 0; k < data.size(); ++k) {
        if (!std::isfinite(data[k]))
            throw NonFiniteInput("non-finite value at flat index " +
                                 std::to_string(k));
    }
}

FieldCube FieldCube::select_vars(const std::vector<VariableId>& wanted) const {
    FieldCube out(spec, wanted, timestamp);
    const std::size_t ps = plane_size();
    for (std::size_t k = 0; k < wanted.size(); ++k) {
        const float* src = plane(var_index(wanted[k]));
        std::copy(src, src + ps, out.plane(k));
    }
    return out;
}

FracIndex latlon_to_fractional_index(LatLon p, const GridSpec& spec) {
    const double fi =
        spec.north_first ? (spec.lat0 - p.lat) / spec.dlat
                         : (p.lat - spec.lat0) / spec.dlat;
    if (fi < -0.5 - 1e-12 || fi > spec.nlat - 0.5 + 1e-12)
        throw OutOfBounds("latitude " + std::to_string(p.lat) +
                          " outside grid rows (fi=" + std::to_string(fi) +
                          ", nlat=" + std::to_string(spec.nlat) + ")");

    const double dl = wrap_lon(p.lon) - wrap_lon(spec.lon0);
    double fj = (dl >= 0.0 ? dl : dl + 360.0) / spec.dlon;
    if (spec.periodic_lon()) {
        if (fj >= spec.nlon) fj -= spec.nlon;
    } else {
        // A point just west of the origin appears near 360/dlon; map it back
        // to a small negative index before the bounds check.
        const double full = 360.0 / spec.dlon;
        if (fj > spec.nlon - 0.5 + 1e-12 && fj - full >= -0.5 - 1e-12)
            fj -= full;
        if (fj < -0.5 - 1e-12 || fj > spec.nlon - 0.5 + 1e-12)
            throw OutOfBounds("longitude " + std::to_string(p.lon) +
                              " outside grid columns (fj=" +
                              std::to_string(fj) + ", nlon=" +
                              std::to_string(spec.nlon) + ")");
    }
    return {fi, fj};
}

LatLon index_to_latlon(double fi, double fj, const GridSpec& spec) {
    return {spec.lat_at(fi), spec.lon_at(fj)};
}

NodeIndex nearest_node(LatLon p, const GridSpec& spec) {
    const FracIndex f = latlon_to_fractional_index(p, spec);
    int i = static_cast<int>(std::lround(f.fi));
    int j = static_cast<int>(std::lround(f.fj));
    if (i < 0) i = 0;
    if (i > spec.nlat - 1) i = spec.nlat - 1;
    if (spec.periodic_lon()) {
        j = ((j % spec.nlon) + spec.nlon) % spec.nlon;
    } else {
        if (j < 0) j = 0;
        if (j > spec.nlon - 1) j = spec.nlon - 1;
    }
    return {i, j};
}

FieldCube crop_cells(const FieldCube& cube, int i0, int j0, int nrows,
                     int ncols) {
    const GridSpec& g = cube.spec;
    if (nrows < 1 || ncols < 1)
        throw DimMismatch("crop needs at least one row and column");
    if (i0 < 0 || i0 + nrows > g.nlat)
        throw OutOfBounds("crop rows [" + std::to_string(i0) + ", " +
                          std::to_string(i0 + nrows) +
                          ") leave the grid (nlat=" + std::to_string(g.nlat) +
                          ")");
    const bool wrap = g.periodic_lon();
    if (!wrap && (j0 < 0 || j0 + ncols > g.nlon))
        throw OutOfBounds("crop cols [" + std::to_string(j0) + ", " +
                          std::to_string(j0 + ncols) +
                          ") leave the grid (nlon=" + std::to_string(g.nlon) +
                          ")");

    GridSpec out_spec = g;
    out_spec.lat0 = g.lat_at(i0);
    out_spec.lon0 = g.lon_at(j0);
    out_spec.nlat = nrows;
    out_spec.nlon = ncols;

    FieldCube out(out_spec, cube.vars, cube.timestamp);
    for (std::size_t vi = 0; vi < cube.vars.size(); ++vi) {
        for (int i = 0; i < nrows; ++i) {
            for (int j = 0; j < ncols; ++j) {
                int sj = j0 + j;
                if (wrap) sj = ((sj % g.nlon) + g.nlon) % g.nlon;
                out.at(vi, i, j) = cube.at(vi, i0 + i, sj);
            }
        }
    }
    return out;
}

FieldCube crop_window(const FieldCube& cube, LatLon center, int half_cells) {
    if (half_cells < 0) throw DimMismatch("half_cells must be non-negative");
    const NodeIndex c = nearest_node(center, cube.spec);
    const int n = 2 * half_cells + 1;
    return crop_cells(cube, c.i - half_cells, c.j - half_cells, n, n);
}

}  // namespace bgc::gridstore
