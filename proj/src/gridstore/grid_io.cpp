#include "bgc/gridstore/grid_io.hpp"

#include <cmath>

#include "bgc/binio.hpp"
#include "bgc/errors.hpp"

namespace bgc::gridstore {

namespace {
constexpr char kMagic[4] = {'B', 'G', 'C', '1'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

std::string encode_grid(const FieldCube& cube) {
    cube.validate();
    std::string buf;
    buf.reserve(68 + 2 * cube.vars.size() + 4 * cube.data.size());
    buf.append(kMagic, 4);
    binio::put_u32(buf, kVersion);
    binio::put_u32(buf, static_cast<std::uint32_t>(cube.vars.size()));
    binio::put_u32(buf, static_cast<std::uint32_t>(cube.spec.nlat));
    binio::put_u32(buf, static_cast<std::uint32_t>(cube.spec.nlon));
    binio::put_u8(buf, cube.spec.north_first ? 0 : 1);
    for (int k = 0; k < 7; ++k) binio::put_u8(buf, 0);
    binio::put_f64(buf, cube.spec.lat0);
    binio::put_f64(buf, cube.spec.lon0);
    binio::put_f64(buf, cube.spec.dlat);
    binio::put_f64(buf, cube.spec.dlon);
    binio::put_i64(buf, cube.timestamp);
    for (VariableId v : cube.vars)
        binio::put_u16(buf, static_cast<std::uint16_t>(v));
    for (float x : cube.data) binio::put_f32(buf, x);
    return buf;
}

FieldCube decode_grid(const std::string& bytes, const std::string& context) {
    binio::Reader r(bytes, context);
    const std::string magic = r.get_bytes(4, "magic");
    if (magic != std::string(kMagic, 4))
        throw BadMagic(context + ": bad magic at offset 0 (expected \"BGC1\")");
    const std::uint32_t version = r.get_u32("version");
    if (version != kVersion)
        throw DimMismatch(context + ": unsupported version " +
                          std::to_string(version) + " at offset 4");
    const std::uint32_t nvars = r.get_u32("nvars");
    const std::uint32_t nlat = r.get_u32("nlat");
    const std::uint32_t nlon = r.get_u32("nlon");
    if (nvars == 0 || nvars > 4096)
        throw DimMismatch(context + ": implausible nvars " +
                          std::to_string(nvars) + " at offset 8");
    if (nlat == 0 || nlon == 0)
        throw DimMismatch(context + ": empty grid (nlat=" +
                          std::to_string(nlat) + " at offset 12, nlon=" +
                          std::to_string(nlon) + " at offset 16)");
    const std::uint8_t orientation = r.get_u8("orientation");
    if (orientation > 1)
        throw DimMismatch(context + ": unknown orientation " +
                          std::to_string(orientation) + " at offset 20");
    r.skip(7, "pad");

    GridSpec spec;
    spec.lat0 = r.get_f64("lat0");
    spec.lon0 = r.get_f64("lon0");
    spec.dlat = r.get_f64("dlat");
    spec.dlon = r.get_f64("dlon");
    spec.nlat = static_cast<int>(nlat);
    spec.nlon = static_cast<int>(nlon);
    spec.north_first = orientation == 0;
    if (!std::isfinite(spec.lat0) || !std::isfinite(spec.lon0) ||
        !(spec.dlat > 0.0) || !(spec.dlon > 0.0))
        throw DimMismatch(context +
                          ": invalid grid geometry in header at offset 28");
    const std::int64_t timestamp = r.get_i64("timestamp");

    std::vector<VariableId> vars;
    vars.reserve(nvars);
    for (std::uint32_t k = 0; k < nvars; ++k) {
        const std::size_t off = r.offset();
        const std::uint16_t code = r.get_u16("variable tag");
        const auto v = var_from_code(code);
        if (!v)
            throw ParseError(context + ": unknown variable tag " +
                             std::to_string(code) + " at offset " +
                             std::to_string(off));
        vars.push_back(*v);
    }

    FieldCube cube(spec, std::move(vars), timestamp);
    for (std::size_t k = 0; k < cube.data.size(); ++k)
        cube.data[k] = r.get_f32("payload value");
    if (r.remaining() != 0)
        throw DimMismatch(context + ": " + std::to_string(r.remaining()) +
                          " trailing bytes after payload at offset " +
                          std::to_string(r.offset()));
    cube.validate();
    return cube;
}

FieldCube read_grid_file(const std::string& path) {
    return decode_grid(binio::read_file(path), path);
}

void write_grid_file(const FieldCube& cube, const std::string& path) {
    binio::write_file(path, encode_grid(cube));
}

}  // namespace bgc::gridstore
