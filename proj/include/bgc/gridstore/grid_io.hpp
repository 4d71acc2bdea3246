#pragma once

#include <string>

#include "bgc/gridstore/grid.hpp"

namespace bgc::gridstore {

// BGC1 container, little-endian:
//   offset  0  magic "BGC1"
//   offset  4  u32 version (=1)
//   offset  8  u32 nvars
//   offset 12  u32 nlat
//   offset 16  u32 nlon
//   offset 20  u8 orientation (0 = north-first, 1 = south-first)
//   offset 21  7 pad bytes
//   offset 28  f64 lat0, lon0, dlat, dlon
//   offset 60  i64 timestamp (seconds since Unix epoch, UTC)
//   offset 68  nvars x u16 variable tags
//   then       nvars*nlat*nlon f32 values, var-major, row-major
FieldCube read_grid_file(const std::string& path);
void write_grid_file(const FieldCube& cube, const std::string& path);

std::string encode_grid(const FieldCube& cube);
FieldCube decode_grid(const std::string& bytes, const std::string& context);

}  // namespace bgc::gridstore
