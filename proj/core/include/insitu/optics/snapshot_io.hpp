#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "insitu/optics/grid.hpp"

namespace insitu::optics {

// Raw snapshot: 16-byte header {"OPB1", u32 rows, u32 cols, u32 dtype} then
// row-major little-endian IEEE-754 samples.
enum class RawDtype : std::uint32_t { kFloat32 = 1, kFloat64 = 2 };

void write_raw(const std::filesystem::path& path, const Grid<double>& grid,
               RawDtype dtype = RawDtype::kFloat32);
Grid<double> read_raw(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_raw(const Grid<double>& grid, RawDtype dtype);
Grid<double> decode_raw(const std::vector<std::uint8_t>& bytes);

// 8-bit binary PGM (P5). Values are mapped linearly from [min, max] to
// [0, 255]; the range is recorded in a "# range <min> <max>" header comment.
void write_pgm(const std::filesystem::path& path, const Grid<double>& grid);

struct PgmImage {
  Grid<double> values;  // raw gray levels scaled to [0, 1]
  double recorded_min = 0.0;
  double recorded_max = 1.0;
  bool has_range = false;
};
PgmImage read_pgm(const std::filesystem::path& path);

}  // namespace insitu::optics
