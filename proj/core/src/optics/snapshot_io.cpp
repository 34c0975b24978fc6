#include "insitu/optics/snapshot_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <sstream>

#include "insitu/errors.hpp"

namespace insitu::optics {

namespace {

static_assert(std::endian::native == std::endian::little,
              "raw snapshot codec assumes a little-endian host");

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& in, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[offset + i]) << (8 * i);
  return v;
}

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void dump(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

std::vector<std::uint8_t> encode_raw(const Grid<double>& grid, RawDtype dtype) {
  std::vector<std::uint8_t> out{'O', 'P', 'B', '1'};
  put_u32(out, static_cast<std::uint32_t>(grid.rows()));
  put_u32(out, static_cast<std::uint32_t>(grid.cols()));
  put_u32(out, static_cast<std::uint32_t>(dtype));
  const std::size_t width = dtype == RawDtype::kFloat32 ? 4 : 8;
  out.reserve(out.size() + grid.size() * width);
  for (double v : grid.values()) {
    std::uint8_t buf[8];
    if (dtype == RawDtype::kFloat32) {
      const auto f = static_cast<float>(v);
      std::memcpy(buf, &f, 4);
    } else {
      std::memcpy(buf, &v, 8);
    }
    out.insert(out.end(), buf, buf + width);
  }
  return out;
}

Grid<double> decode_raw(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 16) throw FormatError("raw snapshot shorter than its 16-byte header");
  if (std::memcmp(bytes.data(), "OPB1", 4) != 0) {
    throw FormatError("raw snapshot: expected magic \"OPB1\" at offset 0");
  }
  const std::size_t rows = get_u32(bytes, 4);
  const std::size_t cols = get_u32(bytes, 8);
  const std::uint32_t tag = get_u32(bytes, 12);
  std::size_t width = 0;
  if (tag == static_cast<std::uint32_t>(RawDtype::kFloat32)) {
    width = 4;
  } else if (tag == static_cast<std::uint32_t>(RawDtype::kFloat64)) {
    width = 8;
  } else {
    throw FormatError("raw snapshot: unknown dtype tag " + std::to_string(tag) + " at offset 12");
  }
  const std::size_t expected = 16 + rows * cols * width;
  if (bytes.size() != expected) {
    throw FormatError("raw snapshot: expected " + std::to_string(expected) + " bytes, found " +
                      std::to_string(bytes.size()));
  }
  std::vector<double> values(rows * cols);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::uint8_t* p = bytes.data() + 16 + i * width;
    if (width == 4) {
      float f;
      std::memcpy(&f, p, 4);
      values[i] = f;
    } else {
      std::memcpy(&values[i], p, 8);
    }
  }
  return Grid<double>(Shape{rows, cols}, std::move(values));
}

void write_raw(const std::filesystem::path& path, const Grid<double>& grid, RawDtype dtype) {
  dump(path, encode_raw(grid, dtype));
}

Grid<double> read_raw(const std::filesystem::path& path) { return decode_raw(slurp(path)); }

void write_pgm(const std::filesystem::path& path, const Grid<double>& grid) {
  double lo = 0.0;
  double hi = 0.0;
  if (grid.size() > 0) {
    const auto [mn, mx] = std::minmax_element(grid.values().begin(), grid.values().end());
    lo = *mn;
    hi = *mx;
  }
  std::ostringstream header;
  header << "P5\n# range " << std::setprecision(17) << lo << ' ' << hi << '\n'
         << grid.cols() << ' ' << grid.rows() << "\n255\n";
  const std::string h = header.str();
  std::vector<std::uint8_t> bytes(h.begin(), h.end());
  const double span = hi - lo;
  for (double v : grid.values()) {
    const double t = span > 0.0 ? (v - lo) / span : 0.0;
    bytes.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(t, 0.0, 1.0) * 255.0)));
  }
  dump(path, bytes);
}

PgmImage read_pgm(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  std::size_t pos = 0;
  PgmImage image;
  auto skip_space_and_comments = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        const std::size_t start = pos;
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        std::istringstream comment(std::string(bytes.begin() + static_cast<std::ptrdiff_t>(start) + 1,
                                               bytes.begin() + static_cast<std::ptrdiff_t>(pos)));
        std::string word;
        if (comment >> word && word == "range" && comment >> image.recorded_min >> image.recorded_max) {
          image.has_range = true;
        }
      } else if (std::isspace(bytes[pos]) != 0) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&](const char* what) {
    skip_space_and_comments();
    std::size_t v = 0;
    const std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(bytes[pos]) != 0) v = v * 10 + (bytes[pos++] - '0');
    if (pos == start) {
      throw FormatError("PGM " + path.string() + ": expected " + what + " at offset " +
                        std::to_string(start));
    }
    return v;
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw FormatError("PGM " + path.string() + ": expected magic \"P5\" at offset 0");
  }
  pos = 2;
  const std::size_t cols = read_int("width");
  const std::size_t rows = read_int("height");
  const std::size_t maxval = read_int("maxval");
  if (maxval == 0 || maxval > 255) throw FormatError("PGM " + path.string() + ": only 8-bit supported");
  ++pos;  // single whitespace before the raster
  if (bytes.size() < pos + rows * cols) {
    throw FormatError("PGM " + path.string() + ": raster truncated at offset " +
                      std::to_string(bytes.size()));
  }
  std::vector<double> values(rows * cols);
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = static_cast<double>(bytes[pos + i]) / static_cast<double>(maxval);
  }
  image.values = Grid<double>(Shape{rows, cols}, std::move(values));
  return image;
}

}  // namespace insitu::optics
