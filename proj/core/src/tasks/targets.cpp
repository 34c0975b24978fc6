#include "insitu/tasks/targets.hpp"

#include <algorithm>
#include <cmath>

#include "insitu/errors.hpp"
#include "insitu/optics/snapshot_io.hpp"

namespace insitu::tasks {

TargetKind parse_target_kind(const std::string& name) {
  if (name == "grating") return TargetKind::kGrating;
  if (name == "boat") return TargetKind::kBoat;
  if (name == "letter") return TargetKind::kLetter;
  if (name == "digit") return TargetKind::kDigit;
  throw ConfigError("unknown target kind '" + name + "' (expected grating, boat, letter, digit)");
}

std::string to_string(TargetKind kind) {
  switch (kind) {
    case TargetKind::kGrating: return "grating";
    case TargetKind::kBoat: return "boat";
    case TargetKind::kLetter: return "letter";
    case TargetKind::kDigit: return "digit";
  }
  return "unknown";
}

std::vector<TargetKind> bundled_targets() {
  return {TargetKind::kGrating, TargetKind::kBoat, TargetKind::kLetter, TargetKind::kDigit};
}

std::vector<double> resize_bilinear(std::span<const double> src, optics::Shape from,
                                    optics::Shape to) {
  if (src.size() != from.size()) throw DimensionError("resize: source size mismatch");
  std::vector<double> out(to.size());
  const double sy = static_cast<double>(from.rows) / static_cast<double>(to.rows);
  const double sx = static_cast<double>(from.cols) / static_cast<double>(to.cols);
  auto at = [&](std::ptrdiff_t r, std::ptrdiff_t c) {
    r = std::clamp<std::ptrdiff_t>(r, 0, static_cast<std::ptrdiff_t>(from.rows) - 1);
    c = std::clamp<std::ptrdiff_t>(c, 0, static_cast<std::ptrdiff_t>(from.cols) - 1);
    return src[static_cast<std::size_t>(r) * from.cols + static_cast<std::size_t>(c)];
  };
  for (std::size_t r = 0; r < to.rows; ++r) {
    const double y = (static_cast<double>(r) + 0.5) * sy - 0.5;
    const auto y0 = static_cast<std::ptrdiff_t>(std::floor(y));
    const double fy = y - static_cast<double>(y0);
    for (std::size_t c = 0; c < to.cols; ++c) {
      const double x = (static_cast<double>(c) + 0.5) * sx - 0.5;
      const auto x0 = static_cast<std::ptrdiff_t>(std::floor(x));
      const double fx = x - static_cast<double>(x0);
      out[r * to.cols + c] = (1 - fy) * ((1 - fx) * at(y0, x0) + fx * at(y0, x0 + 1)) +
                             fy * ((1 - fx) * at(y0 + 1, x0) + fx * at(y0 + 1, x0 + 1));
    }
  }
  return out;
}

optics::IntensityImage make_target(TargetKind kind, optics::Shape shape,
                                   const TargetOptions& options) {
  std::vector<double> values;
  if (kind == TargetKind::kGrating) {
    if (options.grating_period < 2) throw ConfigError("grating period must be >= 2 pixels");
    values.resize(shape.size());
    const std::size_t half = options.grating_period / 2;
    for (std::size_t r = 0; r < shape.rows; ++r) {
      for (std::size_t c = 0; c < shape.cols; ++c) {
        values[r * shape.cols + c] = (c % options.grating_period) < half ? 1.0 : 0.0;
      }
    }
  } else {
    const auto path = options.asset_dir / (to_string(kind) + ".pgm");
    const optics::PgmImage pgm = optics::read_pgm(path);
    values = pgm.values.shape() == shape
                 ? pgm.values.vector()
                 : resize_bilinear(pgm.values.values(), pgm.values.shape(), shape);
  }
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double min = *lo;
  const double span = *hi - *lo;
  if (span <= 0.0) throw DataError("target " + to_string(kind) + " is constant");
  for (double& v : values) v = (v - min) / span;
  return optics::IntensityImage(shape, std::move(values));
}

}  // namespace insitu::tasks
