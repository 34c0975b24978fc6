#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "insitu/data_dir.hpp"
#include "insitu/optics/field.hpp"

namespace insitu::tasks {

enum class TargetKind { kGrating, kBoat, kLetter, kDigit };

TargetKind parse_target_kind(const std::string& name);
std::string to_string(TargetKind kind);

struct TargetOptions {
  std::size_t grating_period = 8;  // pixels per bright+dark pair
  std::filesystem::path asset_dir = default_data_dir() / "targets";
};

/// Target intensity normalized to [0, 1] with max exactly 1. The grating is
/// vertical binary bars, bright first; the other kinds are bundled PGM assets
/// resampled bilinearly to `shape`.
optics::IntensityImage make_target(TargetKind kind, optics::Shape shape,
                                   const TargetOptions& options = {});

/// All kinds used by the aberration-correction suite.
std::vector<TargetKind> bundled_targets();

/// Bilinear resampling (half-pixel centers, edge clamped).
std::vector<double> resize_bilinear(std::span<const double> src, optics::Shape from,
                                    optics::Shape to);

}  // namespace insitu::tasks
