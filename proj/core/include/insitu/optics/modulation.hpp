#pragma once

#include <cstdint>
#include <span>

#include "insitu/optics/field.hpp"

namespace insitu::optics {

/// output[p] = field[p] * exp(i * phase[p]).
ComplexField apply_phase(const ComplexField& field, const PhaseMap& phase);

/// Snaps each value to the nearest of 2^bits levels spanning [0, 2*pi); values
/// near 2*pi wrap to level 0. Throws ConfigError unless 1 <= bits <= 16.
PhaseMap quantize_phase(const PhaseMap& phase, int bits);

double quantize_value(double radians, int bits);

}  // namespace insitu::optics
