#pragma once

#include <cstdint>

#include "insitu/optics/field.hpp"

namespace insitu::optics {

/// Random phase screen: i.i.d. uniform phases, smoothed by a periodic Gaussian
/// kernel of std `correlation_length_px` (0 disables smoothing), then linearly
/// rescaled to span [0, 2*pi). Bit-identical for a fixed seed.
PhaseMap make_diffuser(std::uint64_t seed, double correlation_length_px, Shape shape);

/// Low-order aberration in Noll-normalized Zernike terms, each coefficient in
/// radians RMS over the inscribed disk.
struct ZernikeCoefficients {
  double defocus = 0.0;      // Z4
  double astigmatism = 0.0;  // Z6
  double coma = 0.0;         // Z8

  friend bool operator==(const ZernikeCoefficients&, const ZernikeCoefficients&) = default;
};

/// Weighted Zernike sum over the disk inscribed in the grid, centered on pixel
/// (rows/2, cols/2) with radius min(rows, cols)/2. Zero outside the disk.
PhaseMap zernike_phase(const ZernikeCoefficients& coeffs, Shape shape);

}  // namespace insitu::optics
