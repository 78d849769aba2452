#pragma once

#include <cstddef>
#include <vector>

#include "specband/image.hpp"

namespace specband {

// Radial Gaussian band: center frequency and bandwidth in cycles at the
// reference image scale (227 px unless stated otherwise). The Gaussian
// sigma is bandwidth/2.
struct BandSpec {
  double center = 0.0;
  double bandwidth = 1.0;
};

// K normalized pass responses forming a pointwise partition of unity on an
// H x W frequency grid. Stop responses are complements, derived on demand.
// Immutable after construction.
struct FilterBank {
  std::size_t height = 0;
  std::size_t width = 0;
  double reference_size = 227.0;
  std::vector<BandSpec> specs;
  std::vector<Response> pass;

  std::size_t k() const { return pass.size(); }
};

// Wrap-metric radius of frequency bin (u, v), rescaled so that grids of any
// size share the reference parameterization: folded index radius times
// reference_size / min(height, width).
double radial_distance(std::size_t u, std::size_t v, std::size_t height, std::size_t width,
                       double reference_size);

// exp(-(r - center)^2 / (2 sigma^2)) with sigma = bandwidth / 2.
double gaussian_profile(double r, const BandSpec& spec);

// Raw Gaussian profiles normalized pointwise so the pass responses sum to
// one at every bin.
FilterBank build_bank(const std::vector<BandSpec>& specs, std::size_t height, std::size_t width,
                      double reference_size = 227.0);

// 1 - pass_i, requires at least two bands. `index` is zero-based.
Response stop_response(const FilterBank& bank, std::size_t index);

// The six (center, bandwidth) pairs used throughout the experiments, at
// reference scale 227.
std::vector<BandSpec> default_bands();

// Equal-width split of [0, reference_size/2] into k bands: centers at odd
// multiples of reference_size/(4k), bandwidth reference_size/(2k).
std::vector<BandSpec> uniform_bands(std::size_t k, double reference_size = 227.0);

}  // namespace specband
