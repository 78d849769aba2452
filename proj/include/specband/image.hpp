#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "specband/common.hpp"

namespace specband {

// Real-valued C x H x W tensor, row-major within each channel. Source images
// live in [0, 1]; band slices may be negative.
struct ImageTensor {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> data;

  ImageTensor() = default;
  ImageTensor(std::size_t c, std::size_t h, std::size_t w)
      : channels(c), height(h), width(w), data(c * h * w, 0.0) {}

  std::size_t plane() const { return height * width; }
  std::size_t size() const { return data.size(); }

  double& at(std::size_t c, std::size_t y, std::size_t x) {
    return data[(c * height + y) * width + x];
  }
  double at(std::size_t c, std::size_t y, std::size_t x) const {
    return data[(c * height + y) * width + x];
  }

  bool finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

// Complex DFT coefficients in natural index order: bin (0,0) is DC, no
// fftshift is ever applied. For the transform of a real image the array is
// conjugate-symmetric: S[u,v] = conj(S[(H-u)%H, (W-v)%W]).
struct SpectrumTensor {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::complex<double>> data;

  SpectrumTensor() = default;
  SpectrumTensor(std::size_t c, std::size_t h, std::size_t w)
      : channels(c), height(h), width(w), data(c * h * w, {0.0, 0.0}) {}

  std::size_t plane() const { return height * width; }

  std::complex<double>& at(std::size_t c, std::size_t u, std::size_t v) {
    return data[(c * height + u) * width + v];
  }
  std::complex<double> at(std::size_t c, std::size_t u, std::size_t v) const {
    return data[(c * height + u) * width + v];
  }
};

// One real frequency response on an H x W grid, values in [0, 1], even
// under the wrap metric so that filtered spectra stay conjugate-symmetric.
struct Response {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> data;

  Response() = default;
  Response(std::size_t h, std::size_t w) : height(h), width(w), data(h * w, 0.0) {}

  double& at(std::size_t u, std::size_t v) { return data[u * width + v]; }
  double at(std::size_t u, std::size_t v) const { return data[u * width + v]; }
};

}  // namespace specband
