#include "specband/filters.hpp"

#include <cmath>

#include "specband/common.hpp"

namespace specband {

double radial_distance(std::size_t u, std::size_t v, std::size_t height, std::size_t width,
                       double reference_size) {
  const double fu = static_cast<double>(std::min(u, height - u));
  const double fv = static_cast<double>(std::min(v, width - v));
  const double scale = reference_size / static_cast<double>(std::min(height, width));
  return std::sqrt(fu * fu + fv * fv) * scale;
}

double gaussian_profile(double r, const BandSpec& spec) {
  const double sigma = spec.bandwidth / 2.0;
  const double d = (r - spec.center) / sigma;
  return std::exp(-0.5 * d * d);
}

FilterBank build_bank(const std::vector<BandSpec>& specs, std::size_t height, std::size_t width,
                      double reference_size) {
  if (specs.empty()) throw invalid_input("build_bank: empty band list");
  if (height == 0 || width == 0) throw invalid_input("build_bank: zero-sized grid");
  for (const auto& s : specs) {
    if (s.center < 0.0 || s.bandwidth <= 0.0)
      throw invalid_input("build_bank: band needs center >= 0 and bandwidth > 0");
  }

  FilterBank bank;
  bank.height = height;
  bank.width = width;
  bank.reference_size = reference_size;
  bank.specs = specs;
  bank.pass.assign(specs.size(), Response(height, width));

  const std::size_t k = specs.size();
  std::vector<double> expo(k), w(k);
  for (std::size_t u = 0; u < height; ++u) {
    for (std::size_t v = 0; v < width; ++v) {
      const double r = radial_distance(u, v, height, width, reference_size);
      // Normalize through the max-shifted exponent so very narrow bands do
      // not underflow all profiles at far-away bins; identical to
      // g_i / sum_j g_j in exact arithmetic.
      double emin = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        const double sigma = specs[i].bandwidth / 2.0;
        const double d = (r - specs[i].center) / sigma;
        expo[i] = 0.5 * d * d;
        if (i == 0 || expo[i] < emin) emin = expo[i];
      }
      double sum = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        w[i] = std::exp(-(expo[i] - emin));
        sum += w[i];
      }
      for (std::size_t i = 0; i < k; ++i) bank.pass[i].at(u, v) = w[i] / sum;
    }
  }
  return bank;
}

Response stop_response(const FilterBank& bank, std::size_t index) {
  if (bank.k() < 2)
    throw unsupported_config("stop_response: complements need at least two bands");
  if (index >= bank.k()) throw invalid_input("stop_response: band index out of range");
  Response stop(bank.height, bank.width);
  const Response& pass = bank.pass[index];
  for (std::size_t i = 0; i < stop.data.size(); ++i) stop.data[i] = 1.0 - pass.data[i];
  return stop;
}

std::vector<BandSpec> default_bands() {
  return {{0.0, 6.0}, {7.0, 8.0}, {20.0, 20.0}, {40.0, 20.0}, {60.0, 20.0}, {92.0, 44.0}};
}

std::vector<BandSpec> uniform_bands(std::size_t k, double reference_size) {
  if (k == 0) throw invalid_input("uniform_bands: k must be positive");
  std::vector<BandSpec> specs;
  specs.reserve(k);
  const double spacing = reference_size / (2.0 * static_cast<double>(k));
  for (std::size_t i = 0; i < k; ++i)
    specs.push_back({(2.0 * static_cast<double>(i) + 1.0) * spacing / 2.0, spacing});
  return specs;
}

}  // namespace specband
