#include "specband/spectrum.hpp"

#include <atomic>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <utility>

#include "specband/fft.hpp"

namespace specband {
namespace {

std::atomic<std::uint64_t> g_band_slice_calls{0};

std::shared_ptr<const Dft1d> plan_for(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, std::shared_ptr<const Dft1d>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  auto plan = std::make_shared<const Dft1d>(n);
  cache.emplace(n, plan);
  return plan;
}

// Row transforms then column transforms of one H x W complex plane.
void transform_plane(std::complex<double>* plane, std::size_t h, std::size_t w,
                     const Dft1d& row_plan, const Dft1d& col_plan, bool forward) {
  for (std::size_t y = 0; y < h; ++y) {
    auto* row = plane + y * w;
    forward ? row_plan.forward(row) : row_plan.inverse(row);
  }
  std::vector<std::complex<double>> col(h);
  for (std::size_t x = 0; x < w; ++x) {
    for (std::size_t y = 0; y < h; ++y) col[y] = plane[y * w + x];
    forward ? col_plan.forward(col.data()) : col_plan.inverse(col.data());
    for (std::size_t y = 0; y < h; ++y) plane[y * w + x] = col[y];
  }
}

void check_shape(std::size_t c, std::size_t h, std::size_t w) {
  if (c == 0 || h == 0 || w == 0)
    throw invalid_input("spectrum: zero-sized dimension");
}

}  // namespace

SpectrumTensor dft2(const ImageTensor& image) {
  check_shape(image.channels, image.height, image.width);
  if (!image.finite()) throw invalid_input("dft2: non-finite image values");

  SpectrumTensor out(image.channels, image.height, image.width);
  for (std::size_t i = 0; i < image.data.size(); ++i) out.data[i] = {image.data[i], 0.0};

  auto row_plan = plan_for(image.width);
  auto col_plan = plan_for(image.height);
  for (std::size_t c = 0; c < image.channels; ++c)
    transform_plane(out.data.data() + c * out.plane(), image.height, image.width,
                    *row_plan, *col_plan, /*forward=*/true);
  return out;
}

InverseResult idft2(const SpectrumTensor& spectrum) {
  check_shape(spectrum.channels, spectrum.height, spectrum.width);
  for (const auto& z : spectrum.data)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      throw invalid_input("idft2: non-finite spectrum values");

  std::vector<std::complex<double>> work(spectrum.data);
  auto row_plan = plan_for(spectrum.width);
  auto col_plan = plan_for(spectrum.height);
  for (std::size_t c = 0; c < spectrum.channels; ++c)
    transform_plane(work.data() + c * spectrum.plane(), spectrum.height, spectrum.width,
                    *row_plan, *col_plan, /*forward=*/false);

  InverseResult res;
  res.image = ImageTensor(spectrum.channels, spectrum.height, spectrum.width);
  double max_im = 0.0, max_re = 0.0;
  for (std::size_t i = 0; i < work.size(); ++i) {
    res.image.data[i] = work[i].real();
    max_im = std::max(max_im, std::abs(work[i].imag()));
    max_re = std::max(max_re, std::abs(work[i].real()));
  }
  res.max_imag_residual = max_im;
  res.symmetry_warning = max_im > 1e-6 * max_re;
  return res;
}

SpectrumTensor apply_response(const SpectrumTensor& spectrum, const Response& response) {
  if (spectrum.height != response.height || spectrum.width != response.width)
    throw invalid_input("apply_response: response grid does not match spectrum");
  SpectrumTensor out(spectrum.channels, spectrum.height, spectrum.width);
  const std::size_t plane = spectrum.plane();
  for (std::size_t c = 0; c < spectrum.channels; ++c)
    for (std::size_t i = 0; i < plane; ++i)
      out.data[c * plane + i] = spectrum.data[c * plane + i] * response.data[i];
  return out;
}

ImageTensor band_slice(const ImageTensor& image, const Response& response) {
  g_band_slice_calls.fetch_add(1, std::memory_order_relaxed);
  return idft2(apply_response(dft2(image), response)).image;
}

std::uint64_t band_slice_call_count() {
  return g_band_slice_calls.load(std::memory_order_relaxed);
}

void reset_band_slice_call_count() { g_band_slice_calls.store(0, std::memory_order_relaxed); }

}  // namespace specband
