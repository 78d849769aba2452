#pragma once

#include <cstdint>

#include "specband/image.hpp"

namespace specband {

// Exact unnormalized forward 2-D DFT of every channel. Plans per grid size
// are cached internally behind a mutex; the transforms themselves are pure.
SpectrumTensor dft2(const ImageTensor& image);

struct InverseResult {
  ImageTensor image;
  // Largest |Im| left over after the inverse transform. For spectra filtered
  // by even-symmetric responses this is numerical noise; anything above
  // 1e-6 * max|Re| flags a symmetry violation.
  double max_imag_residual = 0.0;
  bool symmetry_warning = false;
};

// Inverse 2-D DFT (carries the 1/(H*W) factor); returns the real part and
// the imaginary residual diagnostic.
InverseResult idft2(const SpectrumTensor& spectrum);

// Pointwise complex * real multiply, the same response applied to every
// channel.
SpectrumTensor apply_response(const SpectrumTensor& spectrum, const Response& response);

// idft2(apply_response(dft2(image), response)).image
ImageTensor band_slice(const ImageTensor& image, const Response& response);

// Call-count instrumentation: the test phase must never slice, and the
// tests assert it through this counter.
std::uint64_t band_slice_call_count();
void reset_band_slice_call_count();

}  // namespace specband
