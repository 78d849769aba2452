#include "specband/fft.hpp"

#include <cmath>

#include "specband/common.hpp"

namespace specband {
namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

// Largest prime handled by the direct O(p^2) kernel; anything bigger goes
// through Bluestein.
constexpr std::size_t kDirectMax = 61;

std::size_t smallest_factor(std::size_t n) {
  if (n % 2 == 0) return 2;
  for (std::size_t d = 3; d * d <= n; d += 2)
    if (n % d == 0) return d;
  return n;
}

std::size_t next_pow2(std::size_t n) {
  std::size_t m = 1;
  while (m < n) m <<= 1;
  return m;
}

}  // namespace

Dft1d::Dft1d(std::size_t n) : n_(n) {
  if (n == 0) throw invalid_input("Dft1d: length must be positive");
  root_.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double ang = -2.0 * kPi * static_cast<double>(t) / static_cast<double>(n);
    root_[t] = {std::cos(ang), std::sin(ang)};
  }

  // Collect distinct prime factors above the direct-kernel bound and build
  // their Bluestein subplans up front so forward() stays allocation-light
  // and const.
  std::size_t rem = n;
  while (rem > 1) {
    const std::size_t p = smallest_factor(rem);
    while (rem % p == 0) rem /= p;
    if (p > kDirectMax && !bluestein_.count(p)) {
      Bluestein b;
      b.n = p;
      b.m = next_pow2(2 * p - 1);
      b.chirp.resize(p);
      for (std::size_t k = 0; k < p; ++k) {
        // k^2 mod 2n keeps the chirp angle in a well-conditioned range.
        const std::size_t e = (k * k) % (2 * p);
        const double ang = -kPi * static_cast<double>(e) / static_cast<double>(p);
        b.chirp[k] = {std::cos(ang), std::sin(ang)};
      }
      b.sub = std::make_shared<const Dft1d>(b.m);
      std::vector<std::complex<double>> kernel(b.m, {0.0, 0.0});
      kernel[0] = std::conj(b.chirp[0]);
      for (std::size_t j = 1; j < p; ++j) {
        kernel[j] = std::conj(b.chirp[j]);
        kernel[b.m - j] = std::conj(b.chirp[j]);
      }
      b.sub->forward(kernel.data());
      b.kernel_fft = std::move(kernel);
      bluestein_.emplace(p, std::move(b));
    }
  }
}

void Dft1d::forward(std::complex<double>* x) const {
  if (n_ == 1) return;
  std::vector<std::complex<double>> scratch(n_);
  transform(x, n_, 1, scratch.data());
}

void Dft1d::inverse(std::complex<double>* x) const {
  // inverse = conj o forward o conj, scaled by 1/n.
  for (std::size_t i = 0; i < n_; ++i) x[i] = std::conj(x[i]);
  forward(x);
  const double inv = 1.0 / static_cast<double>(n_);
  for (std::size_t i = 0; i < n_; ++i)
    x[i] = {x[i].real() * inv, -x[i].imag() * inv};
}

void Dft1d::transform(std::complex<double>* x, std::size_t n, std::size_t root_stride,
                      std::complex<double>* scratch) const {
  if (n == 1) return;
  const std::size_t p = smallest_factor(n);
  if (p == n) {
    if (n <= kDirectMax) {
      direct_dft(x, n, root_stride, scratch);
    } else {
      bluestein_fft(x, bluestein_.at(n));
    }
    return;
  }

  const std::size_t m = n / p;
  // Decimation in time: residue-r subsequence is contiguous in scratch.
  for (std::size_t r = 0; r < p; ++r)
    for (std::size_t q = 0; q < m; ++q) scratch[r * m + q] = x[q * p + r];

  // Children may use the (now consumed) input region as their scratch.
  for (std::size_t r = 0; r < p; ++r)
    transform(scratch + r * m, m, root_stride * p, x + r * m);

  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t km = k % m;
    std::complex<double> acc = scratch[km];
    for (std::size_t r = 1; r < p; ++r)
      acc += root_[((k * r) % n) * root_stride] * scratch[r * m + km];
    x[k] = acc;
  }
}

void Dft1d::direct_dft(std::complex<double>* x, std::size_t n, std::size_t root_stride,
                       std::complex<double>* scratch) const {
  for (std::size_t j = 0; j < n; ++j) scratch[j] = x[j];
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc = scratch[0];
    for (std::size_t j = 1; j < n; ++j)
      acc += root_[((k * j) % n) * root_stride] * scratch[j];
    x[k] = acc;
  }
}

void Dft1d::bluestein_fft(std::complex<double>* x, const Bluestein& plan) const {
  const std::size_t n = plan.n;
  const std::size_t m = plan.m;
  std::vector<std::complex<double>> work(m, {0.0, 0.0});
  for (std::size_t k = 0; k < n; ++k) work[k] = x[k] * plan.chirp[k];

  plan.sub->forward(work.data());
  for (std::size_t i = 0; i < m; ++i) work[i] *= plan.kernel_fft[i];
  // Inverse of the subplan via the conjugation identity.
  for (std::size_t i = 0; i < m; ++i) work[i] = std::conj(work[i]);
  plan.sub->forward(work.data());
  const double inv = 1.0 / static_cast<double>(m);
  for (std::size_t k = 0; k < n; ++k) {
    const std::complex<double> z = {work[k].real() * inv, -work[k].imag() * inv};
    x[k] = z * plan.chirp[k];
  }
}

}  // namespace specband
