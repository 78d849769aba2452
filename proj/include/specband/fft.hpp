#pragma once

#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <vector>

namespace specband {

// One-dimensional DFT plan for a fixed length n. Supports any n >= 1:
// composite lengths run mixed-radix Cooley-Tukey, prime factors up to a
// small bound use the direct O(p^2) kernel, and larger primes (e.g. 227)
// go through Bluestein's chirp-z reduction to a power-of-two transform.
//
// Convention: unnormalized forward, inverse carries the 1/n factor.
// Plans are immutable after construction; forward/inverse are const and
// safe to call concurrently.
class Dft1d {
 public:
  explicit Dft1d(std::size_t n);

  std::size_t size() const { return n_; }

  void forward(std::complex<double>* x) const;
  void inverse(std::complex<double>* x) const;

 private:
  struct Bluestein {
    std::size_t n = 0;       // prime length being transformed
    std::size_t m = 0;       // power-of-two convolution length, >= 2n-1
    std::vector<std::complex<double>> chirp;       // exp(-i*pi*k^2/n)
    std::vector<std::complex<double>> kernel_fft;  // FFT of the circular chirp kernel
    std::shared_ptr<const Dft1d> sub;              // power-of-two subplan
  };

  void transform(std::complex<double>* x, std::size_t n, std::size_t root_stride,
                 std::complex<double>* scratch) const;
  void direct_dft(std::complex<double>* x, std::size_t n, std::size_t root_stride,
                  std::complex<double>* scratch) const;
  void bluestein_fft(std::complex<double>* x, const Bluestein& plan) const;

  std::size_t n_ = 0;
  std::vector<std::complex<double>> root_;  // root_[t] = exp(-2*pi*i*t/n)
  std::map<std::size_t, Bluestein> bluestein_;
};

}  // namespace specband
