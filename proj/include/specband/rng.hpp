#pragma once

#include <cstdint>
#include <cstddef>
#include <string_view>
#include <vector>

namespace specband {

// Deterministic PRNG with a fully specified algorithm (splitmix64), so that
// generated datasets and shuffles are byte-identical across platforms and
// standard library versions. std::mt19937 streams are stable but the
// <random> distributions are not.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 bits of mantissa.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller. The spare is cached, so draw order is
  // part of the stream contract.
  double normal();

  // Uniform integer in [0, n).
  std::size_t uniform_index(std::size_t n) {
    // Rejection-free modulo is fine here: n is tiny relative to 2^64.
    return static_cast<std::size_t>(next_u64() % n);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// FNV-1a over bytes; used to derive independent seed streams from a master
// seed plus string tags, e.g. derive_seed(seed, "pass-encoder").
std::uint64_t hash_bytes(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t hash_str(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag);
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag, std::uint64_t index);

}  // namespace specband
