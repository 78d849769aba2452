#include "specband/rng.hpp"

#include <cmath>

namespace specband {

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Box-Muller; u1 is kept away from zero so log() stays finite.
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double mag = std::sqrt(-2.0 * std::log(u1));
  const double two_pi = 6.283185307179586476925286766559;
  spare_ = mag * std::sin(two_pi * u2);
  has_spare_ = true;
  return mag * std::cos(two_pi * u2);
}

std::uint64_t hash_bytes(const void* data, std::size_t n, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t hash_str(std::string_view s, std::uint64_t h) {
  return hash_bytes(s.data(), s.size(), h);
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view tag) {
  std::uint64_t h = hash_bytes(&master, sizeof(master));
  h = hash_str(tag, h);
  // One splitmix scramble so nearby masters map to distant streams.
  Rng r(h);
  return r.next_u64();
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view tag, std::uint64_t index) {
  std::uint64_t h = hash_bytes(&master, sizeof(master));
  h = hash_str(tag, h);
  h = hash_bytes(&index, sizeof(index), h);
  Rng r(h);
  return r.next_u64();
}

}  // namespace specband
