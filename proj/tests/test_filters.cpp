#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "specband/filters.hpp"

using namespace specband;

TEST_CASE("radial distance: DC, unit radius, wrap symmetry") {
  CHECK(radial_distance(0, 0, 227, 227, 227.0) == 0.0);
  CHECK(radial_distance(1, 0, 227, 227, 227.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(radial_distance(226, 0, 227, 227, 227.0) ==
        doctest::Approx(radial_distance(1, 0, 227, 227, 227.0)));
  // Rescaling: one index step on a 32-wide grid spans 227/32 reference cycles.
  CHECK(radial_distance(0, 1, 32, 32, 227.0) == doctest::Approx(227.0 / 32.0));
}

TEST_CASE("gaussian profile peak, one sigma, far tail") {
  BandSpec spec{40.0, 20.0};
  CHECK(gaussian_profile(40.0, spec) == 1.0);
  CHECK(gaussian_profile(40.0 + 10.0, spec) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  CHECK(gaussian_profile(40.0 + 60.0, spec) == doctest::Approx(std::exp(-18.0)).epsilon(1e-9));
}

TEST_CASE("single band normalizes to the constant one") {
  auto bank = build_bank({{30.0, 10.0}}, 16, 16, 227.0);
  for (double v : bank.pass[0].data) CHECK(v == 1.0);
}

TEST_CASE("reference six-band bank is a partition of unity") {
  for (std::size_t size : {std::size_t{227}, std::size_t{32}}) {
    auto bank = build_bank(default_bands(), size, size, 227.0);
    REQUIRE(bank.k() == 6);
    for (std::size_t i = 0; i < size * size; ++i) {
      double sum = 0.0;
      for (std::size_t b = 0; b < 6; ++b) {
        const double v = bank.pass[b].data[i];
        REQUIRE(v >= 0.0);
        REQUIRE(v <= 1.0);
        sum += v;
      }
      REQUIRE(std::abs(sum - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("band ownership at the spectral extremes") {
  auto bank = build_bank(default_bands(), 227, 227, 227.0);
  // r = 0 is bin (0,0); r = 92 is bin (92,0).
  std::size_t best0 = 0, best92 = 0;
  for (std::size_t b = 1; b < 6; ++b) {
    if (bank.pass[b].at(0, 0) > bank.pass[best0].at(0, 0)) best0 = b;
    if (bank.pass[b].at(92, 0) > bank.pass[best92].at(92, 0)) best92 = b;
  }
  CHECK(best0 == 0);
  CHECK(best92 == 5);
}

TEST_CASE("stop responses complement pass responses") {
  auto bank = build_bank(default_bands(), 32, 32, 227.0);
  std::vector<double> stop_sum(32 * 32, 0.0);
  for (std::size_t b = 0; b < 6; ++b) {
    auto stop = stop_response(bank, b);
    for (std::size_t i = 0; i < stop.data.size(); ++i) {
      CHECK(bank.pass[b].data[i] + stop.data[i] == 1.0);  // exact: stop := 1 - pass
      stop_sum[i] += stop.data[i];
    }
  }
  for (double s : stop_sum) CHECK(std::abs(s - 5.0) <= 1e-12 * 6);
}

TEST_CASE("two-band bank: stop of one is the other") {
  auto bank = build_bank({{10.0, 8.0}, {50.0, 8.0}}, 16, 16, 227.0);
  auto stop0 = stop_response(bank, 0);
  for (std::size_t i = 0; i < stop0.data.size(); ++i)
    CHECK(std::abs(stop0.data[i] - bank.pass[1].data[i]) <= 1e-12);
}

TEST_CASE("responses are even under the wrap metric") {
  auto bank = build_bank(default_bands(), 12, 18, 227.0);
  for (std::size_t b = 0; b < bank.k(); ++b)
    for (std::size_t u = 0; u < 12; ++u)
      for (std::size_t v = 0; v < 18; ++v)
        CHECK(bank.pass[b].at(u, v) == bank.pass[b].at((12 - u) % 12, (18 - v) % 18));
}

TEST_CASE("narrow far-apart bands stay normalized (no underflow)") {
  // Far tails of all-narrow banks underflow exp(); normalization must
  // still pick the nearest band rather than divide by zero.
  auto bank = build_bank({{5.0, 1.0}, {110.0, 1.0}}, 64, 64, 227.0);
  for (std::size_t i = 0; i < bank.pass[0].data.size(); ++i) {
    const double sum = bank.pass[0].data[i] + bank.pass[1].data[i];
    REQUIRE(std::isfinite(sum));
    REQUIRE(std::abs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("default band table matches the reference settings") {
  auto bands = default_bands();
  REQUIRE(bands.size() == 6);
  CHECK(bands.front().center == 0.0);
  CHECK(bands.front().bandwidth == 6.0);
  CHECK(bands.back().center == 92.0);
  CHECK(bands.back().bandwidth == 44.0);
}

TEST_CASE("uniform split puts centers at odd multiples of ref/(4k)") {
  auto bands = uniform_bands(8, 227.0);
  REQUIRE(bands.size() == 8);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(bands[i].center ==
          doctest::Approx((2.0 * i + 1.0) * 227.0 / 32.0).epsilon(1e-15));
    CHECK(bands[i].bandwidth == doctest::Approx(227.0 / 16.0));
  }
}

TEST_CASE("error paths") {
  CHECK_THROWS_AS(build_bank({}, 8, 8, 227.0), invalid_input);
  CHECK_THROWS_AS(build_bank({{-1.0, 5.0}}, 8, 8, 227.0), invalid_input);
  CHECK_THROWS_AS(build_bank({{5.0, 0.0}}, 8, 8, 227.0), invalid_input);
  auto single = build_bank({{10.0, 5.0}}, 8, 8, 227.0);
  CHECK_THROWS_AS(stop_response(single, 0), unsupported_config);
  auto bank = build_bank(default_bands(), 8, 8, 227.0);
  CHECK_THROWS_AS(stop_response(bank, 6), invalid_input);
}
