#include <cmath>
#include <vector>

#include "doctest.h"
#include "mflab/noise.hpp"

using namespace mflab;

TEST_CASE("brownian increments are pure functions of their arguments") {
  auto a = brownian_increment(123, 4, 56, 0.01, 3);
  auto b = brownian_increment(123, 4, 56, 0.01, 3);
  CHECK(a == b);
  CHECK(a.size() == 3);
  CHECK(a != brownian_increment(123, 4, 57, 0.01, 3));
  CHECK(a != brownian_increment(123, 5, 56, 0.01, 3));
  CHECK(a != brownian_increment(124, 4, 56, 0.01, 3));
}

TEST_CASE("brownian increments have N(0, dt) statistics") {
  const double dt = 0.25;
  const int reps = 100000;
  double sum = 0, sumsq = 0;
  for (int k = 0; k < reps; ++k) {
    auto v = brownian_increment(2024, 0, k, dt, 1);
    sum += v[0];
    sumsq += v[0] * v[0];
  }
  const double mean = sum / reps;
  const double var = sumsq / reps - mean * mean;
  CHECK(std::abs(mean) < 4.0 * std::sqrt(dt / reps));
  CHECK(var == doctest::Approx(dt).epsilon(0.05));
}

TEST_CASE("standard_normal is disjoint from the brownian stream") {
  std::vector<double> z(4);
  standard_normal(99, 7, 4, z.data());
  std::vector<double> z2(4);
  standard_normal(99, 7, 4, z2.data());
  CHECK(z == z2);
  auto w = brownian_increment(99, 7, 0, 1.0, 4);
  CHECK(z != w);
  double sum = 0, sumsq = 0;
  std::vector<double> big(100000);
  standard_normal(31, 0, static_cast<int>(big.size()), big.data());
  for (double v : big) {
    sum += v;
    sumsq += v * v;
  }
  const double n = static_cast<double>(big.size());
  CHECK(std::abs(sum / n) < 4.0 / std::sqrt(n));
  CHECK(sumsq / n == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("uniform01 lands strictly inside the unit interval") {
  for (std::uint32_t k = 0; k < 1000; ++k) {
    double u = uniform01(5, 1, k, 0xABCD0000u);
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("derive_seed separates tags, indices, and bases") {
  CHECK(derive_seed(1, "alpha") == derive_seed(1, "alpha"));
  CHECK(derive_seed(1, "alpha") != derive_seed(1, "beta"));
  CHECK(derive_seed(1, "alpha") != derive_seed(2, "alpha"));
  CHECK(derive_seed(1, "alpha", 0) != derive_seed(1, "alpha", 1));
  CHECK(derive_seed(1, "alpha", 0, 1) != derive_seed(1, "alpha", 1, 0));
}
