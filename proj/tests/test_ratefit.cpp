#include <cmath>
#include <vector>

#include "doctest.h"
#include "mflab/ratefit.hpp"

using namespace mflab;

TEST_CASE("exact power law is recovered to machine precision") {
  std::vector<double> x = {1, 2, 4, 8, 16};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * std::pow(v, -0.5));
  RateFit fit = fit_rate(x, y);
  REQUIRE(fit.fitted);
  CHECK(fit.slope == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(std::exp(fit.intercept) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(fit.r2 == doctest::Approx(1.0));
  CHECK(fit.stderr_slope == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(fit.dropped == 0);
}

TEST_CASE("nonpositive samples are dropped, not propagated") {
  std::vector<double> x = {1, 2, 0.0, 4, 8};
  std::vector<double> y = {1.0, 0.5, 3.0, 0.25, -2.0};
  RateFit fit = fit_rate(x, y);
  REQUIRE(fit.fitted);
  CHECK(fit.dropped == 2);
  CHECK(fit.slope == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("degenerate inputs refuse to fit") {
  CHECK_FALSE(fit_rate({1.0}, {2.0}).fitted);
  CHECK_FALSE(fit_rate({-1.0, -2.0}, {1.0, 1.0}).fitted);
  CHECK_FALSE(fit_rate({2.0, 2.0}, {1.0, 3.0}).fitted);
}

TEST_CASE("noise widens the slope standard error") {
  std::vector<double> x = {1, 2, 4, 8, 16, 32};
  std::vector<double> clean, noisy;
  for (size_t i = 0; i < x.size(); ++i) {
    clean.push_back(std::pow(x[i], -1.0));
    noisy.push_back(std::pow(x[i], -1.0) * (i % 2 ? 1.3 : 0.7));
  }
  RateFit a = fit_rate(x, clean);
  RateFit b = fit_rate(x, noisy);
  CHECK(b.stderr_slope > a.stderr_slope);
  CHECK(b.r2 < a.r2);
}
