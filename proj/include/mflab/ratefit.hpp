#pragma once

// Least-squares slope estimation on log-log axes, used to read off
// convergence rates from (size, error) curves.

#include <vector>

namespace mflab {

struct RateFit {
  double slope = 0;
  double intercept = 0;     // log-log intercept
  double r2 = 0;
  double stderr_slope = 0;  // 0 when only two points survive
  int dropped = 0;          // nonpositive ordinates removed before fitting
  bool fitted = false;      // false when fewer than two points survive
};

// Fits log(y) = slope * log(x) + intercept by least squares.  Points with
// y <= 0 or x <= 0 are dropped and counted; they carry no information on
// a multiplicative rate.
RateFit fit_rate(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace mflab
