#include "mflab/ratefit.hpp"

#include <cmath>

#include "mflab/errors.hpp"

namespace mflab {

RateFit fit_rate(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size())
    throw SimError("fit_rate: abscissa and ordinate lengths differ");
  RateFit fit;
  std::vector<double> lx, ly;
  lx.reserve(x.size());
  ly.reserve(y.size());
  for (size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0 && y[i] > 0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    } else {
      ++fit.dropped;
    }
  }
  const auto n = static_cast<int>(lx.size());
  if (n < 2) return fit;

  double mx = 0, my = 0;
  for (int i = 0; i < n; ++i) {
    mx += lx[static_cast<size_t>(i)];
    my += ly[static_cast<size_t>(i)];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (int i = 0; i < n; ++i) {
    double dx = lx[static_cast<size_t>(i)] - mx;
    double dy = ly[static_cast<size_t>(i)] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx <= 0) return fit;

  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0;
  for (int i = 0; i < n; ++i) {
    double r = ly[static_cast<size_t>(i)] - (fit.intercept + fit.slope * lx[static_cast<size_t>(i)]);
    ssr += r * r;
  }
  fit.r2 = syy > 0 ? 1.0 - ssr / syy : 1.0;
  fit.stderr_slope = n > 2 ? std::sqrt(ssr / (n - 2) / sxx) : 0.0;
  fit.fitted = true;
  return fit;
}

}  // namespace mflab
