#pragma once

#include <cmath>

#include "mflab/kernels.hpp"

// Concrete kernel functors plus a dispatch helper. Simulation inner loops are
// templated on the functor so the per-pair evaluations inline.

namespace mflab::detail {

inline void identity_block(double g, int d, int n, double* out) {
  for (int j = 0; j < d; ++j)
    for (int l = 0; l < n; ++l) out[j * n + l] = (j == l) ? g : 0.0;
}

struct LinearAttractionK {
  static constexpr bool yfree = false;
  int d, n;
  double a, c, s, eps;
  int q() const { return d; }
  void drift(double, const double* x, const double* y, double* out) const {
    for (int j = 0; j < d; ++j) out[j] = -a * x[j] + c * (y[j] - x[j]);
  }
  void diffusion(double, const double* x, const double* y, double* out) const {
    double g = (eps == 0.0) ? s : s * (1.0 + eps * std::sin(x[0]) * std::sin(y[0]));
    identity_block(g, d, n, out);
  }
};

struct SmoothBoundedK {
  static constexpr bool yfree = false;
  int d, n;
  double A, B, s;
  int q() const { return d; }
  void drift(double, const double* x, const double* y, double* out) const {
    for (int j = 0; j < d; ++j) out[j] = A * std::tanh(x[j]) + B * std::tanh(y[j]);
  }
  void diffusion(double, const double*, const double*, double* out) const {
    identity_block(s, d, n, out);
  }
};

struct ConstantDiffusionOuK {
  // Both kernels ignore the second argument, so averaging over any support
  // reproduces a single evaluation; simulation loops exploit this.
  static constexpr bool yfree = true;
  int d, n;
  double s;
  int q() const { return d; }
  void drift(double, const double* x, const double*, double* out) const {
    for (int j = 0; j < d; ++j) out[j] = -x[j];
  }
  void diffusion(double, const double*, const double*, double* out) const {
    identity_block(s, d, n, out);
  }
};

struct KineticLinearK {
  static constexpr bool yfree = false;
  int d, n;
  double kappa, gamma, c, s;
  int q() const { return 2 * d; }
  void drift(double, const double* x, const double* y, double* out) const {
    for (int j = 0; j < d; ++j)
      out[j] = -kappa * x[j] - gamma * x[d + j] + c * (y[d + j] - x[d + j]);
  }
  void diffusion(double, const double*, const double*, double* out) const {
    identity_block(s, d, n, out);
  }
};

template <class F>
decltype(auto) with_model(const KernelSpec& k, F&& f) {
  switch (k.model) {
    case ModelId::LinearAttraction:
      return f(LinearAttractionK{k.d, k.n, k.a, k.c, k.s, k.eps});
    case ModelId::SmoothBounded:
      return f(SmoothBoundedK{k.d, k.n, k.A, k.B, k.s});
    case ModelId::ConstantDiffusionOu:
      return f(ConstantDiffusionOuK{k.d, k.n, k.s});
    case ModelId::KineticLinear:
    default:
      return f(KineticLinearK{k.d, k.n, k.kappa, k.gamma, k.c, k.s});
  }
}

}
