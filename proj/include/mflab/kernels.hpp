#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace mflab {

enum class Kind { FirstOrder, Kinetic };

enum class ModelId { LinearAttraction, SmoothBounded, ConstantDiffusionOu, KineticLinear };

// A two-argument interaction kernel pair (b, sigma) together with its declared
// regularity constants. Coefficients of the particle systems arise by
// averaging the kernels over an empirical measure in the second argument.
//
// First-order models act on states in R^d. Kinetic models act on states
// z = (position, velocity) in R^{2d}; their drift kernel takes two full states
// and returns the d-dimensional force applied to the velocity, and their
// diffusion kernel returns the d x n matrix driving the velocity noise.
//
// Builtin catalog (make_builtin):
//   "linear-attraction"    b(x,y) = -a*x + c*(y - x)
//                          sigma(x,y) = s*(1 + eps*sin(x_1)*sin(y_1)) * E
//                          with E the d x n identity block; requires |eps| < 1
//                          and n >= d. params: a, c, s, eps.
//   "smooth-bounded"       b(x,y) = A*tanh(x) + B*tanh(y) componentwise,
//                          sigma = s * E. params: A, B, s.
//   "constant-diffusion-ou" b(x,y) = -x, sigma = s * E. params: s. The
//                          analytic-oracle model: coefficients ignore the
//                          measure entirely.
//   "kinetic-linear"       kinetic; b((x,v),(xt,vt)) = -kappa*x - gamma*v
//                          + c*(vt - v), sigma = s * E on the velocity.
//                          params: kappa, gamma, c, s.
struct KernelSpec {
  std::string name;
  ModelId model = ModelId::ConstantDiffusionOu;
  Kind kind = Kind::FirstOrder;
  int d = 1;  // range dimension of the drift kernel
  int n = 1;  // Brownian dimension
  // Parameter slots; which are meaningful depends on the model.
  double a = 0, c = 0, s = 1, eps = 0, A = 0, B = 0, kappa = 0, gamma = 0;
  std::map<std::string, double> params;  // echoed as given
  // Declared assumption constants.
  double K_b = 0;
  double K_sigma = 0;
  double delta = 1;

  // State dimension: d for first-order, 2d for kinetic.
  int q() const { return kind == Kind::Kinetic ? 2 * d : d; }
};

KernelSpec make_builtin(const std::string& name,
                        const std::map<std::string, double>& params);

// Pointwise kernel evaluation. x, y have q() entries; out has d entries for
// the drift and d*n row-major entries for the diffusion. Pure: identical
// inputs give bitwise identical outputs.
void eval_drift_kernel(const KernelSpec& spec, double t, const double* x,
                       const double* y, double* out);
void eval_diffusion_kernel(const KernelSpec& spec, double t, const double* x,
                           const double* y, double* out);

// Finite-difference audit of the declared constants over a probe box.
// Norm conventions: Jacobians are measured in spectral norm with the matrix
// flattened to R^{d*n} for sigma (so the y-Lipschitz clause and the gradient
// clause use the same Hilbert-Schmidt geometry); Hessians report the max over
// output components of the per-component spectral norm. Gradient and Hessian
// orders are compared to the declared constant separately. Ellipticity is
// checked on sigma averaged over a probe cloud standing in for the measure.
struct AssumptionReport {
  int probe_count = 0;
  double box_radius = 0;
  double fd_step = 0;
  std::uint64_t seed = 0;

  double max_grad_b = 0;
  double max_hess_b = 0;
  double lip_b_y = 0;
  double b_origin = 0;
  double max_grad_sigma = 0;
  double max_hess_sigma = 0;
  double lip_sigma_y = 0;
  double ellipticity_min = 0;
  double ellipticity_max = 0;

  double declared_K_b = 0;
  double declared_K_sigma = 0;
  double declared_delta = 1;

  bool grad_b_ok = false;
  bool hess_b_ok = false;
  bool lip_b_y_ok = false;
  bool b_origin_ok = false;
  bool grad_sigma_ok = false;
  bool hess_sigma_ok = false;
  bool lip_sigma_y_ok = false;
  bool ellipticity_ok = false;
  bool pass = false;
};

// Relative slack applied to every declared-constant comparison.
inline constexpr double kAssumptionSlack = 0.05;

AssumptionReport check_assumptions(const KernelSpec& spec, int probe_count,
                                   double box_radius, double fd_step,
                                   std::uint64_t seed);

}
