#pragma once

// Experiment harness measuring convergence rates of the particle system
// toward its mean-field limit: strong coupling errors, transport-distance
// chaos rates, fluctuation variances, semigroup gradient scalings, and
// deviations from the deterministic flow.  Every experiment returns a
// ChaosReport whose numbers are reproducible from the echoed config.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mflab/kernels.hpp"
#include "mflab/ratefit.hpp"
#include "mflab/simulate.hpp"
#include "mflab/state.hpp"

namespace mflab {

using ordered_json = nlohmann::ordered_json;

struct RateCurve {
  std::string name;
  std::vector<double> abscissas;
  std::vector<double> ordinates;
  std::vector<double> stderrs;           // empty when not estimated
  std::vector<double> dropped_abscissas; // points excluded from the fit
  RateFit fit;
};

struct Band {
  double slope_lo = -1;
  double slope_hi = 1;
  double r2_min = 0;
};

struct ChaosReport {
  std::string experiment;
  ordered_json config_echo;
  std::vector<RateCurve> curves;
  bool pass = true;
  std::vector<std::string> notes;
  ordered_json details;
};

ordered_json to_json(const ChaosReport& report);

// Synchronous-coupling strong error, averaged per particle over the sup of
// the deviation along the path, one curve over N_grid.  Identical initial
// data: each replication samples one ensemble shared by both systems.
ChaosReport strong_error_experiment(const std::vector<int>& N_grid,
                                    const SimConfig& config, const KernelSpec& spec,
                                    const InitSpec& init, int flow_M, int reps,
                                    Band band = {-0.65, -0.35, 0.9},
                                    double picard_tol = 1e-8,
                                    int picard_max_iter = 60);

// Variance of the kernel average (1/N) sum_m h(Z_1, Z_m) around its mean
// against an independent reference cloud; slope target -1.
// h catalog: "constant", "identity", "tanh", "drift" (needs drift_spec).
ChaosReport fluctuation_check(const std::string& h_name, const InitSpec& law,
                              int dim, const std::vector<int>& N_grid, int reps,
                              std::uint64_t seed,
                              const KernelSpec* drift_spec = nullptr,
                              Band band = {-1.15, -0.85, 0.95},
                              int ref_samples = 1000000);

struct PocParams {
  int k = 1;
  std::vector<int> N_grid;
  double eta = 1.0;
  double t = 1.0;                      // marginal time, must lie on the step grid
  std::string init_mode = "product";   // product | perturbed-exchangeable
  int outer_samples = 256;             // atoms per empirical measure
  int batches = 8;                     // independent (measure pair) repeats
  int ref_clouds = 4;                  // reference clouds averaged per batch
  int flow_M = 512;
  double slope_max = -0.3;
  double picard_tol = 1e-8;
  int picard_max_iter = 60;
  bool jensen_check = true;            // also solve at eta = 1 on the same data
  std::uint64_t seed = 0;
};

// k-particle marginal of the interacting system vs k independent limit
// copies, compared in the tuple transport distance, bias-corrected by a
// same-law baseline at the same sample budget.  Values are reported per
// particle (divided by k).
ChaosReport poc_wasserstein_experiment(const SimConfig& config,
                                       const KernelSpec& spec, const InitSpec& init,
                                       const PocParams& p);

struct GradientScanParams {
  double eta = 0.5;
  int j = 1;                           // finite-difference order
  std::string direction_class = "full";  // full | position | velocity
  double s = 0;
  std::vector<double> t_grid;
  std::vector<std::vector<double>> x_probes;
  double fd_step = 0;                  // 0 picks a scale-aware default
  int samples = 2000;
  int family = 3;                      // cone test functions per probe
  double cone_radius = 2.0;
  double slope_slack = 0.15;
  double noise_floor = 0.2;            // relative standard error that drops a point
  std::uint64_t seed = 0;
};

// Central finite differences of x -> E f(X_{s,t}^x) under common random
// numbers, maximized over an eta-Hoelder family of truncated cones centered
// on the deterministic flow image of the probes; fits log max-gradient
// against log elapsed time.  Targets: (eta - j)/2 for full and velocity
// directions, (eta - 3)/2 for kinetic position directions at j = 1.
ChaosReport gradient_scaling_scan(const KernelSpec& spec, const FlowTable& flow,
                                  const GradientScanParams& p);

// Mean squared distance between noisy decoupled samples and the
// deterministic flow, per elapsed time; slope target 1.
ChaosReport flow_deviation_check(const KernelSpec& spec, const FlowTable& flow,
                                 const std::vector<std::vector<double>>& x_probes,
                                 double s, const std::vector<double>& t_grid,
                                 int samples, std::uint64_t seed,
                                 Band band = {0.85, 1.15, 0.9});

// Sup-over-grid second moments of both systems against the initial second
// moment; fails when the growth ratio exceeds the budget.
ChaosReport moment_sanity(const SimConfig& config, const KernelSpec& spec,
                          const InitSpec& init, int flow_M, double budget = 1e3);

}  // namespace mflab
