#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "mflab/kernels.hpp"
#include "mflab/state.hpp"

namespace mflab {

// Initial-law sampler. center is broadcast when it has a single entry.
//   Point:      center exactly
//   Normal:     center + scale * Z, Z standard normal
//   UniformBox: center + scale * U, U uniform in [-1, 1]^q
struct InitSpec {
  enum class Law { Point, Normal, UniformBox };
  Law law = Law::Normal;
  std::vector<double> center{0.0};
  double scale = 1.0;

  void sample(std::uint64_t seed, std::uint64_t stream, int q, double* out) const;
};

EnsembleState sample_ensemble(const InitSpec& init, int N, int q, std::uint64_t seed);

// One Euler-Maruyama step of the interacting system: coefficients are the
// kernel averages over the current ensemble itself, summed in fixed particle
// order m = 0..N-1. dw holds N*n Brownian increments for this step. Kinetic
// states move position by the pre-step velocity and apply drift/noise to the
// velocity. Throws SimError with particle index and time on non-finite state.
void step_interacting(const KernelSpec& spec, EnsembleState& state, double dt,
                      const double* dw);

// One Euler-Maruyama step of N independent copies whose coefficients are the
// kernel averages over an external support of M points (fixed order).
void step_against(const KernelSpec& spec, EnsembleState& state, double dt,
                  const double* dw, const double* support, int M);

// Interacting particle system over the full grid. Brownian streams are keyed
// by config.seed with stream_id = particle index, so coupled runs are
// arranged by reusing (seed, index). Snapshots are stored every
// snapshot_stride steps, always including t = 0 and t = T.
PathBundle run_interacting(const SimConfig& config, const KernelSpec& spec,
                           const EnsembleState& init);
PathBundle run_interacting(const SimConfig& config, const KernelSpec& spec,
                           const InitSpec& init);

// N independent copies of the limit dynamics driven by a frozen flow table.
// With share_noise_with_particles set, stream_id = particle index, so a
// paired run_interacting call with the same seed and initial data realizes
// the synchronous coupling; otherwise streams live in a disjoint range.
PathBundle run_limit_copies(const SimConfig& config, const KernelSpec& spec,
                            const FlowTable& flow, const EnsembleState& init,
                            bool share_noise_with_particles);
PathBundle run_limit_copies(const SimConfig& config, const KernelSpec& spec,
                            const FlowTable& flow, const InitSpec& init,
                            bool share_noise_with_particles);

// Synchronous coupling of the two systems above in lockstep (shared initial
// data, shared increments). Returns both endpoint bundles; the limit bundle
// carries running_sup_dev, the per-particle sup over the whole step grid of
// the Euclidean deviation.
struct CoupledResult {
  PathBundle interacting;
  PathBundle limit;
};
CoupledResult run_coupled_pair(const SimConfig& config, const KernelSpec& spec,
                               const FlowTable& flow, const EnsembleState& init);

// Picard solver for the limit flow. mu^(0) freezes the initial M-sample at
// every grid time; iteration k simulates M copies against mu^(k-1) and stops
// when sup_t W_1(mu^(k)_t, mu^(k-1)_t) <= picard_tol, or flags
// converged=false after max_iter. Noise streams are fixed across iterations
// so the stopping metric measures the Picard map itself.
FlowTable solve_meanfield_flow(const SimConfig& config, const KernelSpec& spec,
                               const InitSpec& init, int M, double picard_tol,
                               int max_iter);

// Decoupled dynamics started at x at grid time s, sampled sample_count times
// with fresh streams under the given seed; returns the states at grid time t
// (row-major sample_count x q). s and t must lie on the flow grid.
std::vector<double> run_decoupled(double s, double t, const std::vector<double>& x,
                                  const FlowTable& flow, const KernelSpec& spec,
                                  int sample_count, std::uint64_t seed);

// As run_decoupled, but hands every sample's state at each requested grid
// time to sink(sample, which, state); used by the scan experiments to share
// paths across a whole time grid. sink may be called from worker threads,
// with distinct samples never interleaved on the same slot.
void run_decoupled_capture(double s, const std::vector<double>& ts,
                           const std::vector<double>& x, const FlowTable& flow,
                           const KernelSpec& spec, int sample_count,
                           std::uint64_t seed,
                           const std::function<void(int, int, const double*)>& sink);

// Noiseless characteristic theta_{s,t}(x): classical RK4 for the drift
// averaged over the flow support, stepping on the flow grid.
std::vector<double> deterministic_flow(double s, double t, const std::vector<double>& x,
                                       const FlowTable& flow, const KernelSpec& spec);

double second_moment(const EnsembleState& state);

}
