#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mflab/kernels.hpp"

namespace mflab {

// Time-discretization and ensemble-size parameters for one simulation.
// The grid is {0, dt, 2dt, ..., T}; T must be an integer multiple of dt.
struct SimConfig {
  int N = 0;
  int d = 1;
  int n = 1;
  Kind kind = Kind::FirstOrder;
  double dt = 1e-3;
  double T = 1.0;
  std::uint64_t seed = 0;
  int snapshot_stride = 1;

  int q() const { return kind == Kind::Kinetic ? 2 * d : d; }
  std::int64_t steps() const;
  void validate() const;
};

// N points in R^q at a common time. Storage is row-major: particle i occupies
// x[i*q .. (i+1)*q). Kinetic states are ordered (position, velocity).
struct EnsembleState {
  double t = 0;
  int q = 1;
  std::vector<double> x;

  int size() const { return static_cast<int>(x.size()) / q; }
  double* p(int i) { return x.data() + static_cast<size_t>(i) * q; }
  const double* p(int i) const { return x.data() + static_cast<size_t>(i) * q; }
};

struct PathBundle {
  std::vector<double> grid;
  std::vector<EnsembleState> snapshots;
  // Per-particle running sup of |X_i - paired_i| over the full step grid,
  // filled by the coupled runner.
  std::optional<std::vector<double>> running_sup_dev;
};

// Empirical approximation of the limit flow: an M-point uniform-weight
// support at every grid time. snaps[k] holds M*q doubles at grid[k].
struct FlowTable {
  std::vector<double> grid;
  int M = 0;
  int q = 1;
  std::vector<std::vector<double>> snaps;
  bool converged = false;
  int iterations = 0;
  double final_delta = 0;
  std::vector<double> delta_history;

  // Grid index of time t; throws if t is off-grid (no interpolation).
  int index_of(double t) const;
};

}
