#pragma once

// Optimal transport engine for empirical measures under the L^eta cost
//
//   c(x, y) = sum_{i<m} |x^i - y^i|_2^eta,   eta in (0, 1],
//
// where x, y in (R^db)^m are concatenated m-tuples (dim = m * db) and the
// transported value is the plain infimum E[c] without an outer root.  For
// eta < 1 the per-block cost is itself a metric, so the value is one too.
//
// Solvers:
//   exact_wasserstein_eta    assignment (shortest augmenting paths with
//                            potentials) for uniform equal-size inputs, a
//                            sorted shortcut for eta = 1 in one dimension,
//                            min-cost flow for general weights
//   brute_force_wasserstein  permutation scan, n <= 8, oracle for tests
//   sinkhorn_wasserstein_eta entropic approximation, biased upward
//   dual_lower_bound         Kantorovich potentials on the support, always
//                            a valid lower bound by weak duality
//
// Sorted (monotone) matching is only used for eta = 1 in d = 1: for
// concave costs it is not optimal, e.g. mu = {0, e}, nu = {e, 1} with
// small e > 0 prefers the crossed pairing under sqrt cost.

#include <cstdint>
#include <vector>

namespace mflab {

struct EmpiricalMeasure {
  int dim = 1;                  // ambient dimension of one atom
  std::vector<double> points;   // row-major, count() x dim
  std::vector<double> weights;  // empty means uniform 1/count()

  int count() const { return dim > 0 ? static_cast<int>(points.size()) / dim : 0; }
  const double* p(int i) const { return points.data() + static_cast<size_t>(i) * dim; }
  void validate() const;
};

struct PlanEntry {
  int i = 0, j = 0;
  double w = 0;
};

struct TransportResult {
  double value = 0;
  std::vector<int> assignment;   // assignment[i] = atom of b paired with atom i of a
  std::vector<PlanEntry> plan;   // sparse coupling for the weighted solver
  int iterations = 0;
  bool converged = true;
  double marginal_error = 0;     // entropic solver only
};

struct DualResult {
  double value = 0;       // best lower bound found
  int best_index = 0;     // member of the candidate family that attained it
  int family_size = 0;
};

// Tuple cost between two concatenated points of length dim = m * db.
double eta_cost(const double* x, const double* y, int dim, double eta, int m);

// Exact value of the L^eta transport problem between a and b.
TransportResult exact_wasserstein_eta(const EmpiricalMeasure& a,
                                      const EmpiricalMeasure& b, double eta,
                                      int m);

// Permutation oracle, uniform weights, equal counts, count <= 8.
double brute_force_wasserstein(const EmpiricalMeasure& a,
                               const EmpiricalMeasure& b, double eta, int m);

// Entropic approximation.  reg <= 0 picks 1e-2 times the median pairwise
// cost.  max_iter = 0 returns immediately with converged = false.  Throws
// TransportError when the scaling underflows (reg too small for the data).
TransportResult sinkhorn_wasserstein_eta(const EmpiricalMeasure& a,
                                         const EmpiricalMeasure& b, double eta,
                                         int m, double reg = 0.0,
                                         int max_iter = 1000, double tol = 1e-9);

// Best lower bound over a family of candidate potentials: the zero
// potential, deterministic cost slices f(x) = c(x, b_k), seeded random
// rescalings, then c-transform polish of the best candidate.
DualResult dual_lower_bound(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                            double eta, int m, int family_size = 32,
                            std::uint64_t seed = 0);

// Sum of per-factor distances; upper bound for the product-measure problem.
// Throws on a negative entry.
double product_tensorization_bound(const std::vector<double>& marginal_values);

// Plain 1-Wasserstein between two uniform supports of M points in R^q.
// Exact for q = 1 (sorted matching) and for small M via assignment;
// for large M in q > 1 it returns the index-coupling upper bound, which
// is what the mean-field Picard stopping rule consumes.
double wasserstein1_support(const double* a, const double* b, int M, int q);

}  // namespace mflab
