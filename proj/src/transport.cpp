#include "mflab/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mflab/errors.hpp"
#include "mflab/noise.hpp"

namespace mflab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_problem(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                   double eta, int m) {
  a.validate();
  b.validate();
  if (!(eta > 0.0) || eta > 1.0)
    throw TransportError("eta must lie in (0, 1]");
  if (m < 1) throw TransportError("m must be >= 1");
  if (a.dim != b.dim)
    throw TransportError("measures live in different dimensions");
  if (a.dim % m != 0)
    throw TransportError("m must divide the tuple dimension");
}

std::vector<double> cost_matrix(const EmpiricalMeasure& a,
                                const EmpiricalMeasure& b, double eta, int m) {
  const int na = a.count(), nb = b.count();
  std::vector<double> c(static_cast<size_t>(na) * nb);
  for (int i = 0; i < na; ++i)
    for (int j = 0; j < nb; ++j)
      c[static_cast<size_t>(i) * nb + j] = eta_cost(a.p(i), b.p(j), a.dim, eta, m);
  return c;
}

// Shortest augmenting paths with potentials on a dense square cost matrix.
// Returns the total (unnormalized) cost; fills row -> column matching.
double assignment_value(const std::vector<double>& c, int n,
                        std::vector<int>& match) {
  std::vector<double> u(static_cast<size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<size_t>(n) + 1, 0.0);
  std::vector<int> p(static_cast<size_t>(n) + 1, 0);
  std::vector<int> way(static_cast<size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<size_t>(n) + 1, kInf);
    std::vector<char> used(static_cast<size_t>(n) + 1, 0);
    do {
      used[static_cast<size_t>(j0)] = 1;
      int i0 = p[static_cast<size_t>(j0)], j1 = -1;
      double delta = kInf;
      for (int j = 1; j <= n; ++j)
        if (!used[static_cast<size_t>(j)]) {
          double cur = c[static_cast<size_t>(i0 - 1) * n + (j - 1)] -
                       u[static_cast<size_t>(i0)] - v[static_cast<size_t>(j)];
          if (cur < minv[static_cast<size_t>(j)]) {
            minv[static_cast<size_t>(j)] = cur;
            way[static_cast<size_t>(j)] = j0;
          }
          if (minv[static_cast<size_t>(j)] < delta) {
            delta = minv[static_cast<size_t>(j)];
            j1 = j;
          }
        }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<size_t>(j)]) {
          u[static_cast<size_t>(p[static_cast<size_t>(j)])] += delta;
          v[static_cast<size_t>(j)] -= delta;
        } else {
          minv[static_cast<size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<size_t>(j0)] != 0);
    do {
      int j1 = way[static_cast<size_t>(j0)];
      p[static_cast<size_t>(j0)] = p[static_cast<size_t>(j1)];
      j0 = j1;
    } while (j0);
  }
  match.assign(static_cast<size_t>(n), -1);
  double total = 0;
  for (int j = 1; j <= n; ++j) {
    int i = p[static_cast<size_t>(j)];
    match[static_cast<size_t>(i - 1)] = j - 1;
    total += c[static_cast<size_t>(i - 1) * n + (j - 1)];
  }
  return total;
}

// Successive shortest paths on the complete bipartite graph with node
// supplies; handles unequal counts and general weights.
double ssp_value(const std::vector<double>& c, int na, int nb,
                 std::vector<double> ex_a, std::vector<double> ex_b,
                 std::vector<PlanEntry>& plan) {
  const double eps0 = 1e-14;
  std::vector<double> pot_a(static_cast<size_t>(na), 0.0);
  std::vector<double> pot_b(static_cast<size_t>(nb), 0.0);
  std::vector<double> f(static_cast<size_t>(na) * nb, 0.0);
  const int V = na + nb;
  std::vector<double> dist(static_cast<size_t>(V));
  std::vector<int> prev(static_cast<size_t>(V));
  std::vector<char> done(static_cast<size_t>(V));

  int guard = 4 * V * V + 64;
  while (guard-- > 0) {
    bool have_source = false;
    std::fill(dist.begin(), dist.end(), kInf);
    std::fill(prev.begin(), prev.end(), -1);
    std::fill(done.begin(), done.end(), 0);
    for (int i = 0; i < na; ++i)
      if (ex_a[static_cast<size_t>(i)] > eps0) {
        dist[static_cast<size_t>(i)] = 0;
        have_source = true;
      }
    if (!have_source) break;

    int target = -1;
    while (true) {
      int u = -1;
      double best = kInf;
      for (int w = 0; w < V; ++w)
        if (!done[static_cast<size_t>(w)] && dist[static_cast<size_t>(w)] < best) {
          best = dist[static_cast<size_t>(w)];
          u = w;
        }
      if (u < 0) break;
      done[static_cast<size_t>(u)] = 1;
      if (u >= na && ex_b[static_cast<size_t>(u - na)] > eps0) {
        target = u;
        break;
      }
      if (u < na) {
        for (int j = 0; j < nb; ++j) {
          double rc = c[static_cast<size_t>(u) * nb + j] +
                      pot_a[static_cast<size_t>(u)] - pot_b[static_cast<size_t>(j)];
          if (rc < 0) rc = 0;
          if (dist[static_cast<size_t>(u)] + rc < dist[static_cast<size_t>(na + j)]) {
            dist[static_cast<size_t>(na + j)] = dist[static_cast<size_t>(u)] + rc;
            prev[static_cast<size_t>(na + j)] = u;
          }
        }
      } else {
        int j = u - na;
        for (int i = 0; i < na; ++i)
          if (f[static_cast<size_t>(i) * nb + j] > eps0) {
            double rc = -c[static_cast<size_t>(i) * nb + j] +
                        pot_b[static_cast<size_t>(j)] - pot_a[static_cast<size_t>(i)];
            if (rc < 0) rc = 0;
            if (dist[static_cast<size_t>(u)] + rc < dist[static_cast<size_t>(i)]) {
              dist[static_cast<size_t>(i)] = dist[static_cast<size_t>(u)] + rc;
              prev[static_cast<size_t>(i)] = u;
            }
          }
      }
    }
    if (target < 0)
      throw TransportError("min-cost flow: no augmenting path");

    // Unreached nodes still advance by dT, otherwise arcs into them
    // carrying flow would drift to negative reduced cost.
    double dT = dist[static_cast<size_t>(target)];
    for (int i = 0; i < na; ++i)
      pot_a[static_cast<size_t>(i)] += std::min(dist[static_cast<size_t>(i)], dT);
    for (int j = 0; j < nb; ++j)
      pot_b[static_cast<size_t>(j)] += std::min(dist[static_cast<size_t>(na + j)], dT);

    double delta = ex_b[static_cast<size_t>(target - na)];
    int node = target;
    while (prev[static_cast<size_t>(node)] >= 0) {
      int par = prev[static_cast<size_t>(node)];
      if (node >= na)
        ;  // forward arc par(a) -> node(b), unbounded capacity
      else
        delta = std::min(delta,
                         f[static_cast<size_t>(node) * nb + (par - na)]);
      node = par;
    }
    delta = std::min(delta, ex_a[static_cast<size_t>(node)]);

    int src = node;
    node = target;
    while (prev[static_cast<size_t>(node)] >= 0) {
      int par = prev[static_cast<size_t>(node)];
      if (node >= na)
        f[static_cast<size_t>(par) * nb + (node - na)] += delta;
      else
        f[static_cast<size_t>(node) * nb + (par - na)] -= delta;
      node = par;
    }
    ex_a[static_cast<size_t>(src)] -= delta;
    ex_b[static_cast<size_t>(target - na)] -= delta;
  }
  if (guard <= 0) throw TransportError("min-cost flow did not terminate");

  double total = 0;
  plan.clear();
  for (int i = 0; i < na; ++i)
    for (int j = 0; j < nb; ++j) {
      double w = f[static_cast<size_t>(i) * nb + j];
      if (w > eps0) {
        plan.push_back({i, j, w});
        total += w * c[static_cast<size_t>(i) * nb + j];
      }
    }
  return total;
}

double dual_bound_of(const std::vector<double>& c, int na, int nb,
                     const std::vector<double>& wa, const std::vector<double>& wb,
                     const std::vector<double>& fpot) {
  double val = 0;
  for (int i = 0; i < na; ++i) val += wa[static_cast<size_t>(i)] * fpot[static_cast<size_t>(i)];
  for (int j = 0; j < nb; ++j) {
    double g = kInf;
    for (int i = 0; i < na; ++i)
      g = std::min(g, c[static_cast<size_t>(i) * nb + j] - fpot[static_cast<size_t>(i)]);
    val += wb[static_cast<size_t>(j)] * g;
  }
  return val;
}

std::vector<double> uniform_weights(int n) {
  return std::vector<double>(static_cast<size_t>(n), 1.0 / n);
}

}  // namespace

void EmpiricalMeasure::validate() const {
  if (dim < 1) throw TransportError("measure dimension must be >= 1");
  if (points.empty() || points.size() % static_cast<size_t>(dim) != 0)
    throw TransportError("point buffer length must be a positive multiple of dim");
  if (!weights.empty()) {
    if (static_cast<int>(weights.size()) != count())
      throw TransportError("weight count does not match atom count");
    double sum = 0;
    for (double w : weights) {
      if (!(w >= 0)) throw TransportError("weights must be nonnegative");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw TransportError("weights must sum to one");
  }
}

double eta_cost(const double* x, const double* y, int dim, double eta, int m) {
  if (m < 1 || dim % m != 0)
    throw TransportError("m must divide the tuple dimension");
  const int db = dim / m;
  double total = 0;
  for (int blk = 0; blk < m; ++blk) {
    const double* xb = x + static_cast<size_t>(blk) * db;
    const double* yb = y + static_cast<size_t>(blk) * db;
    double ss = 0;
    for (int j = 0; j < db; ++j) ss += (xb[j] - yb[j]) * (xb[j] - yb[j]);
    total += (eta == 1.0) ? std::sqrt(ss) : std::pow(ss, 0.5 * eta);
  }
  return total;
}

TransportResult exact_wasserstein_eta(const EmpiricalMeasure& a,
                                      const EmpiricalMeasure& b, double eta,
                                      int m) {
  check_problem(a, b, eta, m);
  TransportResult res;
  if (a.weights.empty() && b.weights.empty()) {
    const int n = a.count();
    if (b.count() != n)
      throw TransportError("uniform measures must have equal atom counts");
    if (eta == 1.0 && a.dim == 1) {
      std::vector<int> ia(static_cast<size_t>(n)), ib(static_cast<size_t>(n));
      std::iota(ia.begin(), ia.end(), 0);
      std::iota(ib.begin(), ib.end(), 0);
      std::sort(ia.begin(), ia.end(),
                [&](int l, int r) { return a.points[static_cast<size_t>(l)] < a.points[static_cast<size_t>(r)]; });
      std::sort(ib.begin(), ib.end(),
                [&](int l, int r) { return b.points[static_cast<size_t>(l)] < b.points[static_cast<size_t>(r)]; });
      res.assignment.assign(static_cast<size_t>(n), -1);
      double total = 0;
      for (int r = 0; r < n; ++r) {
        res.assignment[static_cast<size_t>(ia[static_cast<size_t>(r)])] =
            ib[static_cast<size_t>(r)];
        total += std::abs(a.points[static_cast<size_t>(ia[static_cast<size_t>(r)])] -
                          b.points[static_cast<size_t>(ib[static_cast<size_t>(r)])]);
      }
      res.value = total / n;
      return res;
    }
    auto c = cost_matrix(a, b, eta, m);
    res.value = assignment_value(c, n, res.assignment) / n;
    return res;
  }
  auto c = cost_matrix(a, b, eta, m);
  auto wa = a.weights.empty() ? uniform_weights(a.count()) : a.weights;
  auto wb = b.weights.empty() ? uniform_weights(b.count()) : b.weights;
  res.value = ssp_value(c, a.count(), b.count(), wa, wb, res.plan);
  return res;
}

double brute_force_wasserstein(const EmpiricalMeasure& a,
                               const EmpiricalMeasure& b, double eta, int m) {
  check_problem(a, b, eta, m);
  if (!a.weights.empty() || !b.weights.empty())
    throw TransportError("brute force oracle handles uniform weights only");
  const int n = a.count();
  if (b.count() != n)
    throw TransportError("uniform measures must have equal atom counts");
  if (n > 8) throw TransportError("brute force oracle is limited to count <= 8");
  auto c = cost_matrix(a, b, eta, m);
  std::vector<int> perm(static_cast<size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  double best = kInf;
  do {
    double total = 0;
    for (int i = 0; i < n; ++i)
      total += c[static_cast<size_t>(i) * n + perm[static_cast<size_t>(i)]];
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / n;
}

TransportResult sinkhorn_wasserstein_eta(const EmpiricalMeasure& a,
                                         const EmpiricalMeasure& b, double eta,
                                         int m, double reg, int max_iter,
                                         double tol) {
  check_problem(a, b, eta, m);
  if (max_iter < 0) throw TransportError("max_iter must be >= 0");
  const int na = a.count(), nb = b.count();
  auto c = cost_matrix(a, b, eta, m);
  auto wa = a.weights.empty() ? uniform_weights(na) : a.weights;
  auto wb = b.weights.empty() ? uniform_weights(nb) : b.weights;

  if (reg <= 0) {
    // Diagonal scaling stalls far from the fixed point once reg drops to a
    // percent of the cost scale, so the default stays mildly blurred.
    std::vector<double> sorted = c;
    std::sort(sorted.begin(), sorted.end());
    double med = sorted[sorted.size() / 2];
    reg = med > 0 ? 5e-2 * med : 1e-3;
  }

  std::vector<double> kmat(c.size());
  for (size_t i = 0; i < c.size(); ++i) kmat[i] = std::exp(-c[i] / reg);
  std::vector<double> u(static_cast<size_t>(na), 1.0);
  std::vector<double> v(static_cast<size_t>(nb), 1.0);

  TransportResult res;
  res.converged = false;
  int it = 0;
  for (; it < max_iter; ++it) {
    for (int i = 0; i < na; ++i) {
      double s = 0;
      for (int j = 0; j < nb; ++j)
        s += kmat[static_cast<size_t>(i) * nb + j] * v[static_cast<size_t>(j)];
      if (!(s > 0) || !std::isfinite(s))
        throw TransportError("entropic scaling underflow; increase reg");
      u[static_cast<size_t>(i)] = wa[static_cast<size_t>(i)] / s;
    }
    double err = 0;
    for (int j = 0; j < nb; ++j) {
      double s = 0;
      for (int i = 0; i < na; ++i)
        s += kmat[static_cast<size_t>(i) * nb + j] * u[static_cast<size_t>(i)];
      if (!(s > 0) || !std::isfinite(s))
        throw TransportError("entropic scaling underflow; increase reg");
      err = std::max(err, std::abs(v[static_cast<size_t>(j)] * s - wb[static_cast<size_t>(j)]));
      v[static_cast<size_t>(j)] = wb[static_cast<size_t>(j)] / s;
    }
    res.iterations = it + 1;
    if (err <= tol) {
      res.converged = true;
      break;
    }
  }

  double value = 0, merr = 0;
  for (int i = 0; i < na; ++i) {
    double row = 0;
    for (int j = 0; j < nb; ++j) {
      double pij = u[static_cast<size_t>(i)] * kmat[static_cast<size_t>(i) * nb + j] *
                   v[static_cast<size_t>(j)];
      value += pij * c[static_cast<size_t>(i) * nb + j];
      row += pij;
    }
    merr = std::max(merr, std::abs(row - wa[static_cast<size_t>(i)]));
  }
  if (!std::isfinite(value))
    throw TransportError("entropic scaling underflow; increase reg");
  res.value = value;
  res.marginal_error = merr;
  return res;
}

DualResult dual_lower_bound(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                            double eta, int m, int family_size,
                            std::uint64_t seed) {
  check_problem(a, b, eta, m);
  if (family_size < 1) throw TransportError("family_size must be >= 1");
  const int na = a.count(), nb = b.count();
  auto c = cost_matrix(a, b, eta, m);
  auto wa = a.weights.empty() ? uniform_weights(na) : a.weights;
  auto wb = b.weights.empty() ? uniform_weights(nb) : b.weights;

  DualResult out;
  out.value = -kInf;
  std::vector<double> fpot(static_cast<size_t>(na), 0.0);
  std::vector<double> best_f = fpot;
  int idx = 0;

  auto consider = [&](const std::vector<double>& f) {
    double val = dual_bound_of(c, na, nb, wa, wb, f);
    if (val > out.value) {
      out.value = val;
      out.best_index = idx;
      best_f = f;
    }
    ++idx;
  };

  consider(fpot);
  int det = std::min(nb, std::max(1, family_size / 2));
  for (int k = 0; k < det; ++k) {
    for (int i = 0; i < na; ++i)
      fpot[static_cast<size_t>(i)] = c[static_cast<size_t>(i) * nb + k];
    consider(fpot);
  }
  for (int r = idx; r < family_size; ++r) {
    auto pick = static_cast<int>(uniform01(seed, static_cast<std::uint64_t>(r), 0,
                                           0xD0000000u) * nb);
    if (pick >= nb) pick = nb - 1;
    double gamma = uniform01(seed, static_cast<std::uint64_t>(r), 1, 0xD0000000u);
    for (int i = 0; i < na; ++i)
      fpot[static_cast<size_t>(i)] = gamma * c[static_cast<size_t>(i) * nb + pick];
    consider(fpot);
  }

  // c-transform polish of the best candidate; never lowers the bound.
  for (int round = 0; round < 2; ++round) {
    std::vector<double> g(static_cast<size_t>(nb), kInf);
    for (int j = 0; j < nb; ++j)
      for (int i = 0; i < na; ++i)
        g[static_cast<size_t>(j)] =
            std::min(g[static_cast<size_t>(j)],
                     c[static_cast<size_t>(i) * nb + j] - best_f[static_cast<size_t>(i)]);
    std::vector<double> f2(static_cast<size_t>(na), kInf);
    for (int i = 0; i < na; ++i)
      for (int j = 0; j < nb; ++j)
        f2[static_cast<size_t>(i)] =
            std::min(f2[static_cast<size_t>(i)],
                     c[static_cast<size_t>(i) * nb + j] - g[static_cast<size_t>(j)]);
    consider(f2);
  }
  out.family_size = idx;
  return out;
}

double product_tensorization_bound(const std::vector<double>& marginal_values) {
  double total = 0;
  for (double v : marginal_values) {
    if (v < 0) throw TransportError("marginal distances must be nonnegative");
    total += v;
  }
  return total;
}

double wasserstein1_support(const double* a, const double* b, int M, int q) {
  if (M < 1 || q < 1) throw TransportError("empty support");
  if (q == 1) {
    std::vector<double> xa(a, a + M), xb(b, b + M);
    std::sort(xa.begin(), xa.end());
    std::sort(xb.begin(), xb.end());
    double total = 0;
    for (int i = 0; i < M; ++i)
      total += std::abs(xa[static_cast<size_t>(i)] - xb[static_cast<size_t>(i)]);
    return total / M;
  }
  if (M <= 256) {
    std::vector<double> c(static_cast<size_t>(M) * M);
    for (int i = 0; i < M; ++i)
      for (int j = 0; j < M; ++j) {
        double ss = 0;
        for (int l = 0; l < q; ++l) {
          double dd = a[static_cast<size_t>(i) * q + l] - b[static_cast<size_t>(j) * q + l];
          ss += dd * dd;
        }
        c[static_cast<size_t>(i) * M + j] = std::sqrt(ss);
      }
    std::vector<int> match;
    return assignment_value(c, M, match) / M;
  }
  double total = 0;
  for (int i = 0; i < M; ++i) {
    double ss = 0;
    for (int l = 0; l < q; ++l) {
      double dd = a[static_cast<size_t>(i) * q + l] - b[static_cast<size_t>(i) * q + l];
      ss += dd * dd;
    }
    total += std::sqrt(ss);
  }
  return total / M;
}

}  // namespace mflab
