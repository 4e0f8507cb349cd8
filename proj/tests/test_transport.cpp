#include <cmath>
#include <vector>

#include "doctest.h"
#include "mflab/errors.hpp"
#include "mflab/noise.hpp"
#include "mflab/transport.hpp"

using namespace mflab;

namespace {

EmpiricalMeasure gaussian_cloud(std::uint64_t seed, int n, int dim) {
  EmpiricalMeasure mu;
  mu.dim = dim;
  mu.points.resize(static_cast<size_t>(n) * dim);
  standard_normal(seed, 0, n * dim, mu.points.data());
  return mu;
}

EmpiricalMeasure line(std::vector<double> pts) {
  EmpiricalMeasure mu;
  mu.dim = 1;
  mu.points = std::move(pts);
  return mu;
}

}  // namespace

TEST_CASE("eta_cost sums per-block Euclidean powers") {
  std::vector<double> x = {0.0, 0.0}, y = {4.0, 9.0};
  CHECK(eta_cost(x.data(), y.data(), 2, 0.5, 2) == doctest::Approx(5.0));
  CHECK(eta_cost(x.data(), y.data(), 2, 1.0, 1) ==
        doctest::Approx(std::sqrt(16.0 + 81.0)));
  std::vector<double> z = {3.0, 4.0};
  CHECK(eta_cost(x.data(), z.data(), 2, 1.0, 1) == doctest::Approx(5.0));
  CHECK(eta_cost(x.data(), x.data(), 2, 0.3, 2) == doctest::Approx(0.0));
}

TEST_CASE("concave cost prefers the crossing matching") {
  // sorted pairing costs (0.1^0.5 + 0.9^0.5)/2; crossing costs 1/2
  auto a = line({0.0, 0.1});
  auto b = line({0.1, 1.0});
  auto res = exact_wasserstein_eta(a, b, 0.5, 1);
  CHECK(res.value == doctest::Approx(0.5));
  REQUIRE(res.assignment.size() == 2);
  CHECK(res.assignment[0] == 1);
  CHECK(res.assignment[1] == 0);
  // at eta = 1 the two pairings tie
  auto res1 = exact_wasserstein_eta(a, b, 1.0, 1);
  CHECK(res1.value == doctest::Approx((0.1 + 0.9) / 2.0));
}

TEST_CASE("exact solver equals brute force on seeded instances") {
  int checked = 0;
  const double etas[3] = {0.3, 0.5, 1.0};
  for (int i = 0; i < 60; ++i) {
    const int n = 2 + i % 6;
    const int m = 1 + i % 3;
    const double eta = etas[i % 3];
    auto a = gaussian_cloud(derive_seed(7, "ta", i), n, m);
    auto b = gaussian_cloud(derive_seed(7, "tb", i), n, m);
    double ex = exact_wasserstein_eta(a, b, eta, m).value;
    double br = brute_force_wasserstein(a, b, eta, m);
    CHECK(std::abs(ex - br) <= 1e-10);
    ++checked;
  }
  CHECK(checked == 60);
}

TEST_CASE("metric axioms hold on random triples") {
  for (int i = 0; i < 40; ++i) {
    const double eta = i % 2 ? 0.5 : 1.0;
    auto a = gaussian_cloud(derive_seed(11, "ma", i), 5, 2);
    auto b = gaussian_cloud(derive_seed(11, "mb", i), 5, 2);
    auto c = gaussian_cloud(derive_seed(11, "mc", i), 5, 2);
    double ab = exact_wasserstein_eta(a, b, eta, 1).value;
    double ba = exact_wasserstein_eta(b, a, eta, 1).value;
    double ac = exact_wasserstein_eta(a, c, eta, 1).value;
    double cb = exact_wasserstein_eta(c, b, eta, 1).value;
    CHECK(ab >= 0.0);
    CHECK(exact_wasserstein_eta(a, a, eta, 1).value == doctest::Approx(0.0));
    CHECK(ab == doctest::Approx(ba));
    CHECK(ab <= ac + cb + 1e-10);
  }
}

TEST_CASE("Jensen comparison across exponents") {
  for (int i = 0; i < 30; ++i) {
    auto a = gaussian_cloud(derive_seed(13, "ja", i), 6, 2);
    auto b = gaussian_cloud(derive_seed(13, "jb", i), 6, 2);
    double w_half = exact_wasserstein_eta(a, b, 0.5, 1).value;
    double w_one = exact_wasserstein_eta(a, b, 1.0, 1).value;
    CHECK(w_half <= std::pow(w_one, 0.5) + 1e-10);
  }
}

TEST_CASE("dual lower bound never exceeds the exact value") {
  for (int i = 0; i < 30; ++i) {
    const int m = 1 + i % 2;
    auto a = gaussian_cloud(derive_seed(17, "da", i), 6, m);
    auto b = gaussian_cloud(derive_seed(17, "db", i), 6, m);
    double ex = exact_wasserstein_eta(a, b, 0.5, m).value;
    auto dl = dual_lower_bound(a, b, 0.5, m, 24, derive_seed(17, "ds", i));
    CHECK(dl.value <= ex + 1e-10);
    CHECK(dl.value >= 0.0);
  }
  auto za = line({0.0});
  auto zb = line({2.0});
  auto tight = dual_lower_bound(za, zb, 0.5, 1, 8, 0);
  CHECK(std::abs(tight.value - std::sqrt(2.0)) < 1e-8);
}

TEST_CASE("sinkhorn stays above exact and reports its bias monotonely") {
  auto a = gaussian_cloud(derive_seed(19, "sa", 0), 8, 2);
  auto b = gaussian_cloud(derive_seed(19, "sb", 0), 8, 2);
  double ex = exact_wasserstein_eta(a, b, 0.5, 1).value;
  auto tightr = sinkhorn_wasserstein_eta(a, b, 0.5, 1, 0.05, 40000, 1e-12);
  auto loose = sinkhorn_wasserstein_eta(a, b, 0.5, 1, 0.2, 40000, 1e-12);
  REQUIRE(tightr.converged);
  REQUIRE(loose.converged);
  CHECK(tightr.value >= ex - 1e-8);
  CHECK(loose.value >= ex - 1e-8);
  CHECK(std::abs(tightr.value - ex) <= std::abs(loose.value - ex) + 1e-9);
  CHECK(tightr.marginal_error <= 1e-10);

  auto stopped = sinkhorn_wasserstein_eta(a, b, 0.5, 1, 0.05, 0, 1e-12);
  CHECK_FALSE(stopped.converged);
}

TEST_CASE("general-weight solver agrees with the assignment path") {
  for (int i = 0; i < 20; ++i) {
    const int n = 3 + i % 4;
    auto a = gaussian_cloud(derive_seed(23, "wa", i), n, 2);
    auto b = gaussian_cloud(derive_seed(23, "wb", i), n, 2);
    double uniform = exact_wasserstein_eta(a, b, 0.5, 1).value;
    auto aw = a;
    auto bw = b;
    aw.weights.assign(n, 1.0 / n);
    bw.weights.assign(n, 1.0 / n);
    double weighted = exact_wasserstein_eta(aw, bw, 0.5, 1).value;
    CHECK(weighted == doctest::Approx(uniform).epsilon(1e-9));
  }

  // hand-checked unbalanced-support case: move 0.5 mass across distance 1
  auto a = line({0.0, 1.0});
  auto b = line({0.0, 1.0});
  a.weights = {0.2, 0.8};
  b.weights = {0.7, 0.3};
  auto res = exact_wasserstein_eta(a, b, 0.5, 1);
  CHECK(res.value == doctest::Approx(0.5));
  double mass = 0;
  for (const auto& e : res.plan) mass += e.w;
  CHECK(mass == doctest::Approx(1.0));
}

TEST_CASE("tensorization bound sums marginals and dominates product instances") {
  CHECK(product_tensorization_bound({0.0, 0.0, 0.0}) == 0.0);
  CHECK(product_tensorization_bound({0.1, 0.2}) == doctest::Approx(0.3));
  CHECK_THROWS_AS(product_tensorization_bound({0.1, -0.2}), TransportError);

  for (int i = 0; i < 10; ++i) {
    auto a1 = gaussian_cloud(derive_seed(29, "p1", i), 3, 1);
    auto b1 = gaussian_cloud(derive_seed(29, "p2", i), 3, 1);
    auto a2 = gaussian_cloud(derive_seed(29, "p3", i), 3, 1);
    auto b2 = gaussian_cloud(derive_seed(29, "p4", i), 3, 1);
    double w1 = exact_wasserstein_eta(a1, b1, 0.5, 1).value;
    double w2 = exact_wasserstein_eta(a2, b2, 0.5, 1).value;
    // product measures on R^2 with 9 atoms each
    EmpiricalMeasure pa, pb;
    pa.dim = pb.dim = 2;
    for (int u = 0; u < 3; ++u)
      for (int v = 0; v < 3; ++v) {
        pa.points.push_back(a1.points[u]);
        pa.points.push_back(a2.points[v]);
        pb.points.push_back(b1.points[u]);
        pb.points.push_back(b2.points[v]);
      }
    double joint = exact_wasserstein_eta(pa, pb, 0.5, 2).value;
    CHECK(joint <= product_tensorization_bound({w1, w2}) + 1e-10);
  }
}

TEST_CASE("support W1 helper is exact in 1-d and an upper bound otherwise") {
  std::vector<double> a = {3.0, 1.0, 2.0};
  std::vector<double> b = {2.5, 0.0, 2.0};
  // sorted pairing: |1-0| + |2-2| + |3-2.5| over 3
  CHECK(wasserstein1_support(a.data(), b.data(), 3, 1) == doctest::Approx(0.5));

  auto ga = gaussian_cloud(derive_seed(31, "ga", 0), 300, 2);
  auto gb = gaussian_cloud(derive_seed(31, "gb", 0), 300, 2);
  double bound = wasserstein1_support(ga.points.data(), gb.points.data(), 300, 2);
  double ex = exact_wasserstein_eta(ga, gb, 1.0, 1).value;
  CHECK(bound >= ex - 1e-10);
  CHECK(wasserstein1_support(ga.points.data(), ga.points.data(), 300, 2) == 0.0);
}

TEST_CASE("invalid transport inputs throw") {
  auto a = gaussian_cloud(1, 4, 2);
  auto b = gaussian_cloud(2, 4, 2);
  CHECK_THROWS_AS(exact_wasserstein_eta(a, b, 0.0, 1), TransportError);
  CHECK_THROWS_AS(exact_wasserstein_eta(a, b, 1.5, 1), TransportError);
  CHECK_THROWS_AS(exact_wasserstein_eta(a, b, 0.5, 3), TransportError);
  auto c = gaussian_cloud(3, 5, 3);
  CHECK_THROWS_AS(exact_wasserstein_eta(a, c, 0.5, 1), TransportError);
  auto d = gaussian_cloud(4, 3, 2);
  CHECK_THROWS_AS(exact_wasserstein_eta(a, d, 0.5, 1), TransportError);
}
