#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include "doctest.h"
#include "mflab/chaos.hpp"
#include "mflab/errors.hpp"
#include "mflab/simulate.hpp"

using namespace mflab;

namespace {

SimConfig quick_config(const KernelSpec& spec, double dt, double T,
                       std::uint64_t seed) {
  SimConfig c;
  c.N = 8;
  c.d = spec.d;
  c.n = spec.n;
  c.kind = spec.kind;
  c.dt = dt;
  c.T = T;
  c.seed = seed;
  c.snapshot_stride = static_cast<int>(std::llround(T / dt));
  return c;
}

bool has_note(const ChaosReport& r, const std::string& needle) {
  for (const auto& note : r.notes)
    if (note.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("strong error collapses to zero for measure-independent dynamics") {
  auto spec = make_builtin("constant-diffusion-ou", {});
  auto cfg = quick_config(spec, 0.02, 0.1, 41);
  auto rep = strong_error_experiment({4, 8}, cfg, spec, InitSpec{}, 16, 8);
  CHECK(rep.pass);
  CHECK(has_note(rep, "collapse"));
  REQUIRE(rep.curves.size() == 1);
  for (double v : rep.curves[0].ordinates) CHECK(v == 0.0);
}

TEST_CASE("constant observable has zero fluctuation at every N") {
  auto rep = fluctuation_check("constant", InitSpec{}, 1, {10, 100}, 20, 7,
                               nullptr, {-1.15, -0.85, 0.95}, 1000);
  CHECK(rep.pass);
  CHECK(has_note(rep, "zero"));
}

TEST_CASE("identity observable fluctuates at the CLT rate") {
  auto rep = fluctuation_check("identity", InitSpec{}, 1, {50, 500, 5000}, 100,
                               2024, nullptr, {-1.15, -0.85, 0.95}, 100000);
  CHECK(rep.pass);
  REQUIRE(rep.curves.size() == 1);
  REQUIRE(rep.curves[0].fit.fitted);
  CHECK(rep.curves[0].fit.slope == doctest::Approx(-1.0).epsilon(0.12));
}

TEST_CASE("unknown observable name is rejected") {
  CHECK_THROWS_AS(
      fluctuation_check("no-such-h", InitSpec{}, 1, {10, 20}, 5, 1),
      ConfigError);
}

TEST_CASE("self-distance correction is statistically zero for identical laws") {
  auto spec = make_builtin("constant-diffusion-ou", {});
  auto cfg = quick_config(spec, 0.02, 0.1, 73);
  PocParams p;
  p.k = 1;
  p.N_grid = {1};
  p.eta = 0.5;
  p.t = 0.1;
  p.outer_samples = 64;
  p.batches = 8;
  p.flow_M = 32;
  p.seed = 99;
  auto rep = poc_wasserstein_experiment(cfg, spec, InitSpec{}, p);
  const RateCurve* corrected = nullptr;
  for (const auto& curve : rep.curves)
    if (curve.name == "w_eta_corrected") corrected = &curve;
  REQUIRE(corrected != nullptr);
  REQUIRE(corrected->ordinates.size() == 1);
  REQUIRE(corrected->stderrs.size() == 1);
  CHECK(std::abs(corrected->ordinates[0]) <= 4.0 * corrected->stderrs[0]);
}

TEST_CASE("poc parameter validation") {
  auto spec = make_builtin("linear-attraction", {});
  auto cfg = quick_config(spec, 0.02, 0.1, 5);
  PocParams p;
  p.N_grid = {4};
  p.t = 0.1;
  SUBCASE("k larger than N") {
    p.k = 8;
    CHECK_THROWS_AS(poc_wasserstein_experiment(cfg, spec, InitSpec{}, p),
                    ConfigError);
  }
  SUBCASE("outer sample floor") {
    p.outer_samples = 8;
    CHECK_THROWS_AS(poc_wasserstein_experiment(cfg, spec, InitSpec{}, p),
                    ConfigError);
  }
  SUBCASE("unknown init mode") {
    p.init_mode = "bogus";
    CHECK_THROWS_AS(poc_wasserstein_experiment(cfg, spec, InitSpec{}, p),
                    ConfigError);
  }
}

TEST_CASE("gradient scan zero family short-circuits") {
  auto spec = make_builtin("constant-diffusion-ou", {});
  auto cfg = quick_config(spec, 0.01, 0.04, 15);
  FlowTable flow = solve_meanfield_flow(cfg, spec, InitSpec{}, 16, 1e-10, 10);
  GradientScanParams g;
  g.t_grid = {0.01, 0.02, 0.04};
  g.x_probes = {{0.0}};
  g.samples = 50;
  g.family = 0;
  g.seed = 3;
  auto rep = gradient_scaling_scan(spec, flow, g);
  CHECK(rep.pass);
  CHECK(has_note(rep, "zero"));
}

TEST_CASE("gradient scan produces a usable finite-difference curve") {
  auto spec = make_builtin("constant-diffusion-ou", {});
  auto cfg = quick_config(spec, 0.01, 0.04, 15);
  FlowTable flow = solve_meanfield_flow(cfg, spec, InitSpec{}, 16, 1e-10, 10);
  GradientScanParams g;
  g.t_grid = {0.01, 0.02, 0.04};
  g.x_probes = {{0.5}};
  g.samples = 400;
  g.family = 1;
  g.seed = 8;
  auto rep = gradient_scaling_scan(spec, flow, g);
  REQUIRE(rep.curves.size() == 1);
  CHECK(rep.curves[0].ordinates.size() +
            rep.curves[0].dropped_abscissas.size() ==
        3);
  for (double v : rep.curves[0].ordinates) CHECK(v > 0.0);
}

TEST_CASE("gradient scan direction classes are model-checked") {
  auto first = make_builtin("constant-diffusion-ou", {});
  auto cfg1 = quick_config(first, 0.01, 0.02, 1);
  FlowTable flow1 = solve_meanfield_flow(cfg1, first, InitSpec{}, 16, 1e-10, 10);
  GradientScanParams g;
  g.t_grid = {0.01, 0.02};
  g.x_probes = {{0.0}};
  g.samples = 10;
  g.direction_class = "position";
  CHECK_THROWS_AS(gradient_scaling_scan(first, flow1, g), ConfigError);

  auto kin = make_builtin("kinetic-linear", {});
  auto cfg2 = quick_config(kin, 0.01, 0.02, 2);
  FlowTable flow2 = solve_meanfield_flow(cfg2, kin, InitSpec{}, 16, 1e-10, 10);
  g.direction_class = "full";
  g.x_probes = {{0.0, 0.0}};
  CHECK_THROWS_AS(gradient_scaling_scan(kin, flow2, g), ConfigError);
}

TEST_CASE("flow deviation tracks the OU variance growth") {
  auto spec = make_builtin("constant-diffusion-ou", {});
  auto cfg = quick_config(spec, 0.01, 0.08, 27);
  FlowTable flow = solve_meanfield_flow(cfg, spec, InitSpec{}, 32, 1e-10, 10);
  auto rep = flow_deviation_check(spec, flow, {{1.0}}, 0.0, {0.02, 0.04, 0.08},
                                  4000, 17);
  CHECK(rep.pass);
  REQUIRE(rep.curves.size() == 1);
  const auto& curve = rep.curves[0];
  REQUIRE(curve.ordinates.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    double tau = curve.abscissas[i];
    double expected = (1.0 - std::exp(-2.0 * tau)) / 2.0;
    CHECK(curve.ordinates[i] == doctest::Approx(expected).epsilon(0.07));
  }
}

TEST_CASE("moment sanity passes a generous budget and fails a hostile one") {
  auto spec = make_builtin("linear-attraction", {});
  auto cfg = quick_config(spec, 0.02, 0.1, 61);
  auto ok = moment_sanity(cfg, spec, InitSpec{}, 16, 1e3);
  CHECK(ok.pass);
  auto bad = moment_sanity(cfg, spec, InitSpec{}, 16, 1e-6);
  CHECK_FALSE(bad.pass);
}
