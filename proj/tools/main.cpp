#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "mflab/config.hpp"
#include "mflab/io.hpp"
#include "mflab/transport.hpp"
#include "mflab/version.hpp"

namespace {

int cmd_run(const std::string& path) { return mflab::run_from_config(path); }

int cmd_dist(const std::string& file_a, const std::string& file_b, double eta, int m,
             const std::string& method, std::optional<double> t_a,
             std::optional<double> t_b, double reg, int family, std::uint64_t seed) {
  mflab::EmpiricalMeasure a = mflab::cloud_from_file(file_a, t_a);
  mflab::EmpiricalMeasure b = mflab::cloud_from_file(file_b, t_b);
  if (method == "exact") {
    auto res = mflab::exact_wasserstein_eta(a, b, eta, m);
    std::printf("exact %.12g\n", res.value);
  } else if (method == "sinkhorn") {
    auto res = mflab::sinkhorn_wasserstein_eta(a, b, eta, m, reg);
    std::printf("sinkhorn %.12g (iterations %d, marginal error %.3g%s)\n", res.value,
                res.iterations, res.marginal_error,
                res.converged ? "" : ", not converged");
  } else {
    auto res = mflab::dual_lower_bound(a, b, eta, m, family, seed);
    std::printf("dual %.12g (family size %d)\n", res.value, res.family_size);
    const size_t na = a.count(), nb = b.count();
    if (na <= 4096 && nb <= 4096) {
      auto ex = mflab::exact_wasserstein_eta(a, b, eta, m);
      std::printf("gap to exact %.12g\n", ex.value - res.value);
    } else {
      std::printf("gap to exact unavailable (support too large)\n");
    }
  }
  return 0;
}

int cmd_selftest(std::uint64_t seed, int instances, int max_support) {
  auto rep = mflab::transport_selftest(seed, instances, max_support);
  const char* checks[] = {"oracle", "duality", "dirac",    "metric",
                          "jensen", "sinkhorn", "weighted"};
  for (const char* name : checks) {
    bool ok = rep[std::string(name) + "_ok"].get<bool>();
    std::printf("selftest %-8s %s\n", name, ok ? "ok" : "FAIL");
  }
  bool pass = rep["pass"].get<bool>();
  std::printf("selftest %s (%d instances, seed %llu)\n", pass ? "pass" : "FAIL",
              rep["instances"].get<int>(),
              static_cast<unsigned long long>(seed));
  return pass ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mflab: mean-field particle systems, their limits, and L^eta transport"};
  app.set_version_flag("--version", std::string(mflab::kVersion));
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "run an experiment described by a config file");
  run->add_option("config", config_path, "path to the JSON experiment config")
      ->required();

  std::string file_a, file_b, method = "exact";
  double eta = 1.0, reg = 0.0;
  int m = 1, family = 32;
  std::uint64_t dist_seed = 0;
  std::optional<double> t_a, t_b;
  auto* dist = app.add_subcommand(
      "dist", "distance between two point-cloud files (columnar format)");
  dist->add_option("a", file_a, "first cloud file")->required();
  dist->add_option("b", file_b, "second cloud file")->required();
  dist->add_option("--eta", eta, "cost exponent in (0, 1]")->required();
  dist->add_option("--m", m, "blocks per point (columns split as m blocks)")
      ->default_val(1);
  dist->add_option("--method", method, "exact | sinkhorn | dual")
      ->check(CLI::IsMember({"exact", "sinkhorn", "dual"}))
      ->default_val("exact");
  dist->add_option("--t-a", t_a, "time slice to take from the first file");
  dist->add_option("--t-b", t_b, "time slice to take from the second file");
  dist->add_option("--reg", reg, "entropic regularization (0 = auto)")
      ->default_val(0.0);
  dist->add_option("--family", family, "dual test-function family size")
      ->default_val(32);
  dist->add_option("--seed", dist_seed, "seed for the dual family")->default_val(0);

  std::uint64_t st_seed = 20260822;
  int st_instances = 200, st_support = 7;
  auto* self = app.add_subcommand("selftest", "transport property battery");
  self->add_option("--seed", st_seed, "battery seed")->default_val(20260822);
  self->add_option("--instances", st_instances, "number of random instances")
      ->default_val(200);
  self->add_option("--max-support", st_support, "largest support size (<= 8)")
      ->default_val(7);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path);
    if (dist->parsed())
      return cmd_dist(file_a, file_b, eta, m, method, t_a, t_b, reg, family,
                      dist_seed);
    return cmd_selftest(st_seed, st_instances, st_support);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
