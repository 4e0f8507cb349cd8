#include "mflab/chaos.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "mflab/errors.hpp"
#include "mflab/noise.hpp"
#include "mflab/parallel.hpp"
#include "mflab/transport.hpp"

namespace mflab {

namespace {

constexpr int kMinPocOuter = 32;

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double stderr_of(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (static_cast<double>(v.size()) - 1) /
                   static_cast<double>(v.size()));
}

ordered_json init_echo(const InitSpec& init) {
  const char* law = init.law == InitSpec::Law::Point      ? "point"
                    : init.law == InitSpec::Law::Normal   ? "normal"
                                                          : "uniform-box";
  return ordered_json{{"law", law}, {"center", init.center}, {"scale", init.scale}};
}

ordered_json kernel_echo(const KernelSpec& spec) {
  return ordered_json{
      {"name", spec.name}, {"d", spec.d}, {"n", spec.n}, {"params", spec.params}};
}

ordered_json band_echo(const Band& band) {
  return ordered_json{
      {"slope_lo", band.slope_lo}, {"slope_hi", band.slope_hi}, {"r2_min", band.r2_min}};
}

ordered_json curve_json(const RateCurve& c) {
  ordered_json j;
  j["name"] = c.name;
  j["abscissas"] = c.abscissas;
  j["ordinates"] = c.ordinates;
  if (!c.stderrs.empty()) j["stderrs"] = c.stderrs;
  if (!c.dropped_abscissas.empty()) j["dropped_abscissas"] = c.dropped_abscissas;
  j["fit"] = ordered_json{{"fitted", c.fit.fitted},
                          {"slope", c.fit.slope},
                          {"intercept", c.fit.intercept},
                          {"r2", c.fit.r2},
                          {"stderr_slope", c.fit.stderr_slope},
                          {"dropped", c.fit.dropped}};
  return j;
}

bool all_zero(const std::vector<double>& v) {
  for (double x : v)
    if (x != 0.0) return false;
  return true;
}

bool band_pass(const RateFit& fit, const Band& band) {
  return fit.fitted && fit.slope >= band.slope_lo && fit.slope <= band.slope_hi &&
         fit.r2 >= band.r2_min;
}

FlowTable solved_flow(const SimConfig& config, const KernelSpec& spec,
                      const InitSpec& init, int M, double tol, int max_iter) {
  FlowTable flow = solve_meanfield_flow(config, spec, init, M, tol, max_iter);
  if (!flow.converged)
    throw SimError("mean-field fixed point did not converge within " +
                   std::to_string(max_iter) + " iterations (last delta " +
                   std::to_string(flow.final_delta) + ")");
  return flow;
}

}  // namespace

ordered_json to_json(const ChaosReport& report) {
  ordered_json j;
  j["experiment"] = report.experiment;
  j["config"] = report.config_echo;
  j["curves"] = ordered_json::array();
  for (const auto& c : report.curves) j["curves"].push_back(curve_json(c));
  j["pass"] = report.pass;
  j["notes"] = report.notes;
  j["details"] = report.details;
  return j;
}

ChaosReport strong_error_experiment(const std::vector<int>& N_grid,
                                    const SimConfig& config, const KernelSpec& spec,
                                    const InitSpec& init, int flow_M, int reps,
                                    Band band, double picard_tol,
                                    int picard_max_iter) {
  if (N_grid.empty()) throw ConfigError("strong-error: empty N grid");
  for (int N : N_grid)
    if (N < 1) throw ConfigError("strong-error: N values must be positive");
  if (reps < 2) throw ConfigError("strong-error: need at least 2 replications");
  config.validate();

  ChaosReport report;
  report.experiment = "strong-error";
  report.config_echo = ordered_json{{"N_grid", N_grid},
                                    {"dt", config.dt},
                                    {"T", config.T},
                                    {"seed", config.seed},
                                    {"flow_M", flow_M},
                                    {"reps", reps},
                                    {"picard_tol", picard_tol},
                                    {"picard_max_iter", picard_max_iter},
                                    {"kernel", kernel_echo(spec)},
                                    {"init", init_echo(init)},
                                    {"band", band_echo(band)}};

  SimConfig fc = config;
  fc.N = flow_M;
  FlowTable flow = solved_flow(fc, spec, init, flow_M, picard_tol, picard_max_iter);

  RateCurve curve;
  curve.name = "per_particle_sup_error";
  double max_error = 0;
  for (int N : N_grid) {
    SimConfig c = config;
    c.N = N;
    c.snapshot_stride = static_cast<int>(config.steps());
    std::vector<double> errs(static_cast<size_t>(reps), 0.0);
    parallel_for(reps, [&](std::int64_t rep) {
      SimConfig cr = c;
      cr.seed = derive_seed(config.seed, "se-rep", static_cast<std::uint64_t>(N),
                            static_cast<std::uint64_t>(rep));
      EnsembleState e0 = sample_ensemble(init, N, c.q(), derive_seed(cr.seed, "init"));
      CoupledResult cp = run_coupled_pair(cr, spec, flow, e0);
      errs[static_cast<size_t>(rep)] = mean_of(*cp.limit.running_sup_dev);
    });
    double m = mean_of(errs);
    curve.abscissas.push_back(N);
    curve.ordinates.push_back(m);
    curve.stderrs.push_back(stderr_of(errs, m));
    max_error = std::max(max_error, m);
  }

  curve.fit = fit_rate(curve.abscissas, curve.ordinates);
  for (size_t i = 0; i < curve.ordinates.size(); ++i)
    if (curve.ordinates[i] <= 0) curve.dropped_abscissas.push_back(curve.abscissas[i]);

  report.details = ordered_json{{"flow_iterations", flow.iterations},
                                {"flow_final_delta", flow.final_delta},
                                {"max_error", max_error}};
  if (all_zero(curve.ordinates)) {
    report.pass = true;
    report.notes.push_back("coupling collapse: per-particle error is exactly zero at every N");
  } else {
    report.pass = band_pass(curve.fit, band);
    if (!report.pass) report.notes.push_back("rate fit outside the declared band");
  }
  report.curves.push_back(std::move(curve));
  return report;
}

ChaosReport fluctuation_check(const std::string& h_name, const InitSpec& law,
                              int dim, const std::vector<int>& N_grid, int reps,
                              std::uint64_t seed, const KernelSpec* drift_spec,
                              Band band, int ref_samples) {
  if (N_grid.empty()) throw ConfigError("fluctuation: empty N grid");
  if (dim < 1) throw ConfigError("fluctuation: dim must be >= 1");
  if (reps < 2) throw ConfigError("fluctuation: need at least 2 replications");
  if (ref_samples < 1000) throw ConfigError("fluctuation: reference cloud too small");

  std::function<double(const double*, const double*)> h;
  std::vector<double> hbuf;
  if (h_name == "constant") {
    h = [](const double*, const double*) { return 1.0; };
  } else if (h_name == "identity") {
    h = [](const double*, const double* y) { return y[0]; };
  } else if (h_name == "tanh") {
    h = [](const double* x, const double* y) { return std::tanh(x[0]) * y[0]; };
  } else if (h_name == "drift") {
    if (!drift_spec) throw ConfigError("fluctuation: h 'drift' needs a kernel spec");
    if (drift_spec->q() != dim)
      throw ConfigError("fluctuation: dim must match the kernel state dimension");
    hbuf.resize(static_cast<size_t>(drift_spec->d));
    h = [spec = drift_spec, &hbuf](const double* x, const double* y) {
      eval_drift_kernel(*spec, 0.0, x, y, hbuf.data());
      return hbuf[0];
    };
  } else {
    throw ConfigError("fluctuation: unknown h '" + h_name +
                      "' (catalog: constant, identity, tanh, drift)");
  }

  ChaosReport report;
  report.experiment = "fluctuation";
  report.config_echo = ordered_json{{"h", h_name},
                                    {"dim", dim},
                                    {"N_grid", N_grid},
                                    {"reps", reps},
                                    {"seed", seed},
                                    {"ref_samples", ref_samples},
                                    {"law", init_echo(law)},
                                    {"band", band_echo(band)}};
  if (drift_spec) report.config_echo["kernel"] = kernel_echo(*drift_spec);

  std::vector<double> ref(static_cast<size_t>(ref_samples) * dim);
  const std::uint64_t ref_seed = derive_seed(seed, "fluct-ref");
  for (int r = 0; r < ref_samples; ++r)
    law.sample(ref_seed, static_cast<std::uint64_t>(r), dim,
               ref.data() + static_cast<size_t>(r) * dim);

  RateCurve curve;
  curve.name = "mean_sq_fluctuation";
  const int maxN = *std::max_element(N_grid.begin(), N_grid.end());
  for (int N : N_grid) {
    std::vector<double> vals(static_cast<size_t>(reps), 0.0);
    const std::uint64_t zs = derive_seed(seed, "fluct-z", static_cast<std::uint64_t>(N));
    parallel_for(reps, [&, zs](std::int64_t rep) {
      std::vector<double> z(static_cast<size_t>(N) * dim);
      std::vector<double> hloc;  // private buffer when h is the drift kernel
      std::function<double(const double*, const double*)> hr = h;
      if (drift_spec) {
        hloc.resize(static_cast<size_t>(drift_spec->d));
        hr = [spec = drift_spec, &hloc](const double* x, const double* y) {
          eval_drift_kernel(*spec, 0.0, x, y, hloc.data());
          return hloc[0];
        };
      }
      for (int i = 0; i < N; ++i)
        law.sample(zs, static_cast<std::uint64_t>(rep) * static_cast<std::uint64_t>(maxN) +
                           static_cast<std::uint64_t>(i),
                   dim, z.data() + static_cast<size_t>(i) * dim);
      const double* z1 = z.data();
      double acc = 0;
      for (int i = 0; i < N; ++i) acc += hr(z1, z.data() + static_cast<size_t>(i) * dim);
      acc /= N;
      double refm = 0;
      for (int r = 0; r < ref_samples; ++r)
        refm += hr(z1, ref.data() + static_cast<size_t>(r) * dim);
      refm /= ref_samples;
      vals[static_cast<size_t>(rep)] = (acc - refm) * (acc - refm);
    });
    double m = mean_of(vals);
    curve.abscissas.push_back(N);
    curve.ordinates.push_back(m);
    curve.stderrs.push_back(stderr_of(vals, m));
  }

  curve.fit = fit_rate(curve.abscissas, curve.ordinates);
  for (size_t i = 0; i < curve.ordinates.size(); ++i)
    if (curve.ordinates[i] <= 0) curve.dropped_abscissas.push_back(curve.abscissas[i]);

  if (all_zero(curve.ordinates)) {
    report.pass = true;
    report.notes.push_back("deviation is exactly zero at every N");
  } else {
    report.pass = band_pass(curve.fit, band);
    if (!report.pass) report.notes.push_back("rate fit outside the declared band");
  }
  report.curves.push_back(std::move(curve));
  return report;
}

ChaosReport poc_wasserstein_experiment(const SimConfig& config,
                                       const KernelSpec& spec, const InitSpec& init,
                                       const PocParams& p) {
  if (p.N_grid.empty()) throw ConfigError("poc-rate: empty N grid");
  if (p.k < 1) throw ConfigError("poc-rate: k must be >= 1");
  for (int N : p.N_grid)
    if (p.k > N)
      throw ConfigError("poc-rate: k exceeds N=" + std::to_string(N));
  if (p.outer_samples < kMinPocOuter)
    throw ConfigError("poc-rate: outer_samples below the declared floor " +
                      std::to_string(kMinPocOuter) +
                      "; the empirical transport bias would dominate");
  if (p.batches < 2) throw ConfigError("poc-rate: need at least 2 batches");
  if (p.ref_clouds < 1) throw ConfigError("poc-rate: need at least 1 reference cloud");
  if (p.init_mode != "product" && p.init_mode != "perturbed-exchangeable")
    throw ConfigError("poc-rate: init_mode must be product or perturbed-exchangeable");

  SimConfig mc = config;
  mc.T = p.t;
  mc.snapshot_stride = static_cast<int>(mc.steps());
  mc.validate();
  const int q = mc.q();
  const bool perturbed = p.init_mode == "perturbed-exchangeable";
  const std::uint64_t seed0 = p.seed ? p.seed : config.seed;

  ChaosReport report;
  report.experiment = "poc-rate";
  report.config_echo = ordered_json{{"k", p.k},
                                    {"N_grid", p.N_grid},
                                    {"eta", p.eta},
                                    {"t", p.t},
                                    {"dt", mc.dt},
                                    {"init_mode", p.init_mode},
                                    {"outer_samples", p.outer_samples},
                                    {"batches", p.batches},
                                    {"ref_clouds", p.ref_clouds},
                                    {"flow_M", p.flow_M},
                                    {"seed", seed0},
                                    {"slope_max", p.slope_max},
                                    {"jensen_check", p.jensen_check},
                                    {"kernel", kernel_echo(spec)},
                                    {"init", init_echo(init)}};

  SimConfig fc = mc;
  fc.seed = seed0;
  FlowTable flow = solved_flow(fc, spec, init, p.flow_M, p.picard_tol, p.picard_max_iter);

  const int atoms = p.outer_samples;
  const int adim = q * p.k;
  const bool jensen = p.jensen_check && p.eta < 1.0;

  // Common random numbers throughout: the sample index seeds are shared
  // across N and with the coupled product cloud, so the empirical-transport
  // floor cancels in the corrected difference instead of burying the signal.
  auto limit_cloud = [&](const char* tag, std::uint64_t idx_base, bool share_streams) {
    EmpiricalMeasure mu;
    mu.dim = adim;
    mu.points.resize(static_cast<size_t>(atoms) * adim);
    parallel_for(atoms, [&](std::int64_t s) {
      SimConfig c = mc;
      c.N = p.k;
      c.seed = derive_seed(seed0, tag, idx_base + static_cast<std::uint64_t>(s));
      PathBundle out = run_limit_copies(c, spec, flow, init, share_streams);
      std::memcpy(mu.points.data() + static_cast<size_t>(s) * adim,
                  out.snapshots.back().x.data(), sizeof(double) * static_cast<size_t>(adim));
    });
    return mu;
  };

  RateCurve raw, base, corr, raw1;
  raw.name = "w_eta_raw";
  base.name = "w_eta_baseline";
  corr.name = "w_eta_corrected";
  raw1.name = "w_1_raw";
  bool jensen_ok = true;
  double jensen_worst = 0;

  // Per batch: a bank of independent reference clouds, plus one synchronously
  // coupled product cloud that reuses the "poc-sys" seeds so each of its atoms
  // rides the initial data and Brownian streams of the matching interacting
  // run.  Distances to the references are averaged; the matching noise of a
  // single reference would otherwise dominate the corrected value at large N.
  const int R = p.ref_clouds;
  const std::uint64_t ua = static_cast<std::uint64_t>(atoms);
  std::vector<std::vector<EmpiricalMeasure>> refs(static_cast<size_t>(p.batches));
  std::vector<double> d_base_b(static_cast<size_t>(p.batches));
  for (int b = 0; b < p.batches; ++b) {
    auto& bank = refs[static_cast<size_t>(b)];
    bank.reserve(static_cast<size_t>(R));
    for (int r = 0; r < R; ++r)
      bank.push_back(limit_cloud(
          "poc-lim",
          (static_cast<std::uint64_t>(b) * static_cast<std::uint64_t>(R) +
           static_cast<std::uint64_t>(r)) * ua,
          false));
    EmpiricalMeasure coupled =
        limit_cloud("poc-sys", static_cast<std::uint64_t>(b) * ua, true);
    double acc = 0;
    for (int r = 0; r < R; ++r)
      acc += exact_wasserstein_eta(coupled, bank[static_cast<size_t>(r)], p.eta, p.k).value /
             p.k;
    d_base_b[static_cast<size_t>(b)] = acc / R;
  }

  for (int N : p.N_grid) {
    std::vector<double> d_raw(static_cast<size_t>(p.batches));
    std::vector<double> d_corr(static_cast<size_t>(p.batches));
    std::vector<double> d_raw1(static_cast<size_t>(p.batches));
    for (int b = 0; b < p.batches; ++b) {
      EmpiricalMeasure sys;
      sys.dim = adim;
      sys.points.resize(static_cast<size_t>(atoms) * adim);
      parallel_for(atoms, [&](std::int64_t s) {
        SimConfig c = mc;
        c.N = N;
        c.seed = derive_seed(seed0, "poc-sys",
                             static_cast<std::uint64_t>(b) * ua +
                                 static_cast<std::uint64_t>(s));
        EnsembleState e0 = sample_ensemble(init, N, q, derive_seed(c.seed, "init"));
        if (perturbed) {
          std::vector<double> xi(static_cast<size_t>(q));
          standard_normal(derive_seed(c.seed, "xi"), 0, q, xi.data());
          const double scale = 1.0 / std::sqrt(static_cast<double>(N));
          for (int i = 0; i < N; ++i)
            for (int jq = 0; jq < q; ++jq) e0.p(i)[jq] += scale * xi[static_cast<size_t>(jq)];
        }
        PathBundle out = run_interacting(c, spec, e0);
        std::memcpy(sys.points.data() + static_cast<size_t>(s) * adim,
                    out.snapshots.back().x.data(),
                    sizeof(double) * static_cast<size_t>(adim));
      });
      const auto& bank = refs[static_cast<size_t>(b)];
      double de0 = 0;
      double acc = 0;
      for (int r = 0; r < R; ++r) {
        double v = exact_wasserstein_eta(sys, bank[static_cast<size_t>(r)], p.eta, p.k).value /
                   p.k;
        if (r == 0) de0 = v;
        acc += v;
      }
      double de = acc / R;
      d_raw[static_cast<size_t>(b)] = de;
      d_corr[static_cast<size_t>(b)] = de - d_base_b[static_cast<size_t>(b)];
      if (jensen) {
        double d1 = exact_wasserstein_eta(sys, bank[0], 1.0, p.k).value / p.k;
        d_raw1[static_cast<size_t>(b)] = d1;
        double bound = std::pow(d1, p.eta) + 1e-10;
        if (de0 > bound) {
          jensen_ok = false;
          jensen_worst = std::max(jensen_worst, de0 - bound);
        }
      }
    }
    auto push = [](RateCurve& c, int N_, const std::vector<double>& v) {
      double m = mean_of(v);
      c.abscissas.push_back(N_);
      c.ordinates.push_back(m);
      c.stderrs.push_back(stderr_of(v, m));
    };
    push(raw, N, d_raw);
    push(base, N, d_base_b);
    push(corr, N, d_corr);
    if (jensen) push(raw1, N, d_raw1);
  }

  corr.fit = fit_rate(corr.abscissas, corr.ordinates);
  for (size_t i = 0; i < corr.ordinates.size(); ++i)
    if (corr.ordinates[i] <= 0) corr.dropped_abscissas.push_back(corr.abscissas[i]);
  raw.fit = fit_rate(raw.abscissas, raw.ordinates);

  bool monotone = true;
  for (size_t i = 1; i < corr.ordinates.size(); ++i)
    if (!(corr.ordinates[i] < corr.ordinates[i - 1])) monotone = false;

  bool slope_ok = corr.fit.fitted && corr.fit.slope <= p.slope_max;
  report.pass = slope_ok && monotone && (!jensen || jensen_ok);
  if (!slope_ok) report.notes.push_back("corrected slope above the declared maximum");
  if (!monotone) report.notes.push_back("corrected distances are not strictly decreasing");
  if (jensen && !jensen_ok)
    report.notes.push_back("cross-eta comparison violated");
  report.details = ordered_json{{"flow_iterations", flow.iterations},
                                {"flow_final_delta", flow.final_delta},
                                {"monotone_corrected", monotone},
                                {"jensen_checked", jensen},
                                {"jensen_ok", jensen_ok},
                                {"jensen_worst_excess", jensen_worst},
                                {"per_particle_normalized", true}};
  report.curves.push_back(std::move(corr));
  report.curves.push_back(std::move(raw));
  report.curves.push_back(std::move(base));
  if (jensen) report.curves.push_back(std::move(raw1));
  return report;
}

ChaosReport gradient_scaling_scan(const KernelSpec& spec, const FlowTable& flow,
                                  const GradientScanParams& p) {
  if (!(p.eta > 0.0) || p.eta > 1.0)
    throw ConfigError("gradient-scan: eta must lie in (0, 1]");
  if (p.j != 1 && p.j != 2) throw ConfigError("gradient-scan: j must be 1 or 2");
  if (p.t_grid.empty()) throw ConfigError("gradient-scan: empty t grid");
  if (p.x_probes.empty()) throw ConfigError("gradient-scan: need at least one probe");
  if (p.samples < 16) throw ConfigError("gradient-scan: sample budget too small");
  const int q = spec.q();
  const int d = spec.d;
  const bool kinetic = spec.kind == Kind::Kinetic;
  for (const auto& x : p.x_probes)
    if (static_cast<int>(x.size()) != q)
      throw ConfigError("gradient-scan: probe dimension mismatch");

  int dir_lo = 0, dir_hi = q;
  if (p.direction_class == "full") {
    if (kinetic)
      throw ConfigError("gradient-scan: use position or velocity directions for kinetic kernels");
  } else if (p.direction_class == "position") {
    if (!kinetic)
      throw ConfigError("gradient-scan: position directions require a kinetic kernel");
    if (p.j != 1)
      throw ConfigError("gradient-scan: position directions support j = 1 only");
    dir_hi = d;
  } else if (p.direction_class == "velocity") {
    if (!kinetic)
      throw ConfigError("gradient-scan: velocity directions require a kinetic kernel");
    dir_lo = d;
  } else {
    throw ConfigError("gradient-scan: unknown direction class '" + p.direction_class + "'");
  }
  const bool position_class = p.direction_class == "position";
  const double target =
      position_class ? 0.5 * (p.eta - 3.0) : 0.5 * (p.eta - p.j);

  std::vector<double> taus;
  double tau_min = 0;
  for (double t : p.t_grid) {
    flow.index_of(t);
    double tau = t - p.s;
    if (!(tau > 0)) throw ConfigError("gradient-scan: t grid must lie above s");
    taus.push_back(tau);
    tau_min = tau_min == 0 ? tau : std::min(tau_min, tau);
  }
  double h = p.fd_step;
  if (h <= 0)
    h = position_class ? 0.05 * std::pow(tau_min, 1.5) : 0.05 * std::sqrt(tau_min);
  if (h > 0.1 * std::sqrt(tau_min))
    throw ConfigError("gradient-scan: fd_step too large for the diffusive scale");

  ChaosReport report;
  report.experiment = "gradient-scan";
  report.config_echo = ordered_json{{"eta", p.eta},
                                    {"j", p.j},
                                    {"direction_class", p.direction_class},
                                    {"s", p.s},
                                    {"t_grid", p.t_grid},
                                    {"x_probes", p.x_probes},
                                    {"fd_step", h},
                                    {"samples", p.samples},
                                    {"family", p.family},
                                    {"cone_radius", p.cone_radius},
                                    {"slope_slack", p.slope_slack},
                                    {"noise_floor", p.noise_floor},
                                    {"seed", p.seed},
                                    {"kernel", kernel_echo(spec)}};

  const int T = static_cast<int>(p.t_grid.size());
  const int P = static_cast<int>(p.x_probes.size());
  const int F = std::max(1, p.family);
  const bool constant_family = p.family == 0;
  // profiled coordinates of the cone test functions
  const int sub_lo = position_class ? 0 : (p.direction_class == "velocity" ? d : 0);
  const int sub_hi = position_class ? d : q;

  auto capture_points = [&](const std::vector<double>& start, std::uint64_t run_seed) {
    std::vector<double> pts(static_cast<size_t>(p.samples) * T * q);
    run_decoupled_capture(p.s, p.t_grid, start, flow, spec, p.samples, run_seed,
                          [&](int sample, int which, const double* z) {
                            std::memcpy(pts.data() +
                                            (static_cast<size_t>(sample) * T + which) * q,
                                        z, sizeof(double) * static_cast<size_t>(q));
                          });
    return pts;
  };

  // offsets of the cone centers in units of the per-coordinate sample spread
  auto offset_factor = [&](int r) {
    if (r == 0) return 0.0;
    double mag = 0.75 * static_cast<double>((r + 1) / 2);
    return (r % 2 == 1) ? mag : -mag;
  };

  auto eval_family = [&](const std::vector<double>& pts, const std::vector<double>& centers,
                         const std::vector<double>& spread, int which,
                         std::vector<double>& out) {
    // out[sample * F + r]
    for (int smp = 0; smp < p.samples; ++smp) {
      const double* z = pts.data() + (static_cast<size_t>(smp) * T + which) * q;
      for (int r = 0; r < F; ++r) {
        if (constant_family) {
          out[static_cast<size_t>(smp) * F + r] = 1.0;
          continue;
        }
        double ss = 0;
        const double off = offset_factor(r);
        for (int l = sub_lo; l < sub_hi; ++l) {
          double c = centers[static_cast<size_t>(which) * q + l] +
                     off * spread[static_cast<size_t>(which) * q + l];
          double dd = z[l] - c;
          ss += dd * dd;
        }
        double dist = std::sqrt(ss);
        double v = std::pow(std::min(dist, p.cone_radius), p.eta);
        out[static_cast<size_t>(smp) * F + r] = v;
      }
    }
  };

  struct Best {
    double value = 0;
    double se = 0;
    bool any = false;
  };
  std::vector<Best> best(static_cast<size_t>(T));

  std::vector<double> valP(static_cast<size_t>(p.samples) * F);
  std::vector<double> valM(static_cast<size_t>(p.samples) * F);
  std::vector<double> valC(static_cast<size_t>(p.samples) * F);
  std::vector<double> gdiff(static_cast<size_t>(p.samples));

  for (int pi = 0; pi < P; ++pi) {
    const std::vector<double>& x = p.x_probes[static_cast<size_t>(pi)];
    const std::uint64_t run_seed = derive_seed(p.seed, "gs", static_cast<std::uint64_t>(pi));

    std::vector<double> centers(static_cast<size_t>(T) * q);
    for (int w = 0; w < T; ++w) {
      auto th = deterministic_flow(p.s, p.t_grid[static_cast<size_t>(w)], x, flow, spec);
      std::copy(th.begin(), th.end(), centers.begin() + static_cast<size_t>(w) * q);
    }

    std::vector<double> center_pts;
    if (p.j == 2) center_pts = capture_points(x, run_seed);

    bool have_spread = false;
    std::vector<double> spread(static_cast<size_t>(T) * q, 1.0);

    for (int l = dir_lo; l < dir_hi; ++l) {
      std::vector<double> xp = x, xm = x;
      xp[static_cast<size_t>(l)] += h;
      xm[static_cast<size_t>(l)] -= h;
      std::vector<double> ptsP = capture_points(xp, run_seed);
      std::vector<double> ptsM = capture_points(xm, run_seed);
      if (!have_spread) {
        for (int w = 0; w < T; ++w)
          for (int c = 0; c < q; ++c) {
            double m = 0;
            for (int smp = 0; smp < p.samples; ++smp)
              m += ptsP[(static_cast<size_t>(smp) * T + w) * q + c];
            m /= p.samples;
            double ss = 0;
            for (int smp = 0; smp < p.samples; ++smp) {
              double dd = ptsP[(static_cast<size_t>(smp) * T + w) * q + c] - m;
              ss += dd * dd;
            }
            double sd = std::sqrt(ss / std::max(1, p.samples - 1));
            spread[static_cast<size_t>(w) * q + c] = sd > 0 ? sd : 1.0;
          }
        have_spread = true;
      }
      for (int w = 0; w < T; ++w) {
        eval_family(ptsP, centers, spread, w, valP);
        eval_family(ptsM, centers, spread, w, valM);
        if (p.j == 2) eval_family(center_pts, centers, spread, w, valC);
        for (int r = 0; r < F; ++r) {
          for (int smp = 0; smp < p.samples; ++smp) {
            double fp = valP[static_cast<size_t>(smp) * F + r];
            double fm = valM[static_cast<size_t>(smp) * F + r];
            gdiff[static_cast<size_t>(smp)] =
                p.j == 1 ? (fp - fm) / (2.0 * h)
                         : (fp - 2.0 * valC[static_cast<size_t>(smp) * F + r] + fm) / (h * h);
          }
          double m = mean_of(gdiff);
          double se = stderr_of(gdiff, m);
          Best& bb = best[static_cast<size_t>(w)];
          if (!bb.any || std::abs(m) > bb.value) {
            bb.value = std::abs(m);
            bb.se = se;
            bb.any = true;
          }
        }
      }
    }
  }

  RateCurve curve;
  curve.name = "max_gradient";
  int dropped_floor = 0;
  bool zero_all = true;
  for (int w = 0; w < T; ++w) {
    double tau = taus[static_cast<size_t>(w)];
    const Best& bst = best[static_cast<size_t>(w)];
    if (bst.value != 0.0) zero_all = false;
    if (bst.value > 0 && bst.se > p.noise_floor * bst.value) {
      curve.dropped_abscissas.push_back(tau);
      ++dropped_floor;
      continue;
    }
    curve.abscissas.push_back(tau);
    curve.ordinates.push_back(bst.value);
    curve.stderrs.push_back(bst.se);
  }
  curve.fit = fit_rate(curve.abscissas, curve.ordinates);

  report.details = ordered_json{{"target_exponent", target},
                                {"fd_step", h},
                                {"noise_floor_dropped", dropped_floor}};
  if (zero_all) {
    report.pass = true;
    report.notes.push_back("all gradient estimates are exactly zero");
  } else {
    report.pass = curve.fit.fitted && curve.fit.slope >= target - p.slope_slack;
    if (!report.pass)
      report.notes.push_back("fitted slope below target minus slack");
  }
  report.curves.push_back(std::move(curve));
  return report;
}

ChaosReport flow_deviation_check(const KernelSpec& spec, const FlowTable& flow,
                                 const std::vector<std::vector<double>>& x_probes,
                                 double s, const std::vector<double>& t_grid,
                                 int samples, std::uint64_t seed, Band band) {
  if (x_probes.empty()) throw ConfigError("flow-deviation: need at least one probe");
  if (t_grid.empty()) throw ConfigError("flow-deviation: empty t grid");
  if (samples < 16) throw ConfigError("flow-deviation: sample budget too small");
  const int q = spec.q();
  for (const auto& x : x_probes)
    if (static_cast<int>(x.size()) != q)
      throw ConfigError("flow-deviation: probe dimension mismatch");

  ChaosReport report;
  report.experiment = "flow-deviation";
  report.config_echo = ordered_json{{"s", s},
                                    {"t_grid", t_grid},
                                    {"x_probes", x_probes},
                                    {"samples", samples},
                                    {"seed", seed},
                                    {"kernel", kernel_echo(spec)},
                                    {"band", band_echo(band)}};

  const int T = static_cast<int>(t_grid.size());
  const int P = static_cast<int>(x_probes.size());
  std::vector<double> mean_dev(static_cast<size_t>(T), 0.0);
  std::vector<double> var_acc(static_cast<size_t>(T), 0.0);
  ordered_json per_probe = ordered_json::array();

  for (int pi = 0; pi < P; ++pi) {
    const auto& x = x_probes[static_cast<size_t>(pi)];
    std::vector<double> theta(static_cast<size_t>(T) * q);
    for (int w = 0; w < T; ++w) {
      auto th = deterministic_flow(s, t_grid[static_cast<size_t>(w)], x, flow, spec);
      std::copy(th.begin(), th.end(), theta.begin() + static_cast<size_t>(w) * q);
    }
    std::vector<double> dev2(static_cast<size_t>(samples) * T, 0.0);
    run_decoupled_capture(s, t_grid, x, flow, spec, samples,
                          derive_seed(seed, "fdev", static_cast<std::uint64_t>(pi)),
                          [&](int sample, int which, const double* z) {
                            double ss = 0;
                            const double* th = theta.data() + static_cast<size_t>(which) * q;
                            for (int c = 0; c < q; ++c)
                              ss += (z[c] - th[c]) * (z[c] - th[c]);
                            dev2[static_cast<size_t>(sample) * T + which] = ss;
                          });
    ordered_json probe_vals = ordered_json::array();
    for (int w = 0; w < T; ++w) {
      double m = 0;
      for (int smp = 0; smp < samples; ++smp)
        m += dev2[static_cast<size_t>(smp) * T + w];
      m /= samples;
      double ss = 0;
      for (int smp = 0; smp < samples; ++smp) {
        double dd = dev2[static_cast<size_t>(smp) * T + w] - m;
        ss += dd * dd;
      }
      mean_dev[static_cast<size_t>(w)] += m / P;
      var_acc[static_cast<size_t>(w)] +=
          ss / std::max(1, samples - 1) / samples / (static_cast<double>(P) * P);
      probe_vals.push_back(m);
    }
    per_probe.push_back(probe_vals);
  }

  RateCurve curve;
  curve.name = "mean_sq_deviation";
  for (int w = 0; w < T; ++w) {
    curve.abscissas.push_back(t_grid[static_cast<size_t>(w)] - s);
    curve.ordinates.push_back(mean_dev[static_cast<size_t>(w)]);
    curve.stderrs.push_back(std::sqrt(var_acc[static_cast<size_t>(w)]));
  }
  curve.fit = fit_rate(curve.abscissas, curve.ordinates);
  report.details = ordered_json{{"per_probe_means", per_probe}};
  report.pass = band_pass(curve.fit, band);
  if (!report.pass) report.notes.push_back("rate fit outside the declared band");
  report.curves.push_back(std::move(curve));
  return report;
}

ChaosReport moment_sanity(const SimConfig& config, const KernelSpec& spec,
                          const InitSpec& init, int flow_M, double budget) {
  SimConfig c = config;
  c.snapshot_stride = 1;
  c.validate();

  ChaosReport report;
  report.experiment = "moment-sanity";
  report.config_echo = ordered_json{{"N", c.N},
                                    {"dt", c.dt},
                                    {"T", c.T},
                                    {"seed", c.seed},
                                    {"flow_M", flow_M},
                                    {"budget", budget},
                                    {"kernel", kernel_echo(spec)},
                                    {"init", init_echo(init)}};

  PathBundle sys = run_interacting(c, spec, init);
  FlowTable flow = solved_flow(c, spec, init, flow_M, 1e-8, 60);

  RateCurve sys_curve, flow_curve;
  sys_curve.name = "system_second_moment";
  flow_curve.name = "flow_second_moment";
  double sup_sys = 0, sup_flow = 0;
  for (size_t i = 0; i < sys.snapshots.size(); ++i) {
    double m2 = second_moment(sys.snapshots[i]);
    sys_curve.abscissas.push_back(sys.grid[i]);
    sys_curve.ordinates.push_back(m2);
    sup_sys = std::max(sup_sys, m2);
  }
  for (size_t g = 0; g < flow.snaps.size(); ++g) {
    double acc = 0;
    for (double v : flow.snaps[g]) acc += v * v;
    double m2 = acc / flow.M;
    flow_curve.abscissas.push_back(flow.grid[g]);
    flow_curve.ordinates.push_back(m2);
    sup_flow = std::max(sup_flow, m2);
  }
  double m0_sys = sys_curve.ordinates.front();
  double m0_flow = flow_curve.ordinates.front();
  double ratio_sys = (1.0 + sup_sys) / (1.0 + m0_sys);
  double ratio_flow = (1.0 + sup_flow) / (1.0 + m0_flow);

  report.details = ordered_json{{"sup_system", sup_sys},
                                {"sup_flow", sup_flow},
                                {"ratio_system", ratio_sys},
                                {"ratio_flow", ratio_flow},
                                {"flow_iterations", flow.iterations}};
  report.pass = ratio_sys <= budget && ratio_flow <= budget;
  if (!report.pass) report.notes.push_back("second-moment growth exceeds the budget");
  report.curves.push_back(std::move(sys_curve));
  report.curves.push_back(std::move(flow_curve));
  return report;
}

}  // namespace mflab
