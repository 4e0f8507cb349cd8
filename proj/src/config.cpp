#include "mflab/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "mflab/chaos.hpp"
#include "mflab/errors.hpp"
#include "mflab/io.hpp"
#include "mflab/noise.hpp"
#include "mflab/ratefit.hpp"
#include "mflab/transport.hpp"
#include "mflab/version.hpp"

namespace mflab {

namespace {

using ojson = nlohmann::ordered_json;

const std::set<std::string>& experiment_catalog() {
  static const std::set<std::string> names = {
      "assumptions",   "simulate",   "meanfield",     "strong-error",
      "poc-rate",      "fluctuation", "gradient-scan", "flow-deviation",
      "transport-selftest", "moment-sanity"};
  return names;
}

[[noreturn]] void bad_key(const std::string& where, const std::string& what) {
  throw ConfigError("config: " + where + ": " + what);
}

void check_keys(const ojson& obj, const std::string& where,
                const std::set<std::string>& allowed,
                const std::set<std::string>& required) {
  if (!obj.is_object()) bad_key(where, "expected an object");
  for (const auto& item : obj.items())
    if (!allowed.count(item.key()))
      throw ConfigError("config: unknown key '" + where + "." + item.key() + "'");
  for (const auto& key : required)
    if (!obj.contains(key))
      throw ConfigError("config: missing key '" + where + "." + key + "'");
}

double jnum(const ojson& o, const std::string& where, const char* key, double dflt) {
  if (!o.contains(key)) return dflt;
  if (!o[key].is_number()) bad_key(where + "." + key, "expected a number");
  return o[key].get<double>();
}

double jnum_req(const ojson& o, const std::string& where, const char* key) {
  if (!o.contains(key)) bad_key(where, std::string("missing key '") + key + "'");
  if (!o[key].is_number()) bad_key(where + "." + key, "expected a number");
  return o[key].get<double>();
}

int jint(const ojson& o, const std::string& where, const char* key, int dflt) {
  if (!o.contains(key)) return dflt;
  if (!o[key].is_number_integer()) bad_key(where + "." + key, "expected an integer");
  return o[key].get<int>();
}

bool jbool(const ojson& o, const std::string& where, const char* key, bool dflt) {
  if (!o.contains(key)) return dflt;
  if (!o[key].is_boolean()) bad_key(where + "." + key, "expected a boolean");
  return o[key].get<bool>();
}

std::string jstr(const ojson& o, const std::string& where, const char* key,
                 const std::string& dflt) {
  if (!o.contains(key)) return dflt;
  if (!o[key].is_string()) bad_key(where + "." + key, "expected a string");
  return o[key].get<std::string>();
}

std::vector<int> jintvec(const ojson& o, const std::string& where, const char* key) {
  if (!o.contains(key)) bad_key(where, std::string("missing key '") + key + "'");
  if (!o[key].is_array()) bad_key(where + "." + key, "expected an array");
  std::vector<int> out;
  for (const auto& v : o[key]) {
    if (!v.is_number_integer()) bad_key(where + "." + key, "expected integers");
    out.push_back(v.get<int>());
  }
  if (out.empty()) bad_key(where + "." + key, "array must be nonempty");
  return out;
}

std::vector<double> jdvec(const ojson& o, const std::string& where, const char* key) {
  if (!o.contains(key)) bad_key(where, std::string("missing key '") + key + "'");
  if (!o[key].is_array()) bad_key(where + "." + key, "expected an array");
  std::vector<double> out;
  for (const auto& v : o[key]) {
    if (!v.is_number()) bad_key(where + "." + key, "expected numbers");
    out.push_back(v.get<double>());
  }
  if (out.empty()) bad_key(where + "." + key, "array must be nonempty");
  return out;
}

std::vector<std::vector<double>> jprobes(const ojson& o, const std::string& where,
                                         const char* key) {
  if (!o.contains(key)) bad_key(where, std::string("missing key '") + key + "'");
  if (!o[key].is_array()) bad_key(where + "." + key, "expected an array of arrays");
  std::vector<std::vector<double>> out;
  for (const auto& row : o[key]) {
    if (!row.is_array()) bad_key(where + "." + key, "expected an array of arrays");
    std::vector<double> p;
    for (const auto& v : row) {
      if (!v.is_number()) bad_key(where + "." + key, "expected numbers");
      p.push_back(v.get<double>());
    }
    out.push_back(std::move(p));
  }
  if (out.empty()) bad_key(where + "." + key, "array must be nonempty");
  return out;
}

KernelSpec parse_model(const ojson& root) {
  if (!root.contains("model"))
    return make_builtin("constant-diffusion-ou", {{"d", 1.0}, {"n", 1.0}});
  const ojson& m = root["model"];
  check_keys(m, "model", {"name", "params"}, {"name"});
  if (!m["name"].is_string()) bad_key("model.name", "expected a string");
  std::map<std::string, double> params;
  if (m.contains("params")) {
    if (!m["params"].is_object()) bad_key("model.params", "expected an object");
    for (const auto& item : m["params"].items()) {
      if (!item.value().is_number())
        bad_key("model.params." + item.key(), "expected a number");
      params[item.key()] = item.value().get<double>();
    }
  }
  return make_builtin(m["name"].get<std::string>(), params);
}

InitSpec parse_init(const ojson& root) {
  InitSpec init;
  init.law = InitSpec::Law::Normal;
  init.center = {0.0};
  init.scale = 1.0;
  if (!root.contains("init")) return init;
  const ojson& o = root["init"];
  check_keys(o, "init", {"law", "center", "scale"}, {});
  std::string law = jstr(o, "init", "law", "normal");
  if (law == "point")
    init.law = InitSpec::Law::Point;
  else if (law == "normal")
    init.law = InitSpec::Law::Normal;
  else if (law == "uniform-box")
    init.law = InitSpec::Law::UniformBox;
  else
    bad_key("init.law", "expected point, normal, or uniform-box");
  if (o.contains("center")) {
    if (o["center"].is_number())
      init.center = {o["center"].get<double>()};
    else if (o["center"].is_array()) {
      init.center.clear();
      for (const auto& v : o["center"]) {
        if (!v.is_number()) bad_key("init.center", "expected numbers");
        init.center.push_back(v.get<double>());
      }
      if (init.center.empty()) bad_key("init.center", "array must be nonempty");
    } else {
      bad_key("init.center", "expected a number or an array");
    }
  }
  init.scale = jnum(o, "init", "scale", 1.0);
  if (init.scale < 0) bad_key("init.scale", "must be >= 0");
  return init;
}

Band parse_band(const ojson& p, const std::string& where, Band dflt) {
  Band band = dflt;
  band.slope_lo = jnum(p, where, "slope_lo", dflt.slope_lo);
  band.slope_hi = jnum(p, where, "slope_hi", dflt.slope_hi);
  band.r2_min = jnum(p, where, "r2_min", dflt.r2_min);
  return band;
}

std::string sanitize(const std::string& name) {
  std::string out = name;
  for (char& ch : out)
    if (!std::isalnum(static_cast<unsigned char>(ch))) ch = '_';
  return out;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << text;
  if (!out) throw IoError(path + ": write failed");
}

void write_curve_csv(const std::string& dir, const RateCurve& curve) {
  std::string body = "abscissa,ordinate,stderr\n";
  for (size_t i = 0; i < curve.abscissas.size(); ++i) {
    body += fmt17(curve.abscissas[i]);
    body += ',';
    body += fmt17(curve.ordinates[i]);
    body += ',';
    body += fmt17(i < curve.stderrs.size() ? curve.stderrs[i] : 0.0);
    body += '\n';
  }
  write_text(dir + "/" + sanitize(curve.name) + ".csv", body);
}

FlowTable config_flow(const SimConfig& sim, const KernelSpec& model,
                      const InitSpec& init, int M, double tol, int max_iter) {
  FlowTable flow = solve_meanfield_flow(sim, model, init, M, tol, max_iter);
  if (!flow.converged)
    throw SimError("mean-field fixed point did not converge within " +
                   std::to_string(max_iter) + " iterations");
  return flow;
}

ojson assumption_json(const AssumptionReport& r, const KernelSpec& spec) {
  return ojson{{"experiment", "assumptions"},
               {"kernel", ojson{{"name", spec.name},
                                {"d", spec.d},
                                {"n", spec.n},
                                {"params", spec.params}}},
               {"probe_count", r.probe_count},
               {"box_radius", r.box_radius},
               {"fd_step", r.fd_step},
               {"seed", r.seed},
               {"measured",
                ojson{{"max_grad_b", r.max_grad_b},
                      {"max_hess_b", r.max_hess_b},
                      {"lip_b_y", r.lip_b_y},
                      {"b_origin", r.b_origin},
                      {"max_grad_sigma", r.max_grad_sigma},
                      {"max_hess_sigma", r.max_hess_sigma},
                      {"lip_sigma_y", r.lip_sigma_y},
                      {"ellipticity_min", r.ellipticity_min},
                      {"ellipticity_max", r.ellipticity_max}}},
               {"declared",
                ojson{{"K_b", r.declared_K_b},
                      {"K_sigma", r.declared_K_sigma},
                      {"delta", r.declared_delta}}},
               {"clauses",
                ojson{{"grad_b", r.grad_b_ok},
                      {"hess_b", r.hess_b_ok},
                      {"lip_b_y", r.lip_b_y_ok},
                      {"b_origin", r.b_origin_ok},
                      {"grad_sigma", r.grad_sigma_ok},
                      {"hess_sigma", r.hess_sigma_ok},
                      {"lip_sigma_y", r.lip_sigma_y_ok},
                      {"ellipticity", r.ellipticity_ok}}},
               {"pass", r.pass}};
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open");
  ojson root;
  try {
    root = ojson::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  check_keys(root, "config",
             {"experiment", "seed", "output_dir", "model", "sim", "init", "params"},
             {"experiment", "seed"});
  ExperimentConfig cfg;
  if (!root["experiment"].is_string()) bad_key("config.experiment", "expected a string");
  cfg.experiment = root["experiment"].get<std::string>();
  if (!experiment_catalog().count(cfg.experiment)) {
    std::string names;
    for (const auto& n : experiment_catalog()) {
      if (!names.empty()) names += ", ";
      names += n;
    }
    throw ConfigError("config: unknown experiment '" + cfg.experiment +
                      "' (valid: " + names + ")");
  }
  if (!root["seed"].is_number_integer()) bad_key("config.seed", "expected an integer");
  cfg.seed = root["seed"].get<std::uint64_t>();
  cfg.output_dir = jstr(root, "config", "output_dir", "out");

  cfg.model = parse_model(root);
  cfg.init = parse_init(root);

  cfg.sim = SimConfig{};
  cfg.sim.N = 64;
  cfg.sim.dt = 1e-3;
  cfg.sim.T = 1.0;
  cfg.sim.snapshot_stride = 1;
  if (root.contains("sim")) {
    const ojson& s = root["sim"];
    check_keys(s, "sim", {"N", "dt", "T", "snapshot_stride"}, {});
    cfg.sim.N = jint(s, "sim", "N", 64);
    cfg.sim.dt = jnum(s, "sim", "dt", 1e-3);
    cfg.sim.T = jnum(s, "sim", "T", 1.0);
    cfg.sim.snapshot_stride = jint(s, "sim", "snapshot_stride", 1);
  }
  cfg.sim.d = cfg.model.d;
  cfg.sim.n = cfg.model.n;
  cfg.sim.kind = cfg.model.kind;
  cfg.sim.seed = cfg.seed;

  cfg.params = root.contains("params") ? root["params"] : ojson::object();
  if (!cfg.params.is_object()) bad_key("config.params", "expected an object");
  cfg.raw = root;
  return cfg;
}

int run_from_config(const std::string& path) {
  ExperimentConfig cfg = load_config(path);
  std::filesystem::create_directories(cfg.output_dir);
  const std::string dir = cfg.output_dir;
  const ojson& p = cfg.params;

  ojson report_json;
  std::vector<RateCurve> curves;
  bool pass = true;

  auto adopt = [&](ChaosReport&& report) {
    report_json = to_json(report);
    curves = std::move(report.curves);
    pass = report.pass;
  };

  if (cfg.experiment == "assumptions") {
    check_keys(p, "params", {"probe_count", "box_radius", "fd_step"}, {});
    AssumptionReport r =
        check_assumptions(cfg.model, jint(p, "params", "probe_count", 1000),
                          jnum(p, "params", "box_radius", 2.0),
                          jnum(p, "params", "fd_step", 1e-5), cfg.seed);
    report_json = assumption_json(r, cfg.model);
    pass = r.pass;
  } else if (cfg.experiment == "simulate") {
    check_keys(p, "params", {}, {});
    PathBundle out = run_interacting(cfg.sim, cfg.model, cfg.init);
    write_path_bundle(dir + "/path.dat", out);
    report_json = ojson{{"experiment", "simulate"},
                        {"N", cfg.sim.N},
                        {"dt", cfg.sim.dt},
                        {"T", cfg.sim.T},
                        {"seed", cfg.seed},
                        {"snapshots", out.snapshots.size()},
                        {"final_second_moment", second_moment(out.snapshots.back())},
                        {"pass", true}};
  } else if (cfg.experiment == "meanfield") {
    check_keys(p, "params", {"M", "picard_tol", "max_iter"}, {});
    FlowTable flow = solve_meanfield_flow(
        cfg.sim, cfg.model, cfg.init, jint(p, "params", "M", 256),
        jnum(p, "params", "picard_tol", 1e-8), jint(p, "params", "max_iter", 60));
    write_flow_table(dir + "/flow.dat", flow);
    RateCurve deltas;
    deltas.name = "picard_delta";
    for (size_t i = 0; i < flow.delta_history.size(); ++i) {
      deltas.abscissas.push_back(static_cast<double>(i + 1));
      deltas.ordinates.push_back(flow.delta_history[i]);
    }
    curves.push_back(deltas);
    pass = flow.converged;
    report_json = ojson{{"experiment", "meanfield"},
                        {"M", flow.M},
                        {"dt", cfg.sim.dt},
                        {"T", cfg.sim.T},
                        {"seed", cfg.seed},
                        {"iterations", flow.iterations},
                        {"final_delta", flow.final_delta},
                        {"delta_history", flow.delta_history},
                        {"converged", flow.converged},
                        {"pass", pass}};
  } else if (cfg.experiment == "strong-error") {
    check_keys(p, "params",
               {"N_grid", "flow_M", "reps", "slope_lo", "slope_hi", "r2_min",
                "picard_tol", "picard_max_iter"},
               {"N_grid"});
    adopt(strong_error_experiment(
        jintvec(p, "params", "N_grid"), cfg.sim, cfg.model, cfg.init,
        jint(p, "params", "flow_M", 512), jint(p, "params", "reps", 100),
        parse_band(p, "params", {-0.65, -0.35, 0.9}),
        jnum(p, "params", "picard_tol", 1e-8), jint(p, "params", "picard_max_iter", 60)));
  } else if (cfg.experiment == "poc-rate") {
    check_keys(p, "params",
               {"k", "N_grid", "eta", "t", "init_mode", "outer_samples", "batches",
                "ref_clouds", "flow_M", "slope_max", "jensen_check", "picard_tol",
                "picard_max_iter"},
               {"k", "N_grid", "eta", "t"});
    PocParams pp;
    pp.k = jint(p, "params", "k", 1);
    pp.N_grid = jintvec(p, "params", "N_grid");
    pp.eta = jnum_req(p, "params", "eta");
    pp.t = jnum_req(p, "params", "t");
    pp.init_mode = jstr(p, "params", "init_mode", "product");
    pp.outer_samples = jint(p, "params", "outer_samples", 256);
    pp.batches = jint(p, "params", "batches", 8);
    pp.ref_clouds = jint(p, "params", "ref_clouds", 4);
    pp.flow_M = jint(p, "params", "flow_M", 512);
    pp.slope_max = jnum(p, "params", "slope_max", -0.3);
    pp.jensen_check = jbool(p, "params", "jensen_check", true);
    pp.picard_tol = jnum(p, "params", "picard_tol", 1e-8);
    pp.picard_max_iter = jint(p, "params", "picard_max_iter", 60);
    pp.seed = cfg.seed;
    adopt(poc_wasserstein_experiment(cfg.sim, cfg.model, cfg.init, pp));
  } else if (cfg.experiment == "fluctuation") {
    check_keys(p, "params",
               {"h", "dim", "N_grid", "reps", "ref_samples", "slope_lo", "slope_hi",
                "r2_min"},
               {"h", "N_grid"});
    std::string h = jstr(p, "params", "h", "identity");
    adopt(fluctuation_check(h, cfg.init, jint(p, "params", "dim", 1),
                            jintvec(p, "params", "N_grid"),
                            jint(p, "params", "reps", 200), cfg.seed,
                            h == "drift" ? &cfg.model : nullptr,
                            parse_band(p, "params", {-1.15, -0.85, 0.95}),
                            jint(p, "params", "ref_samples", 1000000)));
  } else if (cfg.experiment == "gradient-scan") {
    check_keys(p, "params",
               {"eta", "j", "direction_class", "s", "t_grid", "x_probes", "fd_step",
                "samples", "family", "cone_radius", "slope_slack", "noise_floor",
                "flow_M", "picard_tol", "picard_max_iter"},
               {"t_grid", "x_probes"});
    FlowTable flow = config_flow(cfg.sim, cfg.model, cfg.init,
                                 jint(p, "params", "flow_M", 512),
                                 jnum(p, "params", "picard_tol", 1e-8),
                                 jint(p, "params", "picard_max_iter", 60));
    GradientScanParams gp;
    gp.eta = jnum(p, "params", "eta", 0.5);
    gp.j = jint(p, "params", "j", 1);
    gp.direction_class = jstr(p, "params", "direction_class", "full");
    gp.s = jnum(p, "params", "s", 0.0);
    gp.t_grid = jdvec(p, "params", "t_grid");
    gp.x_probes = jprobes(p, "params", "x_probes");
    gp.fd_step = jnum(p, "params", "fd_step", 0.0);
    gp.samples = jint(p, "params", "samples", 2000);
    gp.family = jint(p, "params", "family", 3);
    gp.cone_radius = jnum(p, "params", "cone_radius", 2.0);
    gp.slope_slack = jnum(p, "params", "slope_slack", 0.15);
    gp.noise_floor = jnum(p, "params", "noise_floor", 0.2);
    gp.seed = cfg.seed;
    adopt(gradient_scaling_scan(cfg.model, flow, gp));
  } else if (cfg.experiment == "flow-deviation") {
    check_keys(p, "params",
               {"s", "t_grid", "x_probes", "samples", "flow_M", "slope_lo", "slope_hi",
                "r2_min", "picard_tol", "picard_max_iter"},
               {"t_grid", "x_probes"});
    FlowTable flow = config_flow(cfg.sim, cfg.model, cfg.init,
                                 jint(p, "params", "flow_M", 256),
                                 jnum(p, "params", "picard_tol", 1e-8),
                                 jint(p, "params", "picard_max_iter", 60));
    adopt(flow_deviation_check(cfg.model, flow, jprobes(p, "params", "x_probes"),
                               jnum(p, "params", "s", 0.0), jdvec(p, "params", "t_grid"),
                               jint(p, "params", "samples", 4000), cfg.seed,
                               parse_band(p, "params", {0.85, 1.15, 0.9})));
  } else if (cfg.experiment == "transport-selftest") {
    check_keys(p, "params", {"instances", "max_support"}, {});
    report_json = transport_selftest(cfg.seed, jint(p, "params", "instances", 200),
                                     jint(p, "params", "max_support", 7));
    pass = report_json["pass"].get<bool>();
  } else if (cfg.experiment == "moment-sanity") {
    check_keys(p, "params", {"flow_M", "budget"}, {});
    adopt(moment_sanity(cfg.sim, cfg.model, cfg.init,
                        jint(p, "params", "flow_M", 256),
                        jnum(p, "params", "budget", 1e3)));
  }

  write_text(dir + "/report.json", report_json.dump(2) + "\n");
  for (const auto& curve : curves) write_curve_csv(dir, curve);
  ojson manifest{{"format", "mflab run manifest v1"},
                 {"version", kVersion},
                 {"seed", cfg.seed},
                 {"config", cfg.raw}};
  write_text(dir + "/manifest.json", manifest.dump(2) + "\n");
  return pass ? 0 : 2;
}

ojson transport_selftest(std::uint64_t seed, int instances, int max_support) {
  if (instances < 1) throw ConfigError("selftest: instances must be >= 1");
  if (max_support < 1 || max_support > 8)
    throw ConfigError("selftest: max_support must lie in [1, 8]");
  const double etas[3] = {0.3, 0.5, 1.0};

  int oracle_checked = 0;
  double oracle_max_dev = 0;
  double duality_max_excess = -1e300;  // dual - exact, must stay <= ~0
  double dirac_max_gap = 0;
  double metric_max_violation = 0;
  double jensen_max_excess = -1e300;
  double sinkhorn_min_margin = 1e300;  // sinkhorn - exact, should be >= ~0
  int sinkhorn_checked = 0;
  double weighted_max_dev = 0;

  auto draw = [&](const char* tag, int inst, int count, int dim) {
    EmpiricalMeasure mu;
    mu.dim = dim;
    mu.points.resize(static_cast<size_t>(count) * dim);
    standard_normal(derive_seed(seed, tag, static_cast<std::uint64_t>(inst)), 0,
                    count * dim, mu.points.data());
    return mu;
  };

  for (int i = 0; i < instances; ++i) {
    const int n = 1 + i % max_support;
    const int m = 1 + i % 3;
    const int db = 1 + (i / 3) % 2;
    const int dim = m * db;
    const double eta = etas[i % 3];
    EmpiricalMeasure a = draw("ts-a", i, n, dim);
    EmpiricalMeasure b = draw("ts-b", i, n, dim);
    EmpiricalMeasure c = draw("ts-c", i, n, dim);

    double ex = exact_wasserstein_eta(a, b, eta, m).value;
    double br = brute_force_wasserstein(a, b, eta, m);
    oracle_max_dev = std::max(oracle_max_dev, std::abs(ex - br));
    ++oracle_checked;

    DualResult dl = dual_lower_bound(a, b, eta, m, 24,
                                     derive_seed(seed, "ts-d", static_cast<std::uint64_t>(i)));
    duality_max_excess = std::max(duality_max_excess, dl.value - ex);

    double self = exact_wasserstein_eta(a, a, eta, m).value;
    double sym = std::abs(exact_wasserstein_eta(b, a, eta, m).value - ex);
    double eac = exact_wasserstein_eta(a, c, eta, m).value;
    double ecb = exact_wasserstein_eta(c, b, eta, m).value;
    metric_max_violation = std::max({metric_max_violation, self, sym, ex - (eac + ecb)});

    if (eta < 1.0) {
      double e1 = exact_wasserstein_eta(a, b, 1.0, m).value;
      jensen_max_excess = std::max(
          jensen_max_excess, ex / m - std::pow(e1 / m, eta));
    }

    if (i % 10 == 0) {
      auto sk = sinkhorn_wasserstein_eta(a, b, eta, m, 0.0, 20000, 1e-12);
      if (sk.converged) {
        sinkhorn_min_margin = std::min(sinkhorn_min_margin, sk.value - ex);
        ++sinkhorn_checked;
      }
    }

    EmpiricalMeasure aw = a, bw = b;
    aw.weights.assign(static_cast<size_t>(n), 1.0 / n);
    bw.weights.assign(static_cast<size_t>(n), 1.0 / n);
    double wv = exact_wasserstein_eta(aw, bw, eta, m).value;
    weighted_max_dev = std::max(weighted_max_dev, std::abs(wv - ex));
  }

  for (int i = 0; i < std::min(instances, 64); ++i) {
    const double eta = etas[i % 3];
    EmpiricalMeasure a = draw("ts-dirac-a", i, 1, 1);
    EmpiricalMeasure b = draw("ts-dirac-b", i, 1, 1);
    double ex = exact_wasserstein_eta(a, b, eta, 1).value;
    DualResult dl = dual_lower_bound(a, b, eta, 1, 8,
                                     derive_seed(seed, "ts-dirac", static_cast<std::uint64_t>(i)));
    dirac_max_gap = std::max(dirac_max_gap, std::abs(ex - dl.value));
  }

  const bool oracle_ok = oracle_max_dev <= 1e-10;
  const bool duality_ok = duality_max_excess <= 1e-10;
  const bool dirac_ok = dirac_max_gap < 1e-8;
  const bool metric_ok = metric_max_violation <= 1e-10;
  const bool jensen_ok = jensen_max_excess <= 1e-10;
  const bool sinkhorn_ok = sinkhorn_checked > 0 && sinkhorn_min_margin >= -1e-8;
  const bool weighted_ok = weighted_max_dev <= 1e-9;

  return ojson{{"experiment", "transport-selftest"},
               {"seed", seed},
               {"instances", instances},
               {"max_support", max_support},
               {"oracle_checked", oracle_checked},
               {"oracle_max_dev", oracle_max_dev},
               {"oracle_ok", oracle_ok},
               {"duality_max_excess", duality_max_excess},
               {"duality_ok", duality_ok},
               {"dirac_max_gap", dirac_max_gap},
               {"dirac_ok", dirac_ok},
               {"metric_max_violation", metric_max_violation},
               {"metric_ok", metric_ok},
               {"jensen_max_excess", jensen_max_excess},
               {"jensen_ok", jensen_ok},
               {"sinkhorn_checked", sinkhorn_checked},
               {"sinkhorn_min_margin", sinkhorn_checked ? sinkhorn_min_margin : 0.0},
               {"sinkhorn_ok", sinkhorn_ok},
               {"weighted_max_dev", weighted_max_dev},
               {"weighted_ok", weighted_ok},
               {"pass", oracle_ok && duality_ok && dirac_ok && metric_ok && jensen_ok &&
                            sinkhorn_ok && weighted_ok}};
}

}  // namespace mflab
