#include "mflab/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "mflab/detail/kernels_impl.hpp"
#include "mflab/errors.hpp"
#include "mflab/noise.hpp"
#include "mflab/parallel.hpp"
#include "mflab/transport.hpp"

namespace mflab {

namespace {

// Disjoint stream range for limit copies running with independent noise.
constexpr std::uint64_t kLimitStreamBase = 1ull << 40;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void check_finite(const EnsembleState& st, double t) {
  const int q = st.q;
  const int N = st.size();
  for (int i = 0; i < N; ++i) {
    const double* xi = st.p(i);
    for (int j = 0; j < q; ++j)
      if (!std::isfinite(xi[j]))
        throw SimError("non-finite state at t=" + fmt(t) + ", particle " +
                       std::to_string(i));
  }
}

// One Euler-Maruyama step of N rows whose coefficients average the kernels
// over an external support of M points, summed in fixed order m = 0..M-1.
template <class K>
void step_rows(const K& k, double t, double dt, const double* cur, int N,
               const double* support, int M, const double* dw, double* out,
               double* bacc, double* sacc, double* tb, double* ts) {
  const int d = k.d, n = k.n, q = k.q();
  const int dn = d * n;
  const double invM = 1.0 / static_cast<double>(M);
  const bool kinetic = (q != d);
  for (int i = 0; i < N; ++i) {
    const double* xi = cur + static_cast<size_t>(i) * q;
    if constexpr (K::yfree) {
      // The kernels ignore the support, so the empirical average equals one
      // evaluation; skipping the sum keeps coupled runs bitwise identical
      // for any pair of support sizes.
      k.drift(t, xi, xi, bacc);
      k.diffusion(t, xi, xi, sacc);
    } else {
      for (int j = 0; j < d; ++j) bacc[j] = 0.0;
      for (int j = 0; j < dn; ++j) sacc[j] = 0.0;
      for (int m = 0; m < M; ++m) {
        const double* ym = support + static_cast<size_t>(m) * q;
        k.drift(t, xi, ym, tb);
        for (int j = 0; j < d; ++j) bacc[j] += tb[j];
        k.diffusion(t, xi, ym, ts);
        for (int j = 0; j < dn; ++j) sacc[j] += ts[j];
      }
      for (int j = 0; j < d; ++j) bacc[j] *= invM;
      for (int j = 0; j < dn; ++j) sacc[j] *= invM;
    }
    const double* dwi = dw + static_cast<size_t>(i) * n;
    double* oi = out + static_cast<size_t>(i) * q;
    if (kinetic) {
      for (int j = 0; j < d; ++j) oi[j] = xi[j] + dt * xi[d + j];
      for (int j = 0; j < d; ++j) {
        double noise = 0.0;
        for (int l = 0; l < n; ++l) noise += sacc[j * n + l] * dwi[l];
        oi[d + j] = xi[d + j] + dt * bacc[j] + noise;
      }
    } else {
      for (int j = 0; j < d; ++j) {
        double noise = 0.0;
        for (int l = 0; l < n; ++l) noise += sacc[j * n + l] * dwi[l];
        oi[j] = xi[j] + dt * bacc[j] + noise;
      }
    }
  }
}

struct StepScratch {
  std::vector<double> bacc, sacc, tb, ts, out;
  void size_for(const KernelSpec& spec, size_t state_len) {
    bacc.resize(spec.d);
    sacc.resize(static_cast<size_t>(spec.d) * spec.n);
    tb.resize(spec.d);
    ts.resize(static_cast<size_t>(spec.d) * spec.n);
    out.resize(state_len);
  }
};

}  // namespace

std::int64_t SimConfig::steps() const {
  return static_cast<std::int64_t>(std::llround(T / dt));
}

void SimConfig::validate() const {
  if (d < 1 || n < 1) throw SimError("SimConfig: dimensions must be positive");
  if (!(dt > 0)) throw SimError("SimConfig: dt must be > 0");
  if (!(T >= dt)) throw SimError("SimConfig: T must be >= dt");
  if (snapshot_stride < 1) throw SimError("SimConfig: snapshot_stride must be >= 1");
  std::int64_t S = steps();
  if (S < 1 || std::abs(static_cast<double>(S) * dt - T) > 1e-9 * std::max(1.0, T))
    throw SimError("SimConfig: T must be an integer multiple of dt");
}

int FlowTable::index_of(double t) const {
  if (grid.size() < 2) throw SimError("FlowTable: empty grid");
  double dt = grid[1] - grid[0];
  auto idx = static_cast<std::int64_t>(std::llround((t - grid[0]) / dt));
  if (idx < 0 || idx >= static_cast<std::int64_t>(grid.size()) ||
      std::abs(grid[static_cast<size_t>(idx)] - t) > 1e-9 * (1.0 + std::abs(t)))
    throw SimError("time t=" + fmt(t) + " is off the flow grid (no interpolation)");
  return static_cast<int>(idx);
}

void InitSpec::sample(std::uint64_t seed, std::uint64_t stream, int q,
                      double* out) const {
  if (center.size() != 1 && static_cast<int>(center.size()) != q)
    throw SimError("InitSpec: center must have 1 or q entries");
  auto ctr = [&](int j) { return center.size() == 1 ? center[0] : center[j]; };
  switch (law) {
    case Law::Point:
      for (int j = 0; j < q; ++j) out[j] = ctr(j);
      break;
    case Law::Normal: {
      std::vector<double> z(q);
      standard_normal(seed, stream, q, z.data());
      for (int j = 0; j < q; ++j) out[j] = ctr(j) + scale * z[j];
      break;
    }
    case Law::UniformBox:
      for (int j = 0; j < q; ++j) {
        double u = uniform01(seed, stream, static_cast<std::uint32_t>(j), 0xB0000000u);
        out[j] = ctr(j) + scale * (2.0 * u - 1.0);
      }
      break;
  }
}

EnsembleState sample_ensemble(const InitSpec& init, int N, int q, std::uint64_t seed) {
  EnsembleState st;
  st.t = 0;
  st.q = q;
  st.x.resize(static_cast<size_t>(N) * q);
  for (int i = 0; i < N; ++i)
    init.sample(seed, static_cast<std::uint64_t>(i), q, st.p(i));
  return st;
}

void step_interacting(const KernelSpec& spec, EnsembleState& state, double dt,
                      const double* dw) {
  const int N = state.size();
  StepScratch sc;
  sc.size_for(spec, state.x.size());
  detail::with_model(spec, [&](const auto& k) {
    step_rows(k, state.t, dt, state.x.data(), N, state.x.data(), N, dw,
              sc.out.data(), sc.bacc.data(), sc.sacc.data(), sc.tb.data(),
              sc.ts.data());
  });
  state.x.swap(sc.out);
  state.t += dt;
  check_finite(state, state.t);
}

void step_against(const KernelSpec& spec, EnsembleState& state, double dt,
                  const double* dw, const double* support, int M) {
  const int N = state.size();
  StepScratch sc;
  sc.size_for(spec, state.x.size());
  detail::with_model(spec, [&](const auto& k) {
    step_rows(k, state.t, dt, state.x.data(), N, support, M, dw, sc.out.data(),
              sc.bacc.data(), sc.sacc.data(), sc.tb.data(), sc.ts.data());
  });
  state.x.swap(sc.out);
  state.t += dt;
  check_finite(state, state.t);
}

namespace {

// Shared driver for the interacting system and the frozen-flow limit copies.
// support_of(step) returns the M support points used for the coefficients of
// that step; for the interacting system it is the current state itself.
template <class SupportOf>
PathBundle run_driver(const SimConfig& config, const KernelSpec& spec,
                      const EnsembleState& init, std::uint64_t stream_base,
                      const SupportOf& support_of, int support_M) {
  config.validate();
  const int N = config.N;
  const int q = config.q();
  if (init.q != q || init.size() != N)
    throw SimError("run: initial ensemble does not match the configuration");
  const std::int64_t S = config.steps();

  EnsembleState cur = init;
  cur.t = 0;
  PathBundle bundle;
  bundle.grid.push_back(0.0);
  bundle.snapshots.push_back(cur);

  std::vector<double> dw(static_cast<size_t>(N) * config.n);
  StepScratch sc;
  sc.size_for(spec, cur.x.size());

  detail::with_model(spec, [&](const auto& k) {
    for (std::int64_t step = 0; step < S; ++step) {
      double t = config.dt * static_cast<double>(step);
      for (int i = 0; i < N; ++i)
        brownian_increment(config.seed, stream_base + static_cast<std::uint64_t>(i),
                           step, config.dt, config.n,
                           dw.data() + static_cast<size_t>(i) * config.n);
      const double* sup = support_of(step, cur.x.data());
      step_rows(k, t, config.dt, cur.x.data(), N, sup, support_M, dw.data(),
                sc.out.data(), sc.bacc.data(), sc.sacc.data(), sc.tb.data(),
                sc.ts.data());
      cur.x.swap(sc.out);
      cur.t = config.dt * static_cast<double>(step + 1);
      check_finite(cur, cur.t);
      if ((step + 1) % config.snapshot_stride == 0 || step + 1 == S) {
        bundle.grid.push_back(cur.t);
        bundle.snapshots.push_back(cur);
      }
    }
  });
  return bundle;
}

void check_flow_compatible(const SimConfig& config, const FlowTable& flow) {
  if (flow.q != config.q())
    throw SimError("flow table dimension does not match the configuration");
  if (static_cast<std::int64_t>(flow.grid.size()) != config.steps() + 1 ||
      std::abs(flow.grid[1] - flow.grid[0] - config.dt) > 1e-12)
    throw SimError("flow table grid does not match the configuration grid");
}

}  // namespace

PathBundle run_interacting(const SimConfig& config, const KernelSpec& spec,
                           const EnsembleState& init) {
  return run_driver(
      config, spec, init, 0,
      [](std::int64_t, const double* cur) { return cur; }, config.N);
}

PathBundle run_interacting(const SimConfig& config, const KernelSpec& spec,
                           const InitSpec& init) {
  EnsembleState st = sample_ensemble(init, config.N, config.q(),
                                     derive_seed(config.seed, "init"));
  return run_interacting(config, spec, st);
}

PathBundle run_limit_copies(const SimConfig& config, const KernelSpec& spec,
                            const FlowTable& flow, const EnsembleState& init,
                            bool share_noise_with_particles) {
  check_flow_compatible(config, flow);
  return run_driver(
      config, spec, init, share_noise_with_particles ? 0 : kLimitStreamBase,
      [&flow](std::int64_t step, const double*) {
        return flow.snaps[static_cast<size_t>(step)].data();
      },
      flow.M);
}

PathBundle run_limit_copies(const SimConfig& config, const KernelSpec& spec,
                            const FlowTable& flow, const InitSpec& init,
                            bool share_noise_with_particles) {
  EnsembleState st = sample_ensemble(init, config.N, config.q(),
                                     derive_seed(config.seed, "init"));
  return run_limit_copies(config, spec, flow, st, share_noise_with_particles);
}

CoupledResult run_coupled_pair(const SimConfig& config, const KernelSpec& spec,
                               const FlowTable& flow, const EnsembleState& init) {
  config.validate();
  check_flow_compatible(config, flow);
  const int N = config.N;
  const int q = config.q();
  if (init.q != q || init.size() != N)
    throw SimError("run_coupled_pair: initial ensemble does not match");
  const std::int64_t S = config.steps();

  EnsembleState sys = init, lim = init;
  sys.t = lim.t = 0;
  std::vector<double> supdev(static_cast<size_t>(N), 0.0);

  CoupledResult res;
  res.interacting.grid.push_back(0.0);
  res.interacting.snapshots.push_back(sys);
  res.limit.grid.push_back(0.0);
  res.limit.snapshots.push_back(lim);

  std::vector<double> dw(static_cast<size_t>(N) * config.n);
  StepScratch sa, sb;
  sa.size_for(spec, sys.x.size());
  sb.size_for(spec, lim.x.size());

  detail::with_model(spec, [&](const auto& k) {
    for (std::int64_t step = 0; step < S; ++step) {
      double t = config.dt * static_cast<double>(step);
      for (int i = 0; i < N; ++i)
        brownian_increment(config.seed, static_cast<std::uint64_t>(i), step,
                           config.dt, config.n,
                           dw.data() + static_cast<size_t>(i) * config.n);
      step_rows(k, t, config.dt, sys.x.data(), N, sys.x.data(), N, dw.data(),
                sa.out.data(), sa.bacc.data(), sa.sacc.data(), sa.tb.data(),
                sa.ts.data());
      step_rows(k, t, config.dt, lim.x.data(), N,
                flow.snaps[static_cast<size_t>(step)].data(), flow.M, dw.data(),
                sb.out.data(), sb.bacc.data(), sb.sacc.data(), sb.tb.data(),
                sb.ts.data());
      sys.x.swap(sa.out);
      lim.x.swap(sb.out);
      sys.t = lim.t = config.dt * static_cast<double>(step + 1);
      check_finite(sys, sys.t);
      check_finite(lim, lim.t);
      for (int i = 0; i < N; ++i) {
        const double* xa = sys.p(i);
        const double* xb = lim.p(i);
        double acc = 0;
        for (int j = 0; j < q; ++j) acc += (xa[j] - xb[j]) * (xa[j] - xb[j]);
        supdev[static_cast<size_t>(i)] =
            std::max(supdev[static_cast<size_t>(i)], std::sqrt(acc));
      }
      if ((step + 1) % config.snapshot_stride == 0 || step + 1 == S) {
        res.interacting.grid.push_back(sys.t);
        res.interacting.snapshots.push_back(sys);
        res.limit.grid.push_back(lim.t);
        res.limit.snapshots.push_back(lim);
      }
    }
  });
  res.limit.running_sup_dev = std::move(supdev);
  return res;
}

FlowTable solve_meanfield_flow(const SimConfig& config, const KernelSpec& spec,
                               const InitSpec& init, int M, double picard_tol,
                               int max_iter) {
  config.validate();
  if (M < 2) throw ConfigError("solve_meanfield_flow: M must be >= 2");
  if (max_iter < 1) throw ConfigError("solve_meanfield_flow: max_iter must be >= 1");
  const int q = config.q();
  const std::int64_t S = config.steps();

  EnsembleState init0 =
      sample_ensemble(init, M, q, derive_seed(config.seed, "flow-init"));

  FlowTable prev;
  prev.q = q;
  prev.M = M;
  prev.grid.resize(static_cast<size_t>(S) + 1);
  for (std::int64_t g = 0; g <= S; ++g)
    prev.grid[static_cast<size_t>(g)] = config.dt * static_cast<double>(g);
  prev.snaps.assign(static_cast<size_t>(S) + 1, init0.x);

  const std::uint64_t key = derive_seed(config.seed, "picard");
  std::vector<std::vector<double>> next(static_cast<size_t>(S) + 1);
  std::vector<double> dw(static_cast<size_t>(M) * config.n);
  StepScratch sc;
  sc.size_for(spec, init0.x.size());

  for (int it = 1; it <= max_iter; ++it) {
    EnsembleState cur = init0;
    cur.t = 0;
    next[0] = cur.x;
    detail::with_model(spec, [&](const auto& k) {
      for (std::int64_t step = 0; step < S; ++step) {
        double t = config.dt * static_cast<double>(step);
        for (int j = 0; j < M; ++j)
          brownian_increment(key, static_cast<std::uint64_t>(j), step, config.dt,
                             config.n, dw.data() + static_cast<size_t>(j) * config.n);
        step_rows(k, t, config.dt, cur.x.data(), M,
                  prev.snaps[static_cast<size_t>(step)].data(), M, dw.data(),
                  sc.out.data(), sc.bacc.data(), sc.sacc.data(), sc.tb.data(),
                  sc.ts.data());
        cur.x.swap(sc.out);
        cur.t = config.dt * static_cast<double>(step + 1);
        check_finite(cur, cur.t);
        next[static_cast<size_t>(step + 1)] = cur.x;
      }
    });

    std::vector<double> deltas(static_cast<size_t>(S) + 1, 0.0);
    parallel_for(S + 1, [&](std::int64_t g) {
      deltas[static_cast<size_t>(g)] = wasserstein1_support(
          prev.snaps[static_cast<size_t>(g)].data(),
          next[static_cast<size_t>(g)].data(), M, q);
    });
    double delta = 0;
    for (double v : deltas) delta = std::max(delta, v);

    prev.snaps.swap(next);
    prev.iterations = it;
    prev.final_delta = delta;
    prev.delta_history.push_back(delta);
    if (delta <= picard_tol) {
      prev.converged = true;
      break;
    }
  }
  return prev;
}

std::vector<double> run_decoupled(double s, double t, const std::vector<double>& x,
                                  const FlowTable& flow, const KernelSpec& spec,
                                  int sample_count, std::uint64_t seed) {
  std::vector<double> out(static_cast<size_t>(sample_count) * spec.q());
  const int q = spec.q();
  run_decoupled_capture(s, {t}, x, flow, spec, sample_count, seed,
                        [&](int sample, int, const double* z) {
                          std::memcpy(out.data() + static_cast<size_t>(sample) * q,
                                      z, sizeof(double) * static_cast<size_t>(q));
                        });
  return out;
}

void run_decoupled_capture(double s, const std::vector<double>& ts,
                           const std::vector<double>& x, const FlowTable& flow,
                           const KernelSpec& spec, int sample_count,
                           std::uint64_t seed,
                           const std::function<void(int, int, const double*)>& sink) {
  const int q = spec.q();
  if (static_cast<int>(x.size()) != q)
    throw SimError("run_decoupled: start point has wrong dimension");
  if (sample_count < 1) throw SimError("run_decoupled: sample_count must be >= 1");
  const int idx_s = flow.index_of(s);
  std::vector<int> capture;
  capture.reserve(ts.size());
  int idx_max = idx_s;
  for (double t : ts) {
    int idx = flow.index_of(t);
    if (idx <= idx_s) throw SimError("run_decoupled: requires s < t on the grid");
    capture.push_back(idx);
    idx_max = std::max(idx_max, idx);
  }
  const double dt = flow.grid[1] - flow.grid[0];
  const int n = spec.n;

  parallel_for(sample_count, [&](std::int64_t sample) {
    StepScratch sc;
    std::vector<double> z = x;
    std::vector<double> dw(static_cast<size_t>(n));
    sc.bacc.resize(spec.d);
    sc.sacc.resize(static_cast<size_t>(spec.d) * spec.n);
    sc.tb.resize(spec.d);
    sc.ts.resize(static_cast<size_t>(spec.d) * spec.n);
    sc.out.resize(static_cast<size_t>(q));
    detail::with_model(spec, [&](const auto& k) {
      for (int step = idx_s; step < idx_max; ++step) {
        double t = flow.grid[static_cast<size_t>(step)];
        brownian_increment(seed, static_cast<std::uint64_t>(sample), step, dt, n,
                           dw.data());
        step_rows(k, t, dt, z.data(), 1, flow.snaps[static_cast<size_t>(step)].data(),
                  flow.M, dw.data(), sc.out.data(), sc.bacc.data(), sc.sacc.data(),
                  sc.tb.data(), sc.ts.data());
        z.swap(sc.out);
        for (int j = 0; j < q; ++j)
          if (!std::isfinite(z[j]))
            throw SimError("non-finite state at t=" +
                           fmt(flow.grid[static_cast<size_t>(step + 1)]) +
                           ", sample " + std::to_string(sample));
        for (size_t w = 0; w < capture.size(); ++w)
          if (capture[w] == step + 1)
            sink(static_cast<int>(sample), static_cast<int>(w), z.data());
      }
    });
  });
}

std::vector<double> deterministic_flow(double s, double t, const std::vector<double>& x,
                                       const FlowTable& flow, const KernelSpec& spec) {
  const int q = spec.q();
  const int d = spec.d;
  if (static_cast<int>(x.size()) != q)
    throw SimError("deterministic_flow: start point has wrong dimension");
  const int idx_s = flow.index_of(s);
  const int idx_t = flow.index_of(t);
  if (idx_t < idx_s) throw SimError("deterministic_flow: requires s <= t");
  const double h = flow.grid[1] - flow.grid[0];
  const bool kinetic = (q != d);

  std::vector<double> z = x, tb(static_cast<size_t>(d));
  std::vector<double> k1(q), k2(q), k3(q), k4(q), zt(q);
  auto deriv = [&](double time, const std::vector<double>& zz, const double* support,
                   int M, std::vector<double>& out) {
    detail::with_model(spec, [&](const auto& k) {
      std::vector<double> acc(static_cast<size_t>(d), 0.0);
      for (int m = 0; m < M; ++m) {
        k.drift(time, zz.data(), support + static_cast<size_t>(m) * q, tb.data());
        for (int j = 0; j < d; ++j) acc[j] += tb[j];
      }
      for (int j = 0; j < d; ++j) acc[j] /= M;
      if (kinetic) {
        for (int j = 0; j < d; ++j) out[j] = zz[d + j];
        for (int j = 0; j < d; ++j) out[d + j] = acc[j];
      } else {
        for (int j = 0; j < d; ++j) out[j] = acc[j];
      }
    });
  };

  for (int step = idx_s; step < idx_t; ++step) {
    double time = flow.grid[static_cast<size_t>(step)];
    const double* left = flow.snaps[static_cast<size_t>(step)].data();
    const double* right = flow.snaps[static_cast<size_t>(step + 1)].data();
    deriv(time, z, left, flow.M, k1);
    for (int j = 0; j < q; ++j) zt[j] = z[j] + 0.5 * h * k1[j];
    deriv(time + 0.5 * h, zt, left, flow.M, k2);
    for (int j = 0; j < q; ++j) zt[j] = z[j] + 0.5 * h * k2[j];
    deriv(time + 0.5 * h, zt, left, flow.M, k3);
    for (int j = 0; j < q; ++j) zt[j] = z[j] + h * k3[j];
    deriv(time + h, zt, right, flow.M, k4);
    for (int j = 0; j < q; ++j)
      z[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
  }
  return z;
}

double second_moment(const EnsembleState& state) {
  const int N = state.size();
  if (N == 0) return 0;
  double acc = 0;
  for (int i = 0; i < N; ++i) {
    const double* xi = state.p(i);
    for (int j = 0; j < state.q; ++j) acc += xi[j] * xi[j];
  }
  return acc / N;
}

}
