#include "mflab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "mflab/detail/kernels_impl.hpp"
#include "mflab/errors.hpp"
#include "mflab/noise.hpp"

namespace mflab {

namespace {

// sup |tanh''| = 4/(3*sqrt(3))
constexpr double kTanhHessSup = 0.769800358919501;

double take(std::map<std::string, double>& rest, const std::string& key, double dflt) {
  auto it = rest.find(key);
  if (it == rest.end()) return dflt;
  double v = it->second;
  rest.erase(it);
  return v;
}

int take_dim(std::map<std::string, double>& rest, const std::string& key, int dflt) {
  auto it = rest.find(key);
  if (it == rest.end()) return dflt;
  double v = it->second;
  rest.erase(it);
  int iv = static_cast<int>(std::lround(v));
  if (std::abs(v - iv) > 1e-9) throw KernelError("make_builtin: " + key + " must be integral");
  return iv;
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw KernelError(msg);
}

// Cyclic Jacobi on a symmetric k x k matrix (row-major, destroyed).
void jacobi_eigenvalues(std::vector<double>& a, int k, std::vector<double>& evals) {
  auto at = [&](int i, int j) -> double& { return a[i * k + j]; };
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0;
    for (int i = 0; i < k; ++i)
      for (int j = i + 1; j < k; ++j) off += at(i, j) * at(i, j);
    if (off < 1e-26) break;
    for (int p = 0; p < k - 1; ++p) {
      for (int q = p + 1; q < k; ++q) {
        double apq = at(p, q);
        if (std::abs(apq) < 1e-300) continue;
        double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double cth = 1.0 / std::sqrt(t * t + 1.0);
        double sth = t * cth;
        for (int r = 0; r < k; ++r) {
          double arp = at(r, p), arq = at(r, q);
          at(r, p) = cth * arp - sth * arq;
          at(r, q) = sth * arp + cth * arq;
        }
        for (int r = 0; r < k; ++r) {
          double apr = at(p, r), aqr = at(q, r);
          at(p, r) = cth * apr - sth * aqr;
          at(q, r) = sth * apr + cth * aqr;
        }
      }
    }
  }
  evals.resize(k);
  for (int i = 0; i < k; ++i) evals[i] = at(i, i);
}

// Spectral norm of a rows x cols matrix via the smaller Gram matrix.
double spectral_norm(const std::vector<double>& j, int rows, int cols) {
  int k = std::min(rows, cols);
  std::vector<double> gram(static_cast<size_t>(k) * k, 0.0);
  if (rows <= cols) {
    for (int r = 0; r < rows; ++r)
      for (int r2 = 0; r2 < rows; ++r2) {
        double acc = 0;
        for (int c = 0; c < cols; ++c) acc += j[r * cols + c] * j[r2 * cols + c];
        gram[r * rows + r2] = acc;
      }
  } else {
    for (int c = 0; c < cols; ++c)
      for (int c2 = 0; c2 < cols; ++c2) {
        double acc = 0;
        for (int r = 0; r < rows; ++r) acc += j[r * cols + c] * j[r * cols + c2];
        gram[c * cols + c2] = acc;
      }
  }
  std::vector<double> evals;
  jacobi_eigenvalues(gram, k, evals);
  double lmax = 0;
  for (double v : evals) lmax = std::max(lmax, v);
  return std::sqrt(std::max(0.0, lmax));
}

double norm2(const double* v, int k) {
  double acc = 0;
  for (int i = 0; i < k; ++i) acc += v[i] * v[i];
  return std::sqrt(acc);
}

}  // namespace

KernelSpec make_builtin(const std::string& name,
                        const std::map<std::string, double>& params) {
  KernelSpec k;
  k.name = name;
  k.params = params;
  std::map<std::string, double> rest = params;
  k.d = take_dim(rest, "d", 1);
  k.n = take_dim(rest, "n", 1);
  require(k.d >= 1 && k.n >= 1, "make_builtin: dimensions must be positive");

  if (name == "linear-attraction") {
    k.model = ModelId::LinearAttraction;
    k.kind = Kind::FirstOrder;
    k.a = take(rest, "a", 1.0);
    k.c = take(rest, "c", 0.5);
    k.s = take(rest, "s", 1.0);
    k.eps = take(rest, "eps", 0.0);
    require(k.s > 0, "linear-attraction: s must be > 0");
    require(std::abs(k.eps) < 1.0,
            "linear-attraction: |eps| >= 1 destroys ellipticity");
    require(k.n >= k.d, "linear-attraction: needs n >= d for elliptic sigma");
    double root = std::sqrt(static_cast<double>(std::min(k.d, k.n)));
    k.K_b = std::max(std::abs(k.a + k.c), std::abs(k.c));
    k.K_sigma = std::abs(k.s * k.eps) * root;
    double lo = k.s * (1.0 - std::abs(k.eps));
    double hi = k.s * (1.0 + std::abs(k.eps));
    k.delta = std::max({hi * hi, 1.0 / (lo * lo), 1.0});
  } else if (name == "smooth-bounded") {
    k.model = ModelId::SmoothBounded;
    k.kind = Kind::FirstOrder;
    k.A = take(rest, "A", 1.0);
    k.B = take(rest, "B", 0.5);
    k.s = take(rest, "s", 1.0);
    require(k.s > 0, "smooth-bounded: s must be > 0");
    require(k.n >= k.d, "smooth-bounded: needs n >= d for elliptic sigma");
    k.K_b = std::max({std::abs(k.A), std::abs(k.B), kTanhHessSup * std::abs(k.A)});
    k.K_sigma = 0.0;
    k.delta = std::max({k.s * k.s, 1.0 / (k.s * k.s), 1.0});
  } else if (name == "constant-diffusion-ou") {
    k.model = ModelId::ConstantDiffusionOu;
    k.kind = Kind::FirstOrder;
    k.s = take(rest, "s", 1.0);
    require(k.s > 0, "constant-diffusion-ou: s must be > 0");
    require(k.n >= k.d, "constant-diffusion-ou: needs n >= d for elliptic sigma");
    k.K_b = 1.0;
    k.K_sigma = 0.0;
    k.delta = std::max({k.s * k.s, 1.0 / (k.s * k.s), 1.0});
  } else if (name == "kinetic-linear") {
    k.model = ModelId::KineticLinear;
    k.kind = Kind::Kinetic;
    k.kappa = take(rest, "kappa", 1.0);
    k.gamma = take(rest, "gamma", 1.0);
    k.c = take(rest, "c", 0.5);
    k.s = take(rest, "s", 1.0);
    require(k.s > 0, "kinetic-linear: s must be > 0");
    require(k.n >= k.d, "kinetic-linear: needs n >= d for elliptic sigma");
    double gc = k.gamma + k.c;
    k.K_b = std::max(std::sqrt(k.kappa * k.kappa + gc * gc), std::abs(k.c));
    k.K_sigma = 0.0;
    k.delta = std::max({k.s * k.s, 1.0 / (k.s * k.s), 1.0});
  } else {
    throw KernelError(
        "make_builtin: unknown model '" + name +
        "' (catalog: linear-attraction, smooth-bounded, constant-diffusion-ou, "
        "kinetic-linear)");
  }

  if (!rest.empty())
    throw KernelError("make_builtin: unknown parameter '" + rest.begin()->first +
                      "' for model '" + name + "'");
  return k;
}

void eval_drift_kernel(const KernelSpec& spec, double t, const double* x,
                       const double* y, double* out) {
  detail::with_model(spec, [&](const auto& k) { k.drift(t, x, y, out); });
}

void eval_diffusion_kernel(const KernelSpec& spec, double t, const double* x,
                           const double* y, double* out) {
  detail::with_model(spec, [&](const auto& k) { k.diffusion(t, x, y, out); });
}

namespace {

struct FdScratch {
  std::vector<double> xp, xm, f0, fp, fm, fpp, fpm, fmp, fmm, jac;
};

// Spectral norm of the FD Jacobian of f: R^q -> R^r in its first argument.
template <class Eval>
double fd_jacobian_norm(const Eval& f, const double* x, int q, int r, double h,
                        FdScratch& s) {
  s.xp.assign(x, x + q);
  s.xm.assign(x, x + q);
  s.fp.resize(r);
  s.fm.resize(r);
  s.jac.assign(static_cast<size_t>(r) * q, 0.0);
  for (int k = 0; k < q; ++k) {
    s.xp[k] = x[k] + h;
    s.xm[k] = x[k] - h;
    f(s.xp.data(), s.fp.data());
    f(s.xm.data(), s.fm.data());
    for (int i = 0; i < r; ++i) s.jac[i * q + k] = (s.fp[i] - s.fm[i]) / (2.0 * h);
    s.xp[k] = x[k];
    s.xm[k] = x[k];
  }
  return spectral_norm(s.jac, r, q);
}

// Max over output components of the spectral norm of the FD Hessian.
template <class Eval>
double fd_hessian_norm(const Eval& f, const double* x, int q, int r, double h,
                       FdScratch& s) {
  s.f0.resize(r);
  s.fp.resize(r);
  s.fm.resize(r);
  s.fpp.resize(r);
  s.fpm.resize(r);
  s.fmp.resize(r);
  s.fmm.resize(r);
  f(x, s.f0.data());
  std::vector<double> pt(x, x + q);
  std::vector<std::vector<double>> hess(
      static_cast<size_t>(r), std::vector<double>(static_cast<size_t>(q) * q, 0.0));
  for (int k = 0; k < q; ++k) {
    pt[k] = x[k] + h;
    f(pt.data(), s.fp.data());
    pt[k] = x[k] - h;
    f(pt.data(), s.fm.data());
    pt[k] = x[k];
    for (int i = 0; i < r; ++i)
      hess[i][k * q + k] = (s.fp[i] - 2.0 * s.f0[i] + s.fm[i]) / (h * h);
  }
  for (int k = 0; k < q; ++k) {
    for (int l = k + 1; l < q; ++l) {
      pt[k] = x[k] + h;
      pt[l] = x[l] + h;
      f(pt.data(), s.fpp.data());
      pt[l] = x[l] - h;
      f(pt.data(), s.fpm.data());
      pt[k] = x[k] - h;
      pt[l] = x[l] + h;
      f(pt.data(), s.fmp.data());
      pt[l] = x[l] - h;
      f(pt.data(), s.fmm.data());
      pt[k] = x[k];
      pt[l] = x[l];
      for (int i = 0; i < r; ++i) {
        double v = (s.fpp[i] - s.fpm[i] - s.fmp[i] + s.fmm[i]) / (4.0 * h * h);
        hess[i][k * q + l] = v;
        hess[i][l * q + k] = v;
      }
    }
  }
  double worst = 0;
  std::vector<double> evals;
  for (int i = 0; i < r; ++i) {
    std::vector<double> m = hess[i];
    jacobi_eigenvalues(m, q, evals);
    for (double v : evals) worst = std::max(worst, std::abs(v));
  }
  return worst;
}

}  // namespace

AssumptionReport check_assumptions(const KernelSpec& spec, int probe_count,
                                   double box_radius, double fd_step,
                                   std::uint64_t seed) {
  if (probe_count < 1) throw KernelError("check_assumptions: probe_count must be >= 1");
  if (!(fd_step > 0)) throw KernelError("check_assumptions: fd_step must be > 0");
  if (!(box_radius > 0)) throw KernelError("check_assumptions: box_radius must be > 0");

  const int q = spec.q();
  const int d = spec.d;
  const int dn = spec.d * spec.n;
  AssumptionReport rep;
  rep.probe_count = probe_count;
  rep.box_radius = box_radius;
  rep.fd_step = fd_step;
  rep.seed = seed;
  rep.declared_K_b = spec.K_b;
  rep.declared_K_sigma = spec.K_sigma;
  rep.declared_delta = spec.delta;

  auto draw_point = [&](std::uint64_t stream, std::uint32_t which,
                        std::vector<double>& out) {
    out.resize(q);
    for (int j = 0; j < q; ++j) {
      double u = uniform01(seed, stream, static_cast<std::uint32_t>(j), which);
      out[j] = box_radius * (2.0 * u - 1.0);
    }
  };

  // Probe cloud standing in for the measure in the ellipticity clause.
  const int cloud_size = std::min(64, probe_count);
  std::vector<std::vector<double>> cloud(cloud_size);
  for (int j = 0; j < cloud_size; ++j)
    draw_point(0x10000000ull + static_cast<std::uint64_t>(j), 3, cloud[j]);

  std::vector<double> x, y, y2, tmp(dn), sbar(dn), origin(q, 0.0), b0(d);
  std::vector<double> gram;
  std::vector<double> evals;
  FdScratch scratch;

  eval_drift_kernel(spec, 0.0, origin.data(), origin.data(), b0.data());
  rep.b_origin = norm2(b0.data(), d);

  for (int p = 0; p < probe_count; ++p) {
    draw_point(static_cast<std::uint64_t>(p), 0, x);
    draw_point(static_cast<std::uint64_t>(p), 1, y);
    draw_point(static_cast<std::uint64_t>(p), 2, y2);

    auto bx = [&](const double* xx, double* out) {
      eval_drift_kernel(spec, 0.0, xx, y.data(), out);
    };
    auto sx = [&](const double* xx, double* out) {
      eval_diffusion_kernel(spec, 0.0, xx, y.data(), out);
    };
    rep.max_grad_b = std::max(rep.max_grad_b,
                              fd_jacobian_norm(bx, x.data(), q, d, fd_step, scratch));
    rep.max_hess_b = std::max(rep.max_hess_b,
                              fd_hessian_norm(bx, x.data(), q, d, fd_step, scratch));
    rep.max_grad_sigma = std::max(
        rep.max_grad_sigma, fd_jacobian_norm(sx, x.data(), q, dn, fd_step, scratch));
    rep.max_hess_sigma = std::max(
        rep.max_hess_sigma, fd_hessian_norm(sx, x.data(), q, dn, fd_step, scratch));

    // Lipschitz quotients in the measure argument.
    double ydist = 0;
    for (int j = 0; j < q; ++j) ydist += (y[j] - y2[j]) * (y[j] - y2[j]);
    ydist = std::sqrt(ydist);
    if (ydist > 1e-12) {
      std::vector<double> b1(d), b2(d);
      eval_drift_kernel(spec, 0.0, x.data(), y.data(), b1.data());
      eval_drift_kernel(spec, 0.0, x.data(), y2.data(), b2.data());
      double diff = 0;
      for (int j = 0; j < d; ++j) diff += (b1[j] - b2[j]) * (b1[j] - b2[j]);
      rep.lip_b_y = std::max(rep.lip_b_y, std::sqrt(diff) / ydist);
      std::vector<double> s1(dn), s2(dn);
      eval_diffusion_kernel(spec, 0.0, x.data(), y.data(), s1.data());
      eval_diffusion_kernel(spec, 0.0, x.data(), y2.data(), s2.data());
      diff = 0;
      for (int j = 0; j < dn; ++j) diff += (s1[j] - s2[j]) * (s1[j] - s2[j]);
      rep.lip_sigma_y = std::max(rep.lip_sigma_y, std::sqrt(diff) / ydist);
    }

    // Ellipticity of sigma averaged over the probe cloud.
    std::fill(sbar.begin(), sbar.end(), 0.0);
    for (const auto& yc : cloud) {
      eval_diffusion_kernel(spec, 0.0, x.data(), yc.data(), tmp.data());
      for (int j = 0; j < dn; ++j) sbar[j] += tmp[j];
    }
    for (int j = 0; j < dn; ++j) sbar[j] /= cloud_size;
    gram.assign(static_cast<size_t>(d) * d, 0.0);
    for (int i = 0; i < d; ++i)
      for (int i2 = 0; i2 < d; ++i2) {
        double acc = 0;
        for (int l = 0; l < spec.n; ++l) acc += sbar[i * spec.n + l] * sbar[i2 * spec.n + l];
        gram[i * d + i2] = acc;
      }
    jacobi_eigenvalues(gram, d, evals);
    double lmin = evals[0], lmax = evals[0];
    for (double v : evals) {
      lmin = std::min(lmin, v);
      lmax = std::max(lmax, v);
    }
    if (p == 0) {
      rep.ellipticity_min = lmin;
      rep.ellipticity_max = lmax;
    } else {
      rep.ellipticity_min = std::min(rep.ellipticity_min, lmin);
      rep.ellipticity_max = std::max(rep.ellipticity_max, lmax);
    }
  }

  const double slack = 1.0 + kAssumptionSlack;
  rep.grad_b_ok = rep.max_grad_b <= spec.K_b * slack;
  rep.hess_b_ok = rep.max_hess_b <= spec.K_b * slack;
  rep.lip_b_y_ok = rep.lip_b_y <= spec.K_b * slack;
  rep.b_origin_ok = rep.b_origin <= spec.K_b * slack;
  rep.grad_sigma_ok = rep.max_grad_sigma <= spec.K_sigma * slack + 1e-7;
  rep.hess_sigma_ok = rep.max_hess_sigma <= spec.K_sigma * slack + 1e-5;
  rep.lip_sigma_y_ok = rep.lip_sigma_y <= spec.K_sigma * slack + 1e-7;
  rep.ellipticity_ok = rep.ellipticity_min >= (1.0 / spec.delta) / slack &&
                       rep.ellipticity_max <= spec.delta * slack;
  rep.pass = rep.grad_b_ok && rep.hess_b_ok && rep.lip_b_y_ok && rep.b_origin_ok &&
             rep.grad_sigma_ok && rep.hess_sigma_ok && rep.lip_sigma_y_ok &&
             rep.ellipticity_ok;
  return rep;
}

}
