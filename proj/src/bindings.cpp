#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mflab/chaos.hpp"
#include "mflab/config.hpp"
#include "mflab/errors.hpp"
#include "mflab/io.hpp"
#include "mflab/kernels.hpp"
#include "mflab/noise.hpp"
#include "mflab/parallel.hpp"
#include "mflab/ratefit.hpp"
#include "mflab/simulate.hpp"
#include "mflab/transport.hpp"
#include "mflab/version.hpp"

namespace py = pybind11;
using namespace mflab;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

EmpiricalMeasure measure_from(const Array& pts) {
  if (pts.ndim() != 2) throw TransportError("expected a 2-d array of points");
  EmpiricalMeasure mu;
  mu.dim = static_cast<int>(pts.shape(1));
  mu.points.assign(pts.data(), pts.data() + pts.size());
  return mu;
}

Array snapshot_array(const EnsembleState& s) {
  Array out({s.size(), s.q});
  std::copy(s.x.begin(), s.x.end(), out.mutable_data());
  return out;
}

py::dict bundle_dict(const PathBundle& b) {
  py::dict out;
  out["times"] = b.grid;
  py::list snaps;
  for (const auto& s : b.snapshots) snaps.append(snapshot_array(s));
  out["snapshots"] = snaps;
  if (b.running_sup_dev)
    out["running_sup_dev"] = *b.running_sup_dev;
  return out;
}

py::object json_to_py(const nlohmann::ordered_json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
  mod.doc() = "mean-field particle systems, their limits, and L^eta transport";
  mod.attr("__version__") = std::string(kVersion);

  mod.def("worker_count", &worker_count);
  mod.def("set_worker_count", &set_worker_count, py::arg("n"));
  mod.def("derive_seed",
          [](std::uint64_t base, const std::string& tag) {
            return derive_seed(base, tag);
          },
          py::arg("base"), py::arg("tag"));
  mod.def("brownian_increment",
          [](std::uint64_t seed, std::uint64_t stream, std::int64_t step, double dt,
             int n) {
            auto v = brownian_increment(seed, stream, step, dt, n);
            return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
          },
          py::arg("seed"), py::arg("stream"), py::arg("step"), py::arg("dt"),
          py::arg("n"));

  py::enum_<Kind>(mod, "Kind")
      .value("first_order", Kind::FirstOrder)
      .value("kinetic", Kind::Kinetic);

  py::class_<KernelSpec>(mod, "KernelSpec")
      .def_readonly("name", &KernelSpec::name)
      .def_readonly("kind", &KernelSpec::kind)
      .def_readonly("d", &KernelSpec::d)
      .def_readonly("n", &KernelSpec::n)
      .def_property_readonly("q", &KernelSpec::q)
      .def_readonly("params", &KernelSpec::params);

  mod.def("make_builtin",
          [](const std::string& name, const std::map<std::string, double>& params) {
            return make_builtin(name, params);
          },
          py::arg("name"), py::arg("params") = std::map<std::string, double>{});

  mod.def("check_assumptions",
          [](const KernelSpec& spec, int probe_count, double box_radius,
             double fd_step, std::uint64_t seed) {
            AssumptionReport r =
                check_assumptions(spec, probe_count, box_radius, fd_step, seed);
            py::dict out;
            out["max_grad_b"] = r.max_grad_b;
            out["max_hess_b"] = r.max_hess_b;
            out["lip_b_y"] = r.lip_b_y;
            out["b_origin"] = r.b_origin;
            out["max_grad_sigma"] = r.max_grad_sigma;
            out["max_hess_sigma"] = r.max_hess_sigma;
            out["lip_sigma_y"] = r.lip_sigma_y;
            out["ellipticity_min"] = r.ellipticity_min;
            out["ellipticity_max"] = r.ellipticity_max;
            out["pass"] = r.pass;
            return out;
          },
          py::arg("spec"), py::arg("probe_count") = 1000, py::arg("box_radius") = 2.0,
          py::arg("fd_step") = 1e-5, py::arg("seed") = 0);

  py::class_<SimConfig>(mod, "SimConfig")
      .def(py::init<>())
      .def_readwrite("N", &SimConfig::N)
      .def_readwrite("d", &SimConfig::d)
      .def_readwrite("n", &SimConfig::n)
      .def_readwrite("kind", &SimConfig::kind)
      .def_readwrite("dt", &SimConfig::dt)
      .def_readwrite("T", &SimConfig::T)
      .def_readwrite("seed", &SimConfig::seed)
      .def_readwrite("snapshot_stride", &SimConfig::snapshot_stride)
      .def_property_readonly("q", &SimConfig::q);

  py::class_<InitSpec> init_cls(mod, "InitSpec");
  py::enum_<InitSpec::Law>(init_cls, "Law")
      .value("point", InitSpec::Law::Point)
      .value("normal", InitSpec::Law::Normal)
      .value("uniform_box", InitSpec::Law::UniformBox);
  init_cls.def(py::init<>())
      .def_readwrite("law", &InitSpec::law)
      .def_readwrite("center", &InitSpec::center)
      .def_readwrite("scale", &InitSpec::scale);

  py::class_<FlowTable>(mod, "FlowTable")
      .def_readonly("grid", &FlowTable::grid)
      .def_readonly("M", &FlowTable::M)
      .def_readonly("q", &FlowTable::q)
      .def_readonly("converged", &FlowTable::converged)
      .def_readonly("iterations", &FlowTable::iterations)
      .def_readonly("final_delta", &FlowTable::final_delta)
      .def_readonly("delta_history", &FlowTable::delta_history)
      .def("index_of", &FlowTable::index_of, py::arg("t"))
      .def("snapshot",
           [](const FlowTable& flow, int k) {
             if (k < 0 || k >= static_cast<int>(flow.snaps.size()))
               throw SimError("snapshot index out of range");
             Array out({flow.M, flow.q});
             std::copy(flow.snaps[k].begin(), flow.snaps[k].end(),
                       out.mutable_data());
             return out;
           },
           py::arg("k"));

  mod.def("run_interacting",
          [](const SimConfig& config, const KernelSpec& spec, const InitSpec& init) {
            return bundle_dict(run_interacting(config, spec, init));
          },
          py::arg("config"), py::arg("spec"), py::arg("init"));
  mod.def("solve_meanfield_flow", &solve_meanfield_flow, py::arg("config"),
          py::arg("spec"), py::arg("init"), py::arg("M"),
          py::arg("picard_tol") = 1e-8, py::arg("max_iter") = 60);
  mod.def("run_limit_copies",
          [](const SimConfig& config, const KernelSpec& spec, const FlowTable& flow,
             const InitSpec& init, bool share_noise) {
            return bundle_dict(run_limit_copies(config, spec, flow, init, share_noise));
          },
          py::arg("config"), py::arg("spec"), py::arg("flow"), py::arg("init"),
          py::arg("share_noise_with_particles") = false);
  mod.def("run_coupled_pair",
          [](const SimConfig& config, const KernelSpec& spec, const FlowTable& flow,
             const InitSpec& init) {
            EnsembleState start = sample_ensemble(init, config.N, config.q(),
                                                  derive_seed(config.seed, "init"));
            CoupledResult res = run_coupled_pair(config, spec, flow, start);
            return py::make_tuple(bundle_dict(res.interacting), bundle_dict(res.limit));
          },
          py::arg("config"), py::arg("spec"), py::arg("flow"), py::arg("init"));
  mod.def("run_decoupled",
          [](double s, double t, const std::vector<double>& x, const FlowTable& flow,
             const KernelSpec& spec, int sample_count, std::uint64_t seed) {
            auto v = run_decoupled(s, t, x, flow, spec, sample_count, seed);
            const int q = static_cast<int>(x.size());
            Array out({sample_count, q});
            std::copy(v.begin(), v.end(), out.mutable_data());
            return out;
          },
          py::arg("s"), py::arg("t"), py::arg("x"), py::arg("flow"), py::arg("spec"),
          py::arg("sample_count"), py::arg("seed"));
  mod.def("deterministic_flow", &deterministic_flow, py::arg("s"), py::arg("t"),
          py::arg("x"), py::arg("flow"), py::arg("spec"));

  mod.def("eta_cost",
          [](const std::vector<double>& x, const std::vector<double>& y, double eta,
             int m) {
            if (x.size() != y.size()) throw TransportError("point sizes differ");
            return eta_cost(x.data(), y.data(), static_cast<int>(x.size()), eta, m);
          },
          py::arg("x"), py::arg("y"), py::arg("eta"), py::arg("m") = 1);
  mod.def("exact_wasserstein_eta",
          [](const Array& a, const Array& b, double eta, int m) {
            auto res = exact_wasserstein_eta(measure_from(a), measure_from(b), eta, m);
            py::dict out;
            out["value"] = res.value;
            out["assignment"] = res.assignment;
            return out;
          },
          py::arg("a"), py::arg("b"), py::arg("eta"), py::arg("m") = 1);
  mod.def("brute_force_wasserstein",
          [](const Array& a, const Array& b, double eta, int m) {
            return brute_force_wasserstein(measure_from(a), measure_from(b), eta, m);
          },
          py::arg("a"), py::arg("b"), py::arg("eta"), py::arg("m") = 1);
  mod.def("sinkhorn_wasserstein_eta",
          [](const Array& a, const Array& b, double eta, int m, double reg,
             int max_iter, double tol) {
            auto res = sinkhorn_wasserstein_eta(measure_from(a), measure_from(b), eta,
                                                m, reg, max_iter, tol);
            py::dict out;
            out["value"] = res.value;
            out["iterations"] = res.iterations;
            out["converged"] = res.converged;
            out["marginal_error"] = res.marginal_error;
            return out;
          },
          py::arg("a"), py::arg("b"), py::arg("eta"), py::arg("m") = 1,
          py::arg("reg") = 0.0, py::arg("max_iter") = 1000, py::arg("tol") = 1e-9);
  mod.def("dual_lower_bound",
          [](const Array& a, const Array& b, double eta, int m, int family_size,
             std::uint64_t seed) {
            auto res =
                dual_lower_bound(measure_from(a), measure_from(b), eta, m, family_size, seed);
            py::dict out;
            out["value"] = res.value;
            out["best_index"] = res.best_index;
            out["family_size"] = res.family_size;
            return out;
          },
          py::arg("a"), py::arg("b"), py::arg("eta"), py::arg("m") = 1,
          py::arg("family_size") = 32, py::arg("seed") = 0);

  mod.def("product_tensorization_bound", &product_tensorization_bound,
          py::arg("marginal_values"));

  mod.def("fit_rate",
          [](const std::vector<double>& x, const std::vector<double>& y) {
            RateFit f = fit_rate(x, y);
            py::dict out;
            out["slope"] = f.slope;
            out["intercept"] = f.intercept;
            out["r2"] = f.r2;
            out["stderr_slope"] = f.stderr_slope;
            out["dropped"] = f.dropped;
            out["fitted"] = f.fitted;
            return out;
          },
          py::arg("x"), py::arg("y"));

  mod.def("run_from_config", &run_from_config, py::arg("path"));
  mod.def("transport_selftest",
          [](std::uint64_t seed, int instances, int max_support) {
            return json_to_py(transport_selftest(seed, instances, max_support));
          },
          py::arg("seed") = 0, py::arg("instances") = 200, py::arg("max_support") = 7);

  py::register_exception<KernelError>(mod, "KernelError");
  py::register_exception<SimError>(mod, "SimError");
  py::register_exception<TransportError>(mod, "TransportError");
  py::register_exception<ConfigError>(mod, "ConfigError");
  py::register_exception<IoError>(mod, "IoError");
}
