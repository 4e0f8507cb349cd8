#pragma once

// Config-driven experiment runner.  A run consumes one JSON config file:
//
//   {
//     "experiment": "strong-error",
//     "seed": 42,
//     "output_dir": "out",
//     "model": {"name": "linear-attraction",
//               "params": {"a": 1.0, "c": 0.5, "s": 1.0, "eps": 0.0,
//                          "d": 1, "n": 1}},
//     "sim": {"N": 64, "dt": 0.001, "T": 1.0, "snapshot_stride": 1},
//     "init": {"law": "normal", "center": [0.0], "scale": 1.0},
//     "params": { ...experiment-specific keys... }
//   }
//
// Experiments: assumptions, simulate, meanfield, strong-error, poc-rate,
// fluctuation, gradient-scan, flow-deviation, transport-selftest,
// moment-sanity.  The schema is strict: unknown keys are rejected with
// their full path.  Every run writes report.json, a CSV per rate curve,
// and manifest.json into output_dir; nothing in the artifacts depends on
// wall-clock time or worker count.

#include <cstdint>
#include <string>

#include <json.hpp>

#include "mflab/kernels.hpp"
#include "mflab/simulate.hpp"
#include "mflab/state.hpp"

namespace mflab {

struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  KernelSpec model;
  SimConfig sim;
  InitSpec init;
  nlohmann::ordered_json params;  // experiment-specific block, already validated
  nlohmann::ordered_json raw;     // full config echo
};

ExperimentConfig load_config(const std::string& path);

// Executes the experiment and writes the artifacts.  Returns 0 when the
// declared pass criteria hold and 2 when they fail; errors are thrown.
int run_from_config(const std::string& path);

// Property battery behind the transport-selftest experiment and the
// `selftest` subcommand: oracle equivalence, duality, metric axioms,
// cross-eta comparisons, entropic bias, weighted-vs-assignment agreement.
nlohmann::ordered_json transport_selftest(std::uint64_t seed, int instances,
                                          int max_support);

}  // namespace mflab
