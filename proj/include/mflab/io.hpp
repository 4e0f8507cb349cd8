#pragma once

// Columnar text files holding simulation output.  Layout:
//
//   # mflab columnar v1
//   # kind: path|flow|cloud
//   # q: 2
//   # ...further key: value metadata...
//   t idx c0 c1
//   0 0 0.1 -0.2
//
// Values are written with %.17g so a write/read round trip reproduces
// doubles exactly.  Parse failures throw IoError with file and line.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mflab/state.hpp"
#include "mflab/transport.hpp"

namespace mflab {

struct ColumnarFile {
  std::string kind;
  std::map<std::string, std::string> meta;
  int q = 0;
  struct Row {
    double t = 0;
    long idx = 0;
    std::vector<double> vals;
  };
  std::vector<Row> rows;
};

void write_path_bundle(const std::string& path, const PathBundle& bundle);
PathBundle read_path_bundle(const std::string& path);

void write_flow_table(const std::string& path, const FlowTable& flow);
FlowTable read_flow_table(const std::string& path);

// Single time slice of points in R^q.
void write_cloud(const std::string& path, double t, const std::vector<double>& points,
                 int q);

ColumnarFile read_columnar(const std::string& path);

// Extracts one time slice from any columnar file as an empirical measure.
// Without t_select the latest time present in the file is used.
EmpiricalMeasure cloud_from_file(const std::string& path,
                                 std::optional<double> t_select = std::nullopt);

}  // namespace mflab
