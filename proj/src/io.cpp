#include "mflab/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mflab/errors.hpp"

namespace mflab {

namespace {

constexpr const char* kHeader = "# mflab columnar v1";

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError(path + ": cannot open for writing");
  return out;
}

void write_preamble(std::ofstream& out, const std::string& kind, int q,
                    const std::vector<std::pair<std::string, std::string>>& extra) {
  out << kHeader << "\n";
  out << "# kind: " << kind << "\n";
  out << "# q: " << q << "\n";
  for (const auto& [k, v] : extra) out << "# " << k << ": " << v << "\n";
  out << "t idx";
  for (int j = 0; j < q; ++j) out << " c" << j;
  out << "\n";
}

void write_rows(std::ofstream& out, double t, const std::vector<double>& pts, int q) {
  const int count = static_cast<int>(pts.size()) / q;
  const std::string ts = fmt17(t);
  for (int i = 0; i < count; ++i) {
    out << ts << ' ' << i;
    for (int j = 0; j < q; ++j) out << ' ' << fmt17(pts[static_cast<size_t>(i) * q + j]);
    out << '\n';
  }
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> vals;
  const char* p = s.c_str();
  char* end = nullptr;
  while (*p) {
    double v = std::strtod(p, &end);
    if (end == p) break;
    vals.push_back(v);
    p = end;
  }
  return vals;
}

double meta_num(const ColumnarFile& f, const std::string& path, const std::string& key) {
  auto it = f.meta.find(key);
  if (it == f.meta.end()) throw IoError(path + ": missing metadata key '" + key + "'");
  char* end = nullptr;
  double v = std::strtod(it->second.c_str(), &end);
  if (end == it->second.c_str())
    throw IoError(path + ": metadata key '" + key + "' is not numeric");
  return v;
}

// Collects rows into consecutive equal-size time groups with idx 0..N-1.
struct Grouped {
  std::vector<double> times;
  std::vector<std::vector<double>> slices;
};

Grouped group_rows(const ColumnarFile& f, const std::string& path) {
  Grouped g;
  size_t i = 0;
  while (i < f.rows.size()) {
    double t = f.rows[i].t;
    std::vector<double> slice;
    long expect = 0;
    while (i < f.rows.size() && f.rows[i].t == t) {
      if (f.rows[i].idx != expect)
        throw IoError(path + ": rows at t=" + fmt17(t) +
                      " are not indexed 0..N-1 in order");
      slice.insert(slice.end(), f.rows[i].vals.begin(), f.rows[i].vals.end());
      ++expect;
      ++i;
    }
    if (!g.slices.empty() && slice.size() != g.slices.front().size())
      throw IoError(path + ": time slices have different sizes");
    g.times.push_back(t);
    g.slices.push_back(std::move(slice));
  }
  if (g.times.empty()) throw IoError(path + ": no data rows");
  return g;
}

}  // namespace

ColumnarFile read_columnar(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open");
  ColumnarFile file;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) -> void {
    throw IoError(path + ":" + std::to_string(lineno) + ": " + msg);
  };

  ++lineno;
  if (!std::getline(in, line) || line != kHeader)
    fail(std::string("expected '") + kHeader + "'");

  bool have_columns = false;
  int ncols = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      size_t colon = line.find(':');
      if (line.size() < 2 || line[1] != ' ' || colon == std::string::npos)
        fail("malformed metadata line");
      std::string key = line.substr(2, colon - 2);
      std::string val = colon + 2 <= line.size() ? line.substr(colon + 2) : "";
      if (key == "kind")
        file.kind = val;
      else
        file.meta[key] = val;
      continue;
    }
    if (!have_columns) {
      std::istringstream hs(line);
      std::string tok;
      std::vector<std::string> cols;
      while (hs >> tok) cols.push_back(tok);
      if (cols.size() < 3 || cols[0] != "t" || cols[1] != "idx")
        fail("expected column header 't idx c0 ...'");
      file.q = static_cast<int>(cols.size()) - 2;
      ncols = static_cast<int>(cols.size());
      have_columns = true;
      continue;
    }
    ColumnarFile::Row row;
    const char* p = line.c_str();
    char* end = nullptr;
    row.t = std::strtod(p, &end);
    if (end == p) fail("cannot parse time value");
    p = end;
    row.idx = std::strtol(p, &end, 10);
    if (end == p) fail("cannot parse particle index");
    p = end;
    row.vals.reserve(static_cast<size_t>(file.q));
    for (int j = 0; j < file.q; ++j) {
      double v = std::strtod(p, &end);
      if (end == p) fail("row has fewer than " + std::to_string(ncols) + " columns");
      row.vals.push_back(v);
      p = end;
    }
    while (*p == ' ' || *p == '\t' || *p == '\r') ++p;
    if (*p) fail("row has more than " + std::to_string(ncols) + " columns");
    file.rows.push_back(std::move(row));
  }
  if (!have_columns) {
    ++lineno;
    fail("missing column header");
  }
  if (file.kind.empty()) throw IoError(path + ": missing 'kind' metadata");
  return file;
}

void write_path_bundle(const std::string& path, const PathBundle& bundle) {
  if (bundle.snapshots.empty()) throw IoError(path + ": empty path bundle");
  auto out = open_out(path);
  const int q = bundle.snapshots.front().q;
  std::vector<std::pair<std::string, std::string>> extra;
  if (bundle.running_sup_dev) {
    std::string s;
    for (size_t i = 0; i < bundle.running_sup_dev->size(); ++i) {
      if (i) s += ' ';
      s += fmt17((*bundle.running_sup_dev)[i]);
    }
    extra.emplace_back("sup_dev", s);
  }
  write_preamble(out, "path", q, extra);
  for (size_t s = 0; s < bundle.snapshots.size(); ++s)
    write_rows(out, bundle.grid[s], bundle.snapshots[s].x, q);
  if (!out) throw IoError(path + ": write failed");
}

PathBundle read_path_bundle(const std::string& path) {
  ColumnarFile f = read_columnar(path);
  if (f.kind != "path") throw IoError(path + ": expected kind 'path', got '" + f.kind + "'");
  Grouped g = group_rows(f, path);
  PathBundle bundle;
  bundle.grid = g.times;
  for (size_t s = 0; s < g.times.size(); ++s) {
    EnsembleState st;
    st.t = g.times[s];
    st.q = f.q;
    st.x = std::move(g.slices[s]);
    bundle.snapshots.push_back(std::move(st));
  }
  auto it = f.meta.find("sup_dev");
  if (it != f.meta.end()) bundle.running_sup_dev = parse_double_list(it->second);
  return bundle;
}

void write_flow_table(const std::string& path, const FlowTable& flow) {
  if (flow.snaps.empty()) throw IoError(path + ": empty flow table");
  auto out = open_out(path);
  std::vector<std::pair<std::string, std::string>> extra;
  extra.emplace_back("M", std::to_string(flow.M));
  extra.emplace_back("converged", flow.converged ? "1" : "0");
  extra.emplace_back("iterations", std::to_string(flow.iterations));
  extra.emplace_back("final_delta", fmt17(flow.final_delta));
  if (!flow.delta_history.empty()) {
    std::string s;
    for (size_t i = 0; i < flow.delta_history.size(); ++i) {
      if (i) s += ' ';
      s += fmt17(flow.delta_history[i]);
    }
    extra.emplace_back("delta_history", s);
  }
  write_preamble(out, "flow", flow.q, extra);
  for (size_t s = 0; s < flow.snaps.size(); ++s)
    write_rows(out, flow.grid[s], flow.snaps[s], flow.q);
  if (!out) throw IoError(path + ": write failed");
}

FlowTable read_flow_table(const std::string& path) {
  ColumnarFile f = read_columnar(path);
  if (f.kind != "flow") throw IoError(path + ": expected kind 'flow', got '" + f.kind + "'");
  Grouped g = group_rows(f, path);
  FlowTable flow;
  flow.q = f.q;
  flow.M = static_cast<int>(meta_num(f, path, "M"));
  flow.converged = meta_num(f, path, "converged") != 0;
  flow.iterations = static_cast<int>(meta_num(f, path, "iterations"));
  flow.final_delta = meta_num(f, path, "final_delta");
  auto it = f.meta.find("delta_history");
  if (it != f.meta.end()) flow.delta_history = parse_double_list(it->second);
  flow.grid = std::move(g.times);
  flow.snaps = std::move(g.slices);
  for (const auto& s : flow.snaps)
    if (static_cast<int>(s.size()) != flow.M * flow.q)
      throw IoError(path + ": slice size does not match M and q");
  return flow;
}

void write_cloud(const std::string& path, double t, const std::vector<double>& points,
                 int q) {
  if (q < 1 || points.empty() || points.size() % static_cast<size_t>(q) != 0)
    throw IoError(path + ": point buffer length must be a positive multiple of q");
  auto out = open_out(path);
  write_preamble(out, "cloud", q, {});
  write_rows(out, t, points, q);
  if (!out) throw IoError(path + ": write failed");
}

EmpiricalMeasure cloud_from_file(const std::string& path,
                                 std::optional<double> t_select) {
  ColumnarFile f = read_columnar(path);
  Grouped g = group_rows(f, path);
  size_t pick = g.times.size() - 1;
  if (t_select) {
    bool found = false;
    for (size_t s = 0; s < g.times.size(); ++s)
      if (std::abs(g.times[s] - *t_select) <= 1e-9 * (1.0 + std::abs(*t_select))) {
        pick = s;
        found = true;
        break;
      }
    if (!found)
      throw IoError(path + ": no time slice at t=" + fmt17(*t_select));
  }
  EmpiricalMeasure mu;
  mu.dim = f.q;
  mu.points = std::move(g.slices[pick]);
  return mu;
}

}  // namespace mflab
