#include "mzbias/io.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace mzbias {

Json matrix_to_json(const ComplexMatrix& u) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < u.cols(); ++j) row.push_back({u(i, j).real(), u(i, j).imag()});
    rows.push_back(std::move(row));
  }
  return {{"m", u.rows()}, {"entries", std::move(rows)}};
}

ComplexMatrix matrix_from_json(const Json& j) {
  const int m = j.at("m").get<int>();
  const auto& rows = j.at("entries");
  if (m < 1 || static_cast<int>(rows.size()) != m) throw std::invalid_argument("matrix JSON: expected m rows");
  ComplexMatrix u(m, m);
  for (int r = 0; r < m; ++r) {
    if (static_cast<int>(rows[r].size()) != m) throw std::invalid_argument("matrix JSON: expected m columns");
    for (int c = 0; c < m; ++c) {
      const auto& z = rows[r][c];
      if (!z.is_array() || z.size() != 2) throw std::invalid_argument("matrix JSON: entries are [re, im] pairs");
      u(r, c) = Complex(z[0].get<double>(), z[1].get<double>());
    }
  }
  return u;
}

Json mesh_to_json(const MeshParameters& p) {
  Json cells = Json::array();
  for (const auto& c : p.cells) {
    cells.push_back({{"layer", c.pos.layer},
                     {"row", c.pos.mode},
                     {"psi", c.mz.psi},
                     {"theta", c.mz.theta},
                     {"t1", c.mz.t1},
                     {"t2", c.mz.t2}});
  }
  Json phases = Json::array();
  for (Eigen::Index i = 0; i < p.output_phases.size(); ++i) phases.push_back(p.output_phases(i));
  return {{"m", p.m}, {"architecture", std::string(to_string(p.architecture))}, {"cells", std::move(cells)},
          {"output_phases", std::move(phases)}};
}

MeshParameters mesh_from_json(const Json& j) {
  MeshParameters p;
  p.m = j.at("m").get<int>();
  p.architecture = parse_architecture(j.at("architecture").get<std::string>());
  for (const auto& c : j.at("cells")) {
    MeshCell cell;
    cell.pos = {c.at("layer").get<int>(), c.at("row").get<int>()};
    cell.mz.psi = c.at("psi").get<double>();
    cell.mz.theta = c.at("theta").get<double>();
    cell.mz.t1 = c.value("t1", kBalancedAmplitude);
    cell.mz.t2 = c.value("t2", kBalancedAmplitude);
    if (cell.mz.t1 < 0 || cell.mz.t1 > 1 || cell.mz.t2 < 0 || cell.mz.t2 > 1) {
      throw std::invalid_argument("mesh JSON: beamsplitter amplitude outside [0, 1]");
    }
    p.cells.push_back(cell);
  }
  std::vector<CellPosition> got;
  for (const auto& c : p.cells) got.push_back(c.pos);
  if (got != mesh_layout(p.m, p.architecture)) throw std::invalid_argument("mesh JSON: cells do not form the canonical layout");
  const auto& phases = j.at("output_phases");
  if (static_cast<int>(phases.size()) != p.m) throw std::invalid_argument("mesh JSON: expected m output phases");
  p.output_phases.resize(p.m);
  for (int i = 0; i < p.m; ++i) p.output_phases(i) = phases[i].get<double>();
  return p;
}

Json graph_to_json(const MeshGraph& g) {
  Json nodes = Json::array();
  for (int v = 0; v < g.num_nodes(); ++v) {
    const auto& n = g.node(v);
    const char* kind = n.kind == NodeKind::Input ? "input" : n.kind == NodeKind::Cell ? "cell" : "output";
    nodes.push_back({{"id", v}, {"kind", kind}, {"layer", n.layer}, {"row", n.mode}});
  }
  Json edges = Json::array();
  for (int v = 0; v < g.num_nodes(); ++v)
    for (int s : g.successors(v)) edges.push_back({v, s});
  return {{"m", g.m()}, {"architecture", std::string(to_string(g.architecture()))}, {"nodes", std::move(nodes)},
          {"edges", std::move(edges)}};
}

namespace {

Json law_json(const VoltagePhaseLaw& l) {
  return {{"theta0", l.theta0}, {"alpha", l.alpha}, {"psi0", l.psi0}, {"beta", l.beta}};
}

}  // namespace

Json estimate_to_json(const CalibrationEstimate& e, const std::vector<VoltagePhaseLaw>& truth) {
  Json cells = Json::array();
  for (std::size_t k = 0; k < e.cells.size(); ++k) {
    const auto& c = e.cells[k];
    Json item = {{"layer", e.layout[k].layer},
                 {"row", e.layout[k].mode},
                 {"estimate", law_json(c.law)},
                 {"v_bar", c.v_bar},
                 {"v_cross", c.v_cross},
                 {"v_balanced", c.v_balanced},
                 {"theta_fit_rms", c.theta_residual},
                 {"psi_fit_rms", c.psi_residual},
                 {"diagonal_order", c.diagonal_order},
                 {"psi_order", c.psi_order}};
    if (k < truth.size()) item["truth"] = law_json(truth[k]);
    if (k < e.errors.size()) item["abs_error"] = law_json(e.errors[k]);
    cells.push_back(std::move(item));
  }
  return {{"m", e.m}, {"max_abs_error", e.max_error()}, {"cells", std::move(cells)}};
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return Json::parse(in);
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

std::string format_double(double x) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

void write_heatmap(std::ostream& os, const std::vector<std::vector<std::string>>& cells) {
  const std::size_t m = cells.size();
  os << "out\\in";
  for (std::size_t j = 0; j < m; ++j) os << ',' << j + 1;
  os << '\n';
  for (std::size_t i = 0; i < m; ++i) {
    if (cells[i].size() != m) throw std::invalid_argument("write_heatmap: matrix must be square");
    os << i + 1;
    for (const auto& c : cells[i]) os << ',' << c;
    os << '\n';
  }
}

void write_heatmap(std::ostream& os, const Eigen::MatrixXd& a) {
  std::vector<std::vector<std::string>> cells(a.rows(), std::vector<std::string>(a.cols()));
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) cells[i][j] = format_double(a(i, j));
  write_heatmap(os, cells);
}

void write_heatmap_file(const std::string& path, const Eigen::MatrixXd& a) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_heatmap(out, a);
}

void write_heatmap_file(const std::string& path, const std::vector<std::vector<std::string>>& cells) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_heatmap(out, cells);
}

}  // namespace mzbias
