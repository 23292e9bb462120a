#include "mzbias/photonics.hpp"

#include <algorithm>
#include <numeric>

#include "mzbias/mesh_graph.hpp"

namespace mzbias {

int photon_count(const FockState& s) { return std::accumulate(s.begin(), s.end(), 0); }

std::string to_string(const FockState& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(s[i]);
  }
  return out;
}

namespace {

// Visits nondecreasing (strictly increasing if `strict`) mode sequences.
void visit_sequences(int m, int n, bool strict, std::vector<int>& seq, int start, std::vector<FockState>& out) {
  if (static_cast<int>(seq.size()) == n) {
    FockState s(m, 0);
    for (int mode : seq) ++s[mode];
    out.push_back(std::move(s));
    return;
  }
  for (int mode = start; mode < m; ++mode) {
    seq.push_back(mode);
    visit_sequences(m, n, strict, seq, strict ? mode + 1 : mode, out);
    seq.pop_back();
  }
}

std::vector<int> occupied_indices(const FockState& s) {
  std::vector<int> idx;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (int k = 0; k < s[i]; ++k) idx.push_back(static_cast<int>(i));
  return idx;
}

double factorial_product(const FockState& s) {
  double f = 1.0;
  for (int n : s)
    for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

}  // namespace

std::vector<FockState> enumerate_states(int m, int n, bool collision_free) {
  if (m < 1 || n < 1) throw std::invalid_argument("enumerate_states: need m >= 1 and N >= 1");
  if (collision_free && n > m) throw std::invalid_argument("enumerate_states: collision-free needs N <= m");
  std::vector<FockState> out;
  std::vector<int> seq;
  visit_sequences(m, n, collision_free, seq, 0, out);
  return out;
}

double transition_probability(const ComplexMatrix& u, const FockState& v, const FockState& w) {
  if (static_cast<Eigen::Index>(v.size()) != u.cols() || static_cast<Eigen::Index>(w.size()) != u.rows()) {
    throw std::invalid_argument("transition_probability: state length does not match the matrix");
  }
  if (photon_count(v) != photon_count(w)) throw std::invalid_argument("transition_probability: photon-number mismatch");
  const auto rows = occupied_indices(w);
  const auto cols = occupied_indices(v);
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  ComplexMatrix sub(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) sub(r, c) = u(rows[r], cols[c]);
  return std::norm(permanent(sub)) / (factorial_product(v) * factorial_product(w));
}

DependencySets::DependencySets(int m, Architecture a) : m_(m), sets_(static_cast<std::size_t>(m) * m) {
  const MeshGraph g(m, a);
  const auto reach = reach_sets(g);
  for (int c = 0; c < g.num_cells(); ++c) {
    const auto& r = reach[g.cell_node(c)];
    for (int i = 0; i < m; ++i) {
      if (!r.outputs.test(i)) continue;
      for (int j = 0; j < m; ++j)
        if (r.inputs.test(j)) {
          auto& s = sets_[static_cast<std::size_t>(i) * m + j];
          s.push_back(2 * c);
          s.push_back(2 * c + 1);
        }
    }
  }
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) sets_[static_cast<std::size_t>(i) * m + j].push_back(output_phase_id(i));
}

std::vector<int> DependencySets::internal(int i, int j) const {
  const auto& s = element(i, j);
  return {s.begin(), s.end() - 1};
}

std::vector<int> DependencySets::pair(const FockState& v, const FockState& w) const {
  std::vector<char> hit(num_internal(), 0);
  for (int i = 0; i < m_; ++i) {
    if (w[i] == 0) continue;
    for (int j = 0; j < m_; ++j)
      if (v[j] != 0)
        for (int id : internal(i, j)) hit[id] = 1;
  }
  std::vector<int> out;
  for (int id = 0; id < num_internal(); ++id)
    if (hit[id]) out.push_back(id);
  return out;
}

Eigen::MatrixXi DependencySets::internal_counts() const {
  Eigen::MatrixXi c(m_, m_);
  for (int i = 0; i < m_; ++i)
    for (int j = 0; j < m_; ++j) c(i, j) = static_cast<int>(element(i, j).size()) - 1;
  return c;
}

}  // namespace mzbias
