#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "mzbias/mesh_graph.hpp"
#include "mzbias/path_count.hpp"
#include "mzbias/photonics.hpp"
#include "mzbias/stats.hpp"

using namespace mzbias;

namespace {

Complex naive_permanent(const ComplexMatrix& a) {
  std::vector<int> perm(a.rows());
  std::iota(perm.begin(), perm.end(), 0);
  Complex total = 0;
  do {
    Complex prod = 1;
    for (Eigen::Index r = 0; r < a.rows(); ++r) prod *= a(r, perm[r]);
    total += prod;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return total;
}

ComplexMatrix random_complex(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g;
  ComplexMatrix a(n, n);
  for (auto& z : a.reshaped()) z = Complex(g(rng), g(rng));
  return a;
}

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

// Second-quantized evolution: each input photon's creation operator a_j^dag
// becomes sum_i u_ij a_i^dag. Returns output amplitudes keyed by occupation.
std::map<FockState, Complex> evolve(const ComplexMatrix& u, const FockState& v) {
  const int m = static_cast<int>(u.rows());
  std::map<std::vector<int>, Complex> poly{{{}, 1.0}};
  for (int j = 0; j < m; ++j)
    for (int c = 0; c < v[j]; ++c) {
      std::map<std::vector<int>, Complex> next;
      for (const auto& [modes, coeff] : poly)
        for (int i = 0; i < m; ++i) {
          auto key = modes;
          key.insert(std::upper_bound(key.begin(), key.end(), i), i);
          next[key] += coeff * u(i, j);
        }
      poly = std::move(next);
    }
  double norm_in = 1;
  for (int x : v) norm_in *= factorial(x);
  std::map<FockState, Complex> out;
  for (const auto& [modes, coeff] : poly) {
    FockState w(m, 0);
    for (int i : modes) ++w[i];
    double norm_out = 1;
    for (int x : w) norm_out *= factorial(x);
    out[w] = coeff * std::sqrt(norm_out / norm_in);
  }
  return out;
}

std::vector<int> oracle_cells(const MeshGraph& g, int out, int in) {
  const auto from = path_counts_from(g, g.input_node(in));
  const auto to = path_counts_to(g, g.output_node(out));
  std::vector<int> ids;
  for (int c = 0; c < g.num_cells(); ++c)
    if (from[g.cell_node(c)] > 0 && to[g.cell_node(c)] > 0) {
      ids.push_back(2 * c);
      ids.push_back(2 * c + 1);
    }
  return ids;
}

}  // namespace

TEST(States, Counts) {
  EXPECT_EQ(enumerate_states(4, 2, true).size(), 6u);
  EXPECT_EQ(enumerate_states(12, 2, true).size(), 66u);
  EXPECT_EQ(enumerate_states(3, 2, false).size(), 6u);
  EXPECT_EQ(enumerate_states(6, 3, false).size(), 56u);
  EXPECT_THROW(enumerate_states(3, 4, true), std::invalid_argument);
}

TEST(States, CollisionFreeAndOrdered) {
  const auto s = enumerate_states(6, 3, true);
  for (const auto& x : s) {
    EXPECT_EQ(photon_count(x), 3);
    EXPECT_LE(*std::max_element(x.begin(), x.end()), 1);
  }
  EXPECT_EQ(to_string(s.front()), "1,1,1,0,0,0");
  EXPECT_EQ(to_string(s.back()), "0,0,0,1,1,1");
  EXPECT_EQ(std::set<FockState>(s.begin(), s.end()).size(), s.size());
}

TEST(Permanent, Examples) {
  EXPECT_EQ(permanent(Eigen::Matrix2cd::Identity()), Complex(1));
  Eigen::Matrix2cd a;
  a << Complex(1, 2), 3, Complex(0, -1), 4;
  EXPECT_LT(std::abs(permanent(a) - (a(0, 0) * a(1, 1) + a(0, 1) * a(1, 0))), 1e-12);
  EXPECT_NEAR(permanent(Eigen::Matrix3d::Ones()), 6.0, 1e-12);
  EXPECT_EQ(permanent(ComplexMatrix(0, 0)), Complex(1));
}

TEST(Permanent, MatchesNaiveExpansion) {
  for (int n = 1; n <= 6; ++n)
    for (unsigned s = 0; s < 5; ++s) {
      const ComplexMatrix a = random_complex(n, 10 * n + s);
      const Complex expected = naive_permanent(a);
      EXPECT_LT(std::abs(permanent(a) - expected), 1e-10 * std::max(1.0, std::abs(expected)));
    }
}

TEST(Permanent, RejectsBadShapes) {
  EXPECT_THROW(permanent(ComplexMatrix(2, 3)), std::invalid_argument);
  EXPECT_THROW(permanent(ComplexMatrix::Zero(21, 21)), std::length_error);
}

TEST(Transition, HongOuMandel) {
  const ComplexMatrix u = mz_transfer(MZParams{std::numbers::pi / 2, 0});
  EXPECT_NEAR(transition_probability(u, {1, 1}, {1, 1}), 0.0, 1e-12);
  EXPECT_NEAR(transition_probability(u, {1, 1}, {2, 0}), 0.5, 1e-12);
  EXPECT_NEAR(transition_probability(u, {1, 1}, {0, 2}), 0.5, 1e-12);
  EXPECT_NEAR(std::norm(evolve(u, {1, 1})[{1, 1}]), 0.0, 1e-12);
}

TEST(Transition, Identity) {
  const ComplexMatrix u = ComplexMatrix::Identity(5, 5);
  const auto states = enumerate_states(5, 2, true);
  for (const auto& v : states)
    for (const auto& w : states) EXPECT_DOUBLE_EQ(transition_probability(u, v, w), v == w ? 1.0 : 0.0);
}

TEST(Transition, MatchesSecondQuantization) {
  const ComplexMatrix u = haar_random(5, 8);
  for (const auto& v : enumerate_states(5, 3, false)) {
    const auto amplitudes = evolve(u, v);
    for (const auto& w : enumerate_states(5, 3, false)) {
      const auto it = amplitudes.find(w);
      const double expected = it == amplitudes.end() ? 0.0 : std::norm(it->second);
      EXPECT_NEAR(transition_probability(u, v, w), expected, 1e-12);
    }
  }
}

TEST(Transition, FullSpaceNormalization) {
  const std::pair<int, int> cases[] = {{6, 3}, {6, 2}, {8, 2}, {10, 2}, {5, 4}, {7, 4}};
  for (auto [m, n] : cases) {
    const ComplexMatrix u = haar_random(m, 100 + m + n);
    const auto outputs = enumerate_states(m, n, false);
    for (const auto& v : enumerate_states(m, n, true)) {
      double total = 0;
      for (const auto& w : outputs) total += transition_probability(u, v, w);
      EXPECT_NEAR(total, 1.0, 1e-10) << "m=" << m << " N=" << n;
      break;
    }
  }
}

TEST(Transition, RejectsPhotonMismatch) {
  EXPECT_THROW(transition_probability(ComplexMatrix::Identity(3, 3), {1, 1, 0}, {1, 0, 0}), std::invalid_argument);
}

TEST(DependencySets, SingleCell) {
  const DependencySets d(2, Architecture::Rectangular);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      EXPECT_EQ(d.internal(i, j), (std::vector<int>{0, 1}));
      EXPECT_EQ(d.element(i, j), (std::vector<int>{0, 1, 2 + i}));
    }
}

TEST(DependencySets, MatchReachability) {
  for (auto a : {Architecture::Triangular, Architecture::Rectangular})
    for (int m : {5, 7, 8}) {
      const DependencySets d(m, a);
      const MeshGraph g(m, a);
      const Eigen::MatrixXi counts = d.internal_counts();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          const auto expected = oracle_cells(g, i, j);
          EXPECT_EQ(d.internal(i, j), expected);
          EXPECT_EQ(counts(i, j), static_cast<int>(expected.size()));
          EXPECT_FALSE(expected.empty());
          EXPECT_EQ(d.element(i, j).back(), d.output_phase_id(i));
        }
    }
}

TEST(DependencySets, PairIsUnion) {
  const DependencySets d(6, Architecture::Triangular);
  const FockState v{1, 0, 0, 1, 0, 0}, w{0, 1, 0, 0, 0, 1};
  std::set<int> expected;
  for (int i : {1, 5})
    for (int j : {0, 3})
      for (int id : d.internal(i, j)) expected.insert(id);
  EXPECT_EQ(d.pair(v, w), std::vector<int>(expected.begin(), expected.end()));
}

TEST(DependencySets, LightCone) {
  // Changing only parameters outside {xi}_vw must leave p_vw unchanged.
  for (auto a : {Architecture::Triangular, Architecture::Rectangular}) {
    const int m = 6;
    const DependencySets d(m, a);
    const MeshParameters p = decompose(haar_random(m, 21), a);
    const ComplexMatrix u = reconstruct(p);
    const auto states = enumerate_states(m, 2, true);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> phase(0, kTwoPi);
    for (const auto& v : states)
      for (const auto& w : states) {
        const auto inside = d.pair(v, w);
        MeshParameters q = p;
        for (int c = 0; c < static_cast<int>(q.cells.size()); ++c) {
          if (!std::binary_search(inside.begin(), inside.end(), 2 * c)) q.cells[c].mz.psi = phase(rng);
          if (!std::binary_search(inside.begin(), inside.end(), 2 * c + 1)) q.cells[c].mz.theta = phase(rng);
        }
        for (int i = 0; i < m; ++i) q.output_phases(i) = phase(rng);
        EXPECT_NEAR(transition_probability(reconstruct(q), v, w), transition_probability(u, v, w), 1e-12);
      }
  }
}

TEST(DependencySets, CountsFollowConnectivity) {
  const int m = 12;
  for (auto a : {Architecture::Triangular, Architecture::Rectangular}) {
    const DependencySets d(m, a);
    const MeshGraph g(m, a);
    Eigen::MatrixXd log_paths(m, m);
    for (int in = 0; in < m; ++in) {
      const auto s = path_stats_from(g, in);
      for (int out = 0; out < m; ++out) log_paths(out, in) = log_big(s[out].count);
    }
    EXPECT_GT(spearman(flatten(d.internal_counts()), flatten(log_paths)), 0.8) << to_string(a);
  }
}
