#pragma once

#include <bit>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mzbias/unitary.hpp"

namespace mzbias {

/// Occupation number per mode.
using FockState = std::vector<int>;

int photon_count(const FockState& s);
/// "1,0,1,0" style label.
std::string to_string(const FockState& s);

/// All N-photon states of m modes in lexicographic order of their mode
/// multisets. Collision-free lists contain the C(m, N) subsets.
std::vector<FockState> enumerate_states(int m, int n, bool collision_free);

inline constexpr int kMaxPermanentSize = 20;

/// Ryser's formula with Gray-code subset updates, O(2^n n).
template <typename Derived>
typename Derived::Scalar permanent(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = a.rows();
  if (a.cols() != n) throw std::invalid_argument("permanent: matrix must be square");
  if (n > kMaxPermanentSize) throw std::length_error("permanent: size exceeds " + std::to_string(kMaxPermanentSize));
  if (n == 0) return Scalar(1);

  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> row_sums = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(n);
  Scalar total(0);
  const std::uint64_t subsets = std::uint64_t{1} << n;
  std::uint64_t gray = 0;
  for (std::uint64_t k = 1; k < subsets; ++k) {
    const int flip = std::countr_zero(k);
    const std::uint64_t next = k ^ (k >> 1);
    if (next & (std::uint64_t{1} << flip)) {
      row_sums += a.col(flip);
    } else {
      row_sums -= a.col(flip);
    }
    gray = next;
    const Scalar prod = row_sums.prod();
    total += (std::popcount(gray) % 2 == 0) ? prod : -prod;
  }
  return (n % 2 == 0) ? total : -total;
}

/// |perm(U[w, v])|^2 / (Π w_i! Π v_i!), rows repeated by w and columns by v.
double transition_probability(const ComplexMatrix& u, const FockState& v, const FockState& w);

/// Phase parameters that can influence each matrix element. Internal ids:
/// cell c of the canonical layout owns psi = 2c and theta = 2c + 1. The output
/// phase of mode i has id m(m-1) + i.
class DependencySets {
 public:
  DependencySets(int m, Architecture a);

  int m() const { return m_; }
  int num_internal() const { return m_ * (m_ - 1); }
  int output_phase_id(int mode) const { return num_internal() + mode; }

  /// Parameters of u_ij (output i, input j), sorted, output phase included.
  const std::vector<int>& element(int i, int j) const { return sets_[static_cast<std::size_t>(i) * m_ + j]; }
  /// Internal parameters of u_ij.
  std::vector<int> internal(int i, int j) const;
  /// Union of the internal parameters of u_ij over occupied i in w and j in v.
  std::vector<int> pair(const FockState& v, const FockState& w) const;
  /// |{xi}_ij| counting internal parameters only.
  Eigen::MatrixXi internal_counts() const;

 private:
  int m_;
  std::vector<std::vector<int>> sets_;
};

inline DependencySets dependency_sets(int m, Architecture a) { return DependencySets(m, a); }

}  // namespace mzbias
