#pragma once

#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace mzbias {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
/// Ideal 50:50 amplitude transmission, 2^{-1/2}.
inline constexpr double kBalancedAmplitude = 0.70710678118654752440;

enum class Architecture { Triangular, Rectangular };

std::string_view to_string(Architecture a);
/// Accepts "reck"/"triangular" and "clements"/"rectangular".
Architecture parse_architecture(std::string_view name);

/// Wraps an angle into [0, 2π).
double wrap_phase(double phi);

struct MZParams {
  double psi = 0.0;    ///< phase between the two beamsplitters
  double theta = 0.0;  ///< phase on the upper input arm
  double t1 = kBalancedAmplitude;
  double t2 = kBalancedAmplitude;

  bool operator==(const MZParams&) const = default;
};

/// B(t) = [[t, i r], [i r, t]] with r = sqrt(1 - t^2).
template <typename Real>
Eigen::Matrix<std::complex<Real>, 2, 2> beamsplitter(Real t) {
  using C = std::complex<Real>;
  const Real r = std::sqrt(std::max(Real(0), Real(1) - t * t));
  Eigen::Matrix<C, 2, 2> b;
  b << C(t, 0), C(0, r), C(0, r), C(t, 0);
  return b;
}

/// B(t2) · P(psi) · B(t1) · P(theta), with P(phi) = diag(e^{i phi}, 1).
template <typename Real>
Eigen::Matrix<std::complex<Real>, 2, 2> mz_transfer(Real psi, Real theta, Real t1, Real t2) {
  using C = std::complex<Real>;
  Eigen::Matrix<C, 2, 2> u = beamsplitter(t2);
  u.col(0) *= std::polar(Real(1), psi);
  u = u * beamsplitter(t1);
  u.col(0) *= std::polar(Real(1), theta);
  return u;
}

inline Eigen::Matrix2cd mz_transfer(const MZParams& p) {
  return mz_transfer<double>(p.psi, p.theta, p.t1, p.t2);
}

/// Left-multiplies rows (mode, mode+1) of `u` by the 2x2 block `t`.
template <typename Derived, typename Block>
void apply_on_rows(Eigen::MatrixBase<Derived>& u, const Eigen::MatrixBase<Block>& t, int mode) {
  for (Eigen::Index c = 0; c < u.cols(); ++c) {
    const auto a = u(mode, c);
    const auto b = u(mode + 1, c);
    u(mode, c) = t(0, 0) * a + t(0, 1) * b;
    u(mode + 1, c) = t(1, 0) * a + t(1, 1) * b;
  }
}

/// Right-multiplies columns (mode, mode+1) of `u` by the 2x2 block `t`.
template <typename Derived, typename Block>
void apply_on_cols(Eigen::MatrixBase<Derived>& u, const Eigen::MatrixBase<Block>& t, int mode) {
  for (Eigen::Index r = 0; r < u.rows(); ++r) {
    const auto a = u(r, mode);
    const auto b = u(r, mode + 1);
    u(r, mode) = a * t(0, 0) + b * t(1, 0);
    u(r, mode + 1) = a * t(0, 1) + b * t(1, 1);
  }
}

/// m x m identity with `u2` on rows/cols (mode, mode+1). `mode` is zero-based.
ComplexMatrix embed_givens(const Eigen::Matrix2cd& u2, int mode, int m);

/// Physical slot of a cell: zero-based layer (light travels towards higher
/// layers) and the upper of the two adjacent modes it couples.
struct CellPosition {
  int layer = 0;
  int mode = 0;
  auto operator<=>(const CellPosition&) const = default;
};

struct MeshCell {
  CellPosition pos;
  MZParams mz;
};

struct MeshParameters {
  int m = 0;
  Architecture architecture = Architecture::Rectangular;
  std::vector<MeshCell> cells;  ///< ordered by (layer, mode)
  Eigen::VectorXd output_phases;
};

/// Canonical cell positions in light order. Triangular meshes couple modes
/// (k, k+1) in m-1-k cells placed at layers k, k+2, ...; rectangular meshes
/// alternate layers starting at mode 0 and mode 1.
std::vector<CellPosition> mesh_layout(int m, Architecture a);
int num_layers(int m, Architecture a);

/// Ideal mesh (balanced beamsplitters, zero phases, D = I) on the canonical layout.
MeshParameters ideal_mesh(int m, Architecture a);

/// D · Π_k U_k, with the product ordered so that the first layer acts first.
ComplexMatrix reconstruct(const MeshParameters& p);

/// Frobenius norm of U†U - I.
double unitarity_deviation(const ComplexMatrix& u);

class NonUnitaryError : public std::invalid_argument {
 public:
  explicit NonUnitaryError(double deviation);
  double deviation() const { return deviation_; }

 private:
  double deviation_;
};

/// Nulling decomposition onto the canonical layout of `a`. Throws
/// NonUnitaryError when ||U†U - I||_F exceeds `tolerance`.
MeshParameters decompose(const ComplexMatrix& u, Architecture a, double tolerance = 1e-8);

/// Haar unitary from the QR factorization of a complex Ginibre matrix.
ComplexMatrix haar_random(int m, std::uint64_t seed);

/// Mesh with i.i.d. uniform phases, ideal beamsplitters and D = I.
MeshParameters uniform_phase_random(int m, Architecture a, std::uint64_t seed);

/// F_jk = exp(2πi jk/m)/sqrt(m).
ComplexMatrix fourier(int m);

struct NoiseModel {
  double bs_mean = kBalancedAmplitude;
  double bs_sigma = 1e-2;
  double phase_sigma = 1e-3;  ///< radians, additive
  std::uint64_t seed = 0;
};

/// Resamples every beamsplitter amplitude from N(bs_mean, bs_sigma^2) clamped
/// to [0, 1] and adds N(0, phase_sigma^2) to every internal phase. Pure in
/// (noise.seed, trial). A zero sigma leaves the corresponding field untouched.
MeshParameters perturb(const MeshParameters& p, const NoiseModel& noise, std::uint64_t trial);

}  // namespace mzbias
