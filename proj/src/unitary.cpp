#include "mzbias/unitary.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "mzbias/random.hpp"

namespace mzbias {

std::string_view to_string(Architecture a) {
  return a == Architecture::Triangular ? "reck" : "clements";
}

Architecture parse_architecture(std::string_view name) {
  if (name == "reck" || name == "triangular") return Architecture::Triangular;
  if (name == "clements" || name == "rectangular") return Architecture::Rectangular;
  throw std::invalid_argument("unknown architecture '" + std::string(name) + "'");
}

double wrap_phase(double phi) {
  double w = std::fmod(phi, kTwoPi);
  if (w < 0) w += kTwoPi;
  // fmod of a value just below zero can round up to exactly 2π
  if (w >= kTwoPi) w = 0.0;
  return w;
}

ComplexMatrix embed_givens(const Eigen::Matrix2cd& u2, int mode, int m) {
  if (mode < 0 || mode + 1 >= m) {
    throw std::out_of_range("embed_givens: mode " + std::to_string(mode) + " outside [0, " +
                            std::to_string(m - 2) + "]");
  }
  ComplexMatrix u = ComplexMatrix::Identity(m, m);
  u.block<2, 2>(mode, mode) = u2;
  return u;
}

std::vector<CellPosition> mesh_layout(int m, Architecture a) {
  std::vector<CellPosition> cells;
  cells.reserve(static_cast<std::size_t>(m) * (m - 1) / 2);
  if (a == Architecture::Rectangular) {
    for (int l = 0; l < m; ++l)
      for (int k = l % 2; k + 1 < m; k += 2) cells.push_back({l, k});
  } else {
    for (int k = 0; k + 1 < m; ++k)
      for (int d = 0; d < m - 1 - k; ++d) cells.push_back({k + 2 * d, k});
    std::sort(cells.begin(), cells.end());
  }
  return cells;
}

int num_layers(int m, Architecture a) {
  if (m < 2) return 0;
  return a == Architecture::Rectangular ? m : 2 * m - 3;
}

MeshParameters ideal_mesh(int m, Architecture a) {
  MeshParameters p;
  p.m = m;
  p.architecture = a;
  for (const auto& pos : mesh_layout(m, a)) p.cells.push_back({pos, MZParams{}});
  p.output_phases = Eigen::VectorXd::Zero(m);
  return p;
}

ComplexMatrix reconstruct(const MeshParameters& p) {
  ComplexMatrix u = ComplexMatrix::Identity(p.m, p.m);
  for (const auto& cell : p.cells) apply_on_rows(u, mz_transfer(cell.mz), cell.pos.mode);
  for (int i = 0; i < p.m; ++i) u.row(i) *= std::polar(1.0, p.output_phases(i));
  return u;
}

double unitarity_deviation(const ComplexMatrix& u) {
  return (u.adjoint() * u - ComplexMatrix::Identity(u.cols(), u.cols())).norm();
}

NonUnitaryError::NonUnitaryError(double deviation)
    : std::invalid_argument([deviation] {
        std::ostringstream os;
        os << "matrix is not unitary: ||U^dagger U - I||_F = " << deviation;
        return os.str();
      }()),
      deviation_(deviation) {}

namespace {

constexpr double kPivotEps = 1e-300;

struct Op {
  int mode;
  double psi;
  double theta;
};

// Parameters making column `mode` of the row (a, b) vanish under right
// multiplication by mz_transfer(psi, theta)^†.
Op null_left_column(Complex a, Complex b, int mode) {
  Op op{mode, 2.0 * std::atan2(std::abs(b), std::abs(a)), 0.0};
  if (std::abs(a) > kPivotEps) op.theta = std::arg(a) - std::arg(b) + std::numbers::pi;
  return op;
}

// Parameters making row `mode + 1` of the column (a, b) vanish under left
// multiplication by mz_transfer(psi, theta).
Op null_lower_row(Complex a, Complex b, int mode) {
  Op op{mode, 2.0 * std::atan2(std::abs(a), std::abs(b)), 0.0};
  if (std::abs(a) > kPivotEps) op.theta = std::arg(b) - std::arg(a);
  return op;
}

Eigen::Matrix2cd ideal_mz(const Op& op) { return mz_transfer(MZParams{op.psi, op.theta}); }

// Assigns each cell of a light-ordered sequence to the earliest layer allowed
// by its two modes and checks the result against the canonical layout.
std::vector<CellPosition> pack_layers(const std::vector<Op>& seq, int m, Architecture a) {
  std::vector<int> next_free(m, 0);
  std::vector<CellPosition> out;
  out.reserve(seq.size());
  for (const auto& op : seq) {
    int layer = std::max(next_free[op.mode], next_free[op.mode + 1]);
    if (a == Architecture::Rectangular && (layer % 2) != (op.mode % 2)) ++layer;
    next_free[op.mode] = next_free[op.mode + 1] = layer + 1;
    out.push_back({layer, op.mode});
  }
  auto got = out;
  std::sort(got.begin(), got.end());
  if (got != mesh_layout(m, a)) throw std::logic_error("decompose: nulling sequence left the canonical layout");
  return out;
}

}  // namespace

MeshParameters decompose(const ComplexMatrix& u, Architecture a, double tolerance) {
  if (u.rows() != u.cols() || u.rows() < 2) throw std::invalid_argument("decompose: need a square matrix with m >= 2");
  const double dev = unitarity_deviation(u);
  if (!(dev <= tolerance)) throw NonUnitaryError(dev);

  const int m = static_cast<int>(u.rows());
  ComplexMatrix w = u;
  std::vector<Op> right;  // light order: first element acts first
  std::vector<Op> left;   // nulling order

  auto right_null = [&](int row, int col) {
    Op op = null_left_column(w(row, col), w(row, col + 1), col);
    Eigen::Matrix2cd t = ideal_mz(op).adjoint();
    apply_on_cols(w, t, col);
    right.push_back(op);
  };
  auto left_null = [&](int row, int col) {
    Op op = null_lower_row(w(row - 1, col), w(row, col), row - 1);
    apply_on_rows(w, ideal_mz(op), row - 1);
    left.push_back(op);
  };

  if (a == Architecture::Triangular) {
    for (int r = m - 1; r >= 1; --r)
      for (int k = 0; k < r; ++k) right_null(r, k);
  } else {
    for (int i = 1; i < m; ++i) {
      if (i % 2 == 1) {
        for (int j = 0; j < i; ++j) right_null(m - 1 - j, i - 1 - j);
      } else {
        for (int j = 1; j <= i; ++j) left_null(m - 1 - i + j, j - 1);
      }
    }
  }

  // w = L_p ... L_1 U R_1^† ... R_q^† is diagonal. Move each L^† through D:
  // M(psi, theta)^† diag(d1, d2) = diag(d1', d2') M(psi, theta').
  Eigen::VectorXcd d = w.diagonal();
  std::vector<Op> seq = right;
  std::vector<Op> moved;
  for (auto it = left.rbegin(); it != left.rend(); ++it) {
    const int k = it->mode;
    const Complex d1 = d(k), d2 = d(k + 1);
    const Complex ph = -std::polar(1.0, -it->psi);
    moved.push_back({k, it->psi, std::arg(d1) - std::arg(d2)});
    d(k) = ph * std::polar(1.0, -it->theta) * d2;
    d(k + 1) = ph * d2;
  }
  // U = D M'_1 ... M'_p R_q ... R_1: after the right ops, M'_p acts first.
  seq.insert(seq.end(), moved.begin(), moved.end());

  const auto positions = pack_layers(seq, m, a);
  MeshParameters p;
  p.m = m;
  p.architecture = a;
  p.cells.reserve(seq.size());
  for (std::size_t n = 0; n < seq.size(); ++n)
    p.cells.push_back({positions[n], MZParams{wrap_phase(seq[n].psi), wrap_phase(seq[n].theta)}});
  std::stable_sort(p.cells.begin(), p.cells.end(),
                   [](const MeshCell& x, const MeshCell& y) { return x.pos < y.pos; });
  p.output_phases.resize(m);
  for (int i = 0; i < m; ++i) p.output_phases(i) = wrap_phase(std::arg(d(i)));
  return p;
}

ComplexMatrix haar_random(int m, std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("haar_random: m must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  ComplexMatrix z(m, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      z(i, j) = Complex(re, im) * kBalancedAmplitude;
    }
  Eigen::HouseholderQR<ComplexMatrix> qr(z);
  ComplexMatrix q = qr.householderQ();
  const ComplexMatrix& r = qr.matrixQR();
  for (int j = 0; j < m; ++j) {
    const Complex rjj = r(j, j);
    const double mag = std::abs(rjj);
    if (mag > 0) q.col(j) *= rjj / mag;
  }
  return q;
}

MeshParameters uniform_phase_random(int m, Architecture a, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  MeshParameters p = ideal_mesh(m, a);
  for (auto& cell : p.cells) {
    cell.mz.psi = phase(rng);
    cell.mz.theta = phase(rng);
  }
  return p;
}

ComplexMatrix fourier(int m) {
  ComplexMatrix f(m, m);
  const double norm = 1.0 / std::sqrt(static_cast<double>(m));
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < m; ++k) {
      // reduce jk mod m before scaling to keep the angle small
      const double angle = kTwoPi * static_cast<double>((j * k) % m) / m;
      f(j, k) = std::polar(norm, angle);
    }
  return f;
}

MeshParameters perturb(const MeshParameters& p, const NoiseModel& noise, std::uint64_t trial) {
  if (noise.bs_sigma < 0 || noise.phase_sigma < 0) throw std::invalid_argument("perturb: negative sigma");
  MeshParameters out = p;
  std::mt19937_64 rng = make_stream({noise.seed, trial});
  std::normal_distribution<double> unit(0.0, 1.0);
  auto amplitude = [&]() { return std::clamp(noise.bs_mean + noise.bs_sigma * unit(rng), 0.0, 1.0); };
  for (auto& cell : out.cells) {
    if (noise.bs_sigma > 0) {
      cell.mz.t1 = amplitude();
      cell.mz.t2 = amplitude();
    }
    if (noise.phase_sigma > 0) {
      cell.mz.psi += noise.phase_sigma * unit(rng);
      cell.mz.theta += noise.phase_sigma * unit(rng);
    }
  }
  return out;
}

}  // namespace mzbias
