#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mzbias/unitary.hpp"

// Simulated thermo-optic mesh and its sequential calibration.
//
// Each cell carries two heaters. The inner one sets theta = theta0 + alpha V^2
// and the outer one psi = psi0 + beta V^2. Both enter the transfer matrix
// doubled: the inner heater drives the phase between the beamsplitters with
// 2 theta, the outer one the input phase with 2 psi, so the cross power is
// cos^2(theta).

namespace mzbias {

struct VoltagePhaseLaw {
  double theta0 = 0.0;
  double alpha = 1.0;
  double psi0 = 0.0;
  double beta = 1.0;
};

struct CellVoltages {
  double v_theta = 0.0;
  double v_psi = 0.0;
};

/// Hidden laws: theta0 ~ U[0, pi), psi0 ~ U[0, pi/4], alpha, beta ~ U[0.5, 1.5].
std::vector<VoltagePhaseLaw> random_laws(int m, std::uint64_t seed);

/// Transfer matrix of a rectangular mesh driven by `v` under `laws`.
ComplexMatrix driven_unitary(int m, const std::vector<VoltagePhaseLaw>& laws, const std::vector<CellVoltages>& v);

class SimulatedDevice {
 public:
  SimulatedDevice(int m, std::vector<VoltagePhaseLaw> laws, double meas_noise = 0.0, std::uint64_t seed = 0);

  int m() const { return m_; }
  int num_cells() const { return static_cast<int>(laws_.size()); }
  const std::vector<CellPosition>& layout() const { return layout_; }
  const std::vector<VoltagePhaseLaw>& truth() const { return laws_; }
  double meas_noise() const { return meas_noise_; }

  /// Output powers for light injected in one mode.
  Eigen::VectorXd measure(const std::vector<CellVoltages>& v, int input);
  /// Output powers for a balanced pair (a, b) with zero relative phase.
  Eigen::VectorXd measure(const std::vector<CellVoltages>& v, int a, int b);
  /// Noiseless output amplitudes for an arbitrary input field.
  Eigen::VectorXcd propagate(const std::vector<CellVoltages>& v, const Eigen::VectorXcd& in) const;

 private:
  Eigen::VectorXd detect(const Eigen::VectorXcd& field);

  int m_;
  std::vector<CellPosition> layout_;
  std::vector<VoltagePhaseLaw> laws_;
  double meas_noise_;
  std::mt19937_64 rng_;
};

struct ScanSpec {
  int coarse_points = 25;
  int points = 50;
  /// Largest V^2 of the coarse pre-scan, in units of 2 pi / alpha_unit.
  double coarse_span = 1.0;
  /// Unit of the alpha and beta coefficients. Scaling voltages by 1/s maps
  /// to alpha_unit = s^2.
  double alpha_unit = 1.0;
  double alpha_min = 0.2;
  double alpha_max = 3.0;
};

struct CellEstimate {
  VoltagePhaseLaw law;
  double v_bar = 0.0;
  double v_cross = 0.0;
  double v_balanced = 0.0;
  double theta_residual = 0.0;  ///< rms of the inner-heater fit
  double psi_residual = 0.0;    ///< rms of the outer-heater fit
  int diagonal_order = -1;      ///< position in the inner-heater sequence
  int psi_order = -1;           ///< position in the outer-heater sequence
};

struct CalibrationEstimate {
  int m = 0;
  std::vector<CellPosition> layout;
  std::vector<CellEstimate> cells;
  /// Absolute errors versus truth; theta0 modulo pi.
  std::vector<VoltagePhaseLaw> errors;
  double max_error() const;
};

struct SineFit {
  double amplitude;  ///< K in K (1 + cos(2 phi0 + 2 rate x)) / 2
  double phase;      ///< phi0 in [0, pi)
  double rate;       ///< alpha (x = V^2)
  double rms;
};

/// Fits K (1 + cos(2 phi0 + 2 rate x)) / 2 with rate in [rate_min, rate_max]:
/// grid search of the rate by linear least squares, then Levenberg-Marquardt.
SineFit fit_raised_cosine(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double rate_min, double rate_max);

struct FreeSineFit {
  double offset, cos_coeff, sin_coeff, rate, rms;
  /// phase of c0 + A cos(2 rate x + phase)
  double phase() const;
};
/// Fits c0 + s cos(2 rate x) + t sin(2 rate x).
FreeSineFit fit_free_sine(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double rate_min, double rate_max);

/// Squared voltage putting theta0 + alpha V^2 on target modulo pi.
double voltage_for(double target, double theta0, double alpha);

/// Cells of each calibration diagonal in light order, first loop then second,
/// with their (input, output) modes. Indices refer to mesh_layout(m, Rectangular).
struct DiagonalRoute {
  int input;
  int output;
  std::vector<int> cells;
};
std::vector<DiagonalRoute> calibration_routes(int m);

/// Inner-heater fit of every cell on one route, last cell first. `bar` and
/// `cross` hold the estimates of already calibrated cells.
void fit_path(SimulatedDevice& dev, const DiagonalRoute& route, const ScanSpec& scan,
              std::vector<CellEstimate>& est, std::vector<char>& calibrated, int& order);

CalibrationEstimate calibrate(SimulatedDevice& dev, const ScanSpec& scan = {});

/// Voltages routing `input` to `output` through bar/cross settings.
std::vector<CellVoltages> route_voltages(const CalibrationEstimate& est, int input, int output);

struct ErrorMaps {
  int m = 0;
  std::vector<CellPosition> layout;
  Eigen::VectorXd psi0;   ///< per-cell mean |error|
  Eigen::VectorXd beta;
  Eigen::VectorXd theta0;
  Eigen::VectorXd alpha;
  std::vector<int> diagonal_order;
  std::vector<int> psi_order;
};

/// Mean absolute errors over `repeats` devices with random hidden laws.
/// Repeat e uses streams derived from (seed, e).
ErrorMaps calibration_error_map(int m, int repeats, double meas_noise, std::uint64_t seed, const ScanSpec& scan = {},
                                int workers = 1);

}  // namespace mzbias
