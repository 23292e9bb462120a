#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "mzbias/calibration.hpp"

using namespace mzbias;
using std::numbers::pi;

namespace {

// Voltages realizing a target inner phase from the true law.
std::vector<CellVoltages> all_cells(const std::vector<VoltagePhaseLaw>& laws, double target) {
  std::vector<CellVoltages> v(laws.size());
  for (std::size_t k = 0; k < laws.size(); ++k) v[k].v_theta = voltage_for(target, laws[k].theta0, laws[k].alpha);
  return v;
}

void expect_exact(const CalibrationEstimate& e, double tol) {
  for (const auto& err : e.errors) {
    EXPECT_LT(err.theta0, tol);
    EXPECT_LT(err.alpha, tol);
    EXPECT_LT(err.psi0, tol);
    EXPECT_LT(err.beta, tol);
  }
}

}  // namespace

TEST(Laws, RangesAndDeterminism) {
  const auto laws = random_laws(8, 4);
  ASSERT_EQ(laws.size(), 28u);
  for (const auto& l : laws) {
    EXPECT_GE(l.theta0, 0.0);
    EXPECT_LT(l.theta0, pi);
    EXPECT_GE(l.psi0, 0.0);
    EXPECT_LE(l.psi0, pi / 4);
    for (double c : {l.alpha, l.beta}) {
      EXPECT_GE(c, 0.5);
      EXPECT_LE(c, 1.5);
    }
  }
  EXPECT_EQ(random_laws(8, 4)[5].beta, laws[5].beta);
}

TEST(Device, BarCellsKeepLightOnItsMode) {
  const int m = 6;
  const auto laws = random_laws(m, 2);
  SimulatedDevice dev(m, laws);
  const auto v = all_cells(laws, pi / 2);
  for (int in = 0; in < m; ++in) EXPECT_NEAR(dev.measure(v, in)(in), 1.0, 1e-12);
}

TEST(Device, CrossCellsFollowPermutation) {
  // All cells crossed: the mesh reverses the mode order for even m.
  const int m = 6;
  const auto laws = random_laws(m, 5);
  SimulatedDevice dev(m, laws);
  const auto v = all_cells(laws, 0.0);
  for (int in = 0; in < m; ++in) EXPECT_NEAR(dev.measure(v, in)(m - 1 - in), 1.0, 1e-12);
}

TEST(Device, PowerConserved) {
  const auto laws = random_laws(5, 1);
  SimulatedDevice dev(5, laws);
  std::vector<CellVoltages> v(laws.size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = {0.3 * k, 1.1 - 0.1 * k};
  EXPECT_NEAR(dev.measure(v, 2).sum(), 1.0, 1e-12);
  EXPECT_NEAR(dev.measure(v, 1, 4).sum(), 1.0, 1e-12);
  EXPECT_LT(unitarity_deviation(driven_unitary(5, laws, v)), 1e-12);
}

TEST(Device, SingleCellScanFollowsRaisedCosine) {
  const std::vector<VoltagePhaseLaw> laws{{0.7, 1.3, 0.2, 0.9}};
  SimulatedDevice dev(2, laws);
  for (double volts : {0.0, 0.4, 0.9, 1.7}) {
    std::vector<CellVoltages> v{{volts, 0.0}};
    const double theta = 0.7 + 1.3 * volts * volts;
    EXPECT_NEAR(dev.measure(v, 0)(1), 0.5 * (1 + std::cos(2 * theta)), 1e-12);
  }
}

TEST(Device, UnusedCellScanIsFlat) {
  const int m = 4;
  const auto laws = random_laws(m, 3);
  SimulatedDevice dev(m, laws);
  auto v = all_cells(laws, pi / 2);
  const auto& layout = dev.layout();
  const int far = static_cast<int>(std::find(layout.begin(), layout.end(), CellPosition{0, 2}) - layout.begin());
  for (double volts : {0.0, 0.5, 1.0, 2.0}) {
    v[far].v_theta = volts;
    EXPECT_NEAR(dev.measure(v, 0)(0), 1.0, 1e-12);
  }
}

TEST(Device, Validation) {
  EXPECT_THROW(SimulatedDevice(1, {}), std::invalid_argument);
  EXPECT_THROW(SimulatedDevice(3, random_laws(4, 1)), std::invalid_argument);
  SimulatedDevice dev(3, random_laws(3, 1));
  std::vector<CellVoltages> v(3);
  EXPECT_THROW(dev.measure(v, 3), std::out_of_range);
  EXPECT_THROW(dev.measure(v, 1, 1), std::out_of_range);
}

TEST(Device, MeasurementNoiseIsSeeded) {
  const auto laws = random_laws(4, 1);
  std::vector<CellVoltages> v(laws.size());
  SimulatedDevice a(4, laws, 0.01, 9), b(4, laws, 0.01, 9);
  const Eigen::VectorXd x = a.measure(v, 0), y = b.measure(v, 0);
  EXPECT_TRUE((x.array() == y.array()).all());
  EXPECT_GT((x - SimulatedDevice(4, laws).measure(v, 0)).norm(), 0.0);
}

TEST(Fits, RaisedCosineRecoversParameters) {
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(50, 0.0, 3.0);
  for (double phi : {0.1, 1.0, 2.9})
    for (double rate : {0.6, 1.0, 1.4}) {
      const Eigen::VectorXd y = 0.8 * 0.5 * (1 + (2 * phi + 2 * rate * x.array()).cos());
      const SineFit f = fit_raised_cosine(x, y, 0.2, 3.0);
      EXPECT_NEAR(f.rate, rate, 1e-8);
      EXPECT_NEAR(std::remainder(f.phase - phi, pi), 0.0, 1e-8);
      EXPECT_NEAR(f.amplitude, 0.8, 1e-8);
      EXPECT_LT(f.rms, 1e-10);
    }
}

TEST(Fits, FreeSineRecoversParameters) {
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(60, 0.0, 4.0);
  const Eigen::VectorXd y = 0.4 + 0.3 * (2 * 0.9 * x.array() + 1.2).cos();
  const FreeSineFit f = fit_free_sine(x, y, 0.2, 3.0);
  EXPECT_NEAR(f.rate, 0.9, 1e-8);
  EXPECT_NEAR(f.offset, 0.4, 1e-8);
  EXPECT_NEAR(std::remainder(f.phase() - 1.2, 2 * pi), 0.0, 1e-8);
}

TEST(Fits, VoltageInversion) {
  for (double target : {0.0, pi / 4, pi / 2})
    for (double theta0 : {0.0, 1.0, 3.0}) {
      const double v = voltage_for(target, theta0, 0.7);
      EXPECT_GE(v, 0.0);
      EXPECT_NEAR(std::remainder(theta0 + 0.7 * v * v - target, pi), 0.0, 1e-12);
    }
  EXPECT_THROW(voltage_for(0, 0, 0), std::invalid_argument);
}

TEST(Routes, VisitEveryCellOnce) {
  for (int m = 2; m <= 12; ++m) {
    std::vector<int> visits(m * (m - 1) / 2, 0);
    for (const auto& r : calibration_routes(m))
      for (int c : r.cells) ++visits[c];
    for (int v : visits) EXPECT_EQ(v, 1) << "m=" << m;
  }
}

TEST(Routes, ConnectInputToOutput) {
  // Crossing every route cell and barring the rest sends all light from the
  // route input to its output.
  for (int m : {4, 5, 8}) {
    const auto laws = random_laws(m, 7);
    SimulatedDevice dev(m, laws);
    for (const auto& r : calibration_routes(m)) {
      auto v = all_cells(laws, pi / 2);
      for (int c : r.cells) v[c].v_theta = voltage_for(0.0, laws[c].theta0, laws[c].alpha);
      EXPECT_NEAR(dev.measure(v, r.input)(r.output), 1.0, 1e-12);
    }
  }
}

TEST(FitPath, FirstDiagonalIsExact) {
  const int m = 6;
  SimulatedDevice dev(m, random_laws(m, 8));
  std::vector<CellEstimate> est(dev.num_cells());
  std::vector<char> calibrated(dev.num_cells(), 0);
  int order = 0;
  const auto route = calibration_routes(m).front();
  fit_path(dev, route, {}, est, calibrated, order);
  EXPECT_EQ(order, static_cast<int>(route.cells.size()));
  for (int c : route.cells) {
    EXPECT_NEAR(std::remainder(est[c].law.theta0 - dev.truth()[c].theta0, pi), 0.0, 1e-6);
    EXPECT_NEAR(est[c].law.alpha, dev.truth()[c].alpha, 1e-6);
    const double balanced = est[c].law.theta0 + est[c].law.alpha * est[c].v_balanced * est[c].v_balanced;
    EXPECT_NEAR(std::remainder(balanced - pi / 4, pi), 0.0, 1e-12);
  }
  // The last cell of the diagonal is fitted first.
  EXPECT_EQ(est[route.cells.back()].diagonal_order, 0);
}

TEST(Calibrate, NoiselessIsExact) {
  for (int m : {2, 3, 4, 6, 8})
    for (std::uint64_t s = 0; s < 5; ++s) {
      SimulatedDevice dev(m, random_laws(m, 50 + s));
      const CalibrationEstimate e = calibrate(dev);
      expect_exact(e, 1e-6);
      EXPECT_LT(e.max_error(), 1e-6) << "m=" << m << " seed=" << s;
    }
}

TEST(Calibrate, OrdersArePermutations) {
  SimulatedDevice dev(6, random_laws(6, 1));
  const CalibrationEstimate e = calibrate(dev);
  std::vector<int> d, p;
  for (const auto& c : e.cells) {
    d.push_back(c.diagonal_order);
    p.push_back(c.psi_order);
  }
  std::sort(d.begin(), d.end());
  std::sort(p.begin(), p.end());
  for (int k = 0; k < 15; ++k) {
    EXPECT_EQ(d[k], k);
    EXPECT_EQ(p[k], k);
  }
}

TEST(Calibrate, RoutesEveryPermutationElement) {
  const int m = 6;
  SimulatedDevice dev(m, random_laws(m, 12));
  const CalibrationEstimate e = calibrate(dev);
  for (int in = 0; in < m; ++in)
    for (int out = 0; out < m; ++out) EXPECT_GT(dev.measure(route_voltages(e, in, out), in)(out), 0.999);
}

TEST(Calibrate, InvariantUnderVoltageUnits) {
  // Scaling every alpha and beta by c while scanning in units of c leaves the
  // phase estimates unchanged and scales the coefficient estimates by c.
  const int m = 4;
  const double c = 4.0;
  auto laws = random_laws(m, 6);
  SimulatedDevice a(m, laws, 1e-3, 77);
  auto scaled = laws;
  for (auto& l : scaled) {
    l.alpha *= c;
    l.beta *= c;
  }
  SimulatedDevice b(m, scaled, 1e-3, 77);
  ScanSpec spec;
  spec.alpha_unit = c;
  const CalibrationEstimate ea = calibrate(a), eb = calibrate(b, spec);
  for (std::size_t k = 0; k < ea.errors.size(); ++k) {
    EXPECT_NEAR(ea.errors[k].theta0, eb.errors[k].theta0, 1e-9);
    EXPECT_NEAR(ea.errors[k].psi0, eb.errors[k].psi0, 1e-9);
    EXPECT_NEAR(c * ea.errors[k].alpha, eb.errors[k].alpha, 1e-8);
    EXPECT_NEAR(c * ea.errors[k].beta, eb.errors[k].beta, 1e-8);
  }
}

TEST(ErrorMap, ZeroNoiseIsZero) {
  const ErrorMaps maps = calibration_error_map(4, 3, 0.0, 5);
  EXPECT_LT(maps.psi0.maxCoeff(), 1e-6);
  EXPECT_LT(maps.beta.maxCoeff(), 1e-6);
  EXPECT_LT(maps.theta0.maxCoeff(), 1e-6);
  EXPECT_LT(maps.alpha.maxCoeff(), 1e-6);
  EXPECT_EQ(maps.diagonal_order.size(), 6u);
  EXPECT_EQ(maps.psi_order.size(), 6u);
}

TEST(ErrorMap, DeterministicAcrossWorkers) {
  const ErrorMaps a = calibration_error_map(4, 4, 1e-2, 9, {}, 1);
  const ErrorMaps b = calibration_error_map(4, 4, 1e-2, 9, {}, 3);
  EXPECT_TRUE((a.psi0.array() == b.psi0.array()).all());
  EXPECT_TRUE((a.beta.array() == b.beta.array()).all());
  EXPECT_GT(a.psi0.maxCoeff(), 0.0);
  EXPECT_THROW(calibration_error_map(4, 0, 0.0, 1), std::invalid_argument);
}
