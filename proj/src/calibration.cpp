#include "mzbias/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <unsupported/Eigen/LevenbergMarquardt>

#include "mzbias/mesh_graph.hpp"
#include "mzbias/parallel.hpp"
#include "mzbias/random.hpp"

namespace mzbias {

using std::numbers::pi;

namespace {

double wrap_pi(double x) {
  double w = std::fmod(x, pi);
  if (w < 0) w += pi;
  if (w >= pi) w = 0.0;
  return w;
}

// Distance on the circle of circumference pi.
double distance_mod_pi(double a, double b) {
  const double d = wrap_pi(a - b);
  return std::min(d, pi - d);
}

MZParams cell_params(const VoltagePhaseLaw& law, const CellVoltages& v) {
  MZParams p;
  p.psi = 2.0 * (law.theta0 + law.alpha * v.v_theta * v.v_theta);
  p.theta = 2.0 * (law.psi0 + law.beta * v.v_psi * v.v_psi);
  return p;
}

template <typename Derived>
void drive(int m, const std::vector<CellPosition>& layout, const std::vector<VoltagePhaseLaw>& laws,
           const std::vector<CellVoltages>& v, Eigen::MatrixBase<Derived>& field, int layer_end = -1) {
  if (static_cast<int>(v.size()) != static_cast<int>(laws.size())) throw std::invalid_argument("voltage count mismatch");
  (void)m;
  for (std::size_t k = 0; k < layout.size(); ++k) {
    if (layer_end >= 0 && layout[k].layer >= layer_end) break;
    apply_on_rows(field, mz_transfer(cell_params(laws[k], v[k])), layout[k].mode);
  }
}

int cell_index(const std::vector<CellPosition>& layout, CellPosition pos) {
  auto it = std::lower_bound(layout.begin(), layout.end(), pos);
  if (it == layout.end() || *it != pos) throw std::logic_error("calibration: route leaves the mesh");
  return static_cast<int>(it - layout.begin());
}

}  // namespace

std::vector<VoltagePhaseLaw> random_laws(int m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> theta0(0.0, pi), psi0(0.0, pi / 4), coeff(0.5, 1.5);
  std::vector<VoltagePhaseLaw> laws(static_cast<std::size_t>(m) * (m - 1) / 2);
  for (auto& law : laws) {
    law.theta0 = theta0(rng);
    law.alpha = coeff(rng);
    law.psi0 = psi0(rng);
    law.beta = coeff(rng);
  }
  return laws;
}

ComplexMatrix driven_unitary(int m, const std::vector<VoltagePhaseLaw>& laws, const std::vector<CellVoltages>& v) {
  ComplexMatrix u = ComplexMatrix::Identity(m, m);
  drive(m, mesh_layout(m, Architecture::Rectangular), laws, v, u);
  return u;
}

SimulatedDevice::SimulatedDevice(int m, std::vector<VoltagePhaseLaw> laws, double meas_noise, std::uint64_t seed)
    : m_(m), layout_(mesh_layout(m, Architecture::Rectangular)), laws_(std::move(laws)), meas_noise_(meas_noise),
      rng_(seed) {
  if (m < 2) throw std::invalid_argument("SimulatedDevice: m must be >= 2");
  if (laws_.size() != layout_.size()) throw std::invalid_argument("SimulatedDevice: one law per cell required");
  if (meas_noise < 0) throw std::invalid_argument("SimulatedDevice: negative measurement noise");
}

Eigen::VectorXcd SimulatedDevice::propagate(const std::vector<CellVoltages>& v, const Eigen::VectorXcd& in) const {
  Eigen::VectorXcd field = in;
  drive(m_, layout_, laws_, v, field);
  return field;
}

Eigen::VectorXd SimulatedDevice::detect(const Eigen::VectorXcd& field) {
  Eigen::VectorXd p = field.cwiseAbs2();
  if (meas_noise_ > 0) {
    std::normal_distribution<double> n(0.0, meas_noise_);
    for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = std::max(0.0, p(i) * (1.0 + n(rng_)));
  }
  return p;
}

Eigen::VectorXd SimulatedDevice::measure(const std::vector<CellVoltages>& v, int input) {
  if (input < 0 || input >= m_) throw std::out_of_range("measure: input mode " + std::to_string(input));
  Eigen::VectorXcd in = Eigen::VectorXcd::Zero(m_);
  in(input) = 1.0;
  return detect(propagate(v, in));
}

Eigen::VectorXd SimulatedDevice::measure(const std::vector<CellVoltages>& v, int a, int b) {
  if (a < 0 || a >= m_ || b < 0 || b >= m_ || a == b) throw std::out_of_range("measure: invalid mode pair");
  Eigen::VectorXcd in = Eigen::VectorXcd::Zero(m_);
  in(a) = in(b) = kBalancedAmplitude;
  return detect(propagate(v, in));
}

double CalibrationEstimate::max_error() const {
  double e = 0.0;
  for (const auto& x : errors) e = std::max({e, x.theta0, x.alpha, x.psi0, x.beta});
  return e;
}

namespace {

// Linear least squares of y on [1, cos(2 r x), sin(2 r x)].
Eigen::Vector3d linear_sine(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double rate, double* rss) {
  Eigen::MatrixXd a(x.size(), 3);
  a.col(0).setOnes();
  a.col(1) = (2.0 * rate * x).array().cos();
  a.col(2) = (2.0 * rate * x).array().sin();
  Eigen::Vector3d c = a.colPivHouseholderQr().solve(y);
  if (rss) *rss = (a * c - y).squaredNorm();
  return c;
}

double best_rate(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double rate_min, double rate_max) {
  constexpr int kGrid = 600;
  double best = rate_min, best_rss = std::numeric_limits<double>::infinity();
  for (int g = 0; g <= kGrid; ++g) {
    const double r = rate_min + (rate_max - rate_min) * g / kGrid;
    double rss;
    linear_sine(x, y, r, &rss);
    if (rss < best_rss) {
      best_rss = rss;
      best = r;
    }
  }
  return best;
}

struct RaisedCosine : Eigen::DenseFunctor<double> {
  const Eigen::VectorXd& x;
  const Eigen::VectorXd& y;
  RaisedCosine(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys)
      : DenseFunctor(3, static_cast<int>(xs.size())), x(xs), y(ys) {}
  // p = (K, phi0, rate)
  int operator()(const InputType& p, ValueType& f) const {
    f = (0.5 * p(0) * (1.0 + (2.0 * p(1) + 2.0 * p(2) * x.array()).cos())).matrix() - y;
    return 0;
  }
  int df(const InputType& p, JacobianType& j) const {
    const Eigen::ArrayXd arg = 2.0 * p(1) + 2.0 * p(2) * x.array();
    j.col(0) = 0.5 * (1.0 + arg.cos());
    j.col(1) = -p(0) * arg.sin();
    j.col(2) = -p(0) * x.array() * arg.sin();
    return 0;
  }
};

struct FreeSine : Eigen::DenseFunctor<double> {
  const Eigen::VectorXd& x;
  const Eigen::VectorXd& y;
  FreeSine(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys)
      : DenseFunctor(4, static_cast<int>(xs.size())), x(xs), y(ys) {}
  // p = (c0, s, t, rate)
  int operator()(const InputType& p, ValueType& f) const {
    const Eigen::ArrayXd arg = 2.0 * p(3) * x.array();
    f = (p(0) + p(1) * arg.cos() + p(2) * arg.sin()).matrix() - y;
    return 0;
  }
  int df(const InputType& p, JacobianType& j) const {
    const Eigen::ArrayXd arg = 2.0 * p(3) * x.array();
    j.col(0).setOnes();
    j.col(1) = arg.cos();
    j.col(2) = arg.sin();
    j.col(3) = 2.0 * x.array() * (p(2) * arg.cos() - p(1) * arg.sin());
    return 0;
  }
};

template <typename Functor>
void minimize(Functor& f, Eigen::VectorXd& p, const char* what) {
  Eigen::LevenbergMarquardt<Functor> lm(f);
  lm.setXtol(1e-14);
  lm.setFtol(1e-16);
  lm.setMaxfev(2000);
  const auto status = lm.minimize(p);
  using namespace Eigen::LevenbergMarquardtSpace;
  if (status == ImproperInputParameters || status == TooManyFunctionEvaluation || !p.allFinite()) {
    throw std::runtime_error(std::string(what) + ": fit did not converge");
  }
}

}  // namespace

SineFit fit_raised_cosine(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double rate_min, double rate_max) {
  const double r0 = best_rate(x, y, rate_min, rate_max);
  const Eigen::Vector3d c = linear_sine(x, y, r0, nullptr);
  Eigen::VectorXd p(3);
  p << 2.0 * std::hypot(c(1), c(2)), 0.5 * std::atan2(-c(2), c(1)), r0;
  RaisedCosine f(x, y);
  minimize(f, p, "fit_raised_cosine");
  if (p(0) < 0) {  // K (1 + cos a) with K < 0 is not a power law; flip to the equivalent phase
    throw std::runtime_error("fit_raised_cosine: negative amplitude");
  }
  Eigen::VectorXd res(x.size());
  f(p, res);
  return {p(0), wrap_pi(p(1)), p(2), std::sqrt(res.squaredNorm() / static_cast<double>(x.size()))};
}

double FreeSineFit::phase() const { return std::atan2(-sin_coeff, cos_coeff); }

FreeSineFit fit_free_sine(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double rate_min, double rate_max) {
  const double r0 = best_rate(x, y, rate_min, rate_max);
  const Eigen::Vector3d c = linear_sine(x, y, r0, nullptr);
  Eigen::VectorXd p(4);
  p << c(0), c(1), c(2), r0;
  FreeSine f(x, y);
  minimize(f, p, "fit_free_sine");
  Eigen::VectorXd res(x.size());
  f(p, res);
  return {p(0), p(1), p(2), p(3), std::sqrt(res.squaredNorm() / static_cast<double>(x.size()))};
}

double voltage_for(double target, double theta0, double alpha) {
  if (!(alpha > 0)) throw std::invalid_argument("voltage_for: alpha must be positive");
  return std::sqrt(wrap_pi(target - theta0) / alpha);
}

std::vector<DiagonalRoute> calibration_routes(int m) {
  const auto layout = mesh_layout(m, Architecture::Rectangular);
  std::vector<DiagonalRoute> routes;
  for (int d = 1; d <= m / 2; ++d) {
    DiagonalRoute r{2 * d - 2, m - 1, {}};
    for (int l = 0; l + 2 * d - 2 <= m - 2; ++l) r.cells.push_back(cell_index(layout, {l, l + 2 * d - 2}));
    routes.push_back(std::move(r));
  }
  for (int d = 1; d <= (m - 1) / 2; ++d) {
    DiagonalRoute r{0, m - 2 * d, {}};
    for (int l = 2 * d; l <= m - 1; ++l) r.cells.push_back(cell_index(layout, {l, l - 2 * d}));
    routes.push_back(std::move(r));
  }
  return routes;
}

namespace {

Eigen::VectorXd linspace(int n, double hi) { return Eigen::VectorXd::LinSpaced(n, 0.0, hi); }

// Scans the squared voltage set by `set`, coarse then over one period.
template <typename Set, typename Read, typename Fit>
auto scan_and_fit(const ScanSpec& scan, Set set, Read read, Fit fit) {
  const double rate_lo = scan.alpha_min * scan.alpha_unit, rate_hi = scan.alpha_max * scan.alpha_unit;
  const Eigen::VectorXd xc = linspace(scan.coarse_points, scan.coarse_span * 2.0 * pi / scan.alpha_unit);
  Eigen::VectorXd yc(xc.size());
  for (Eigen::Index i = 0; i < xc.size(); ++i) {
    set(xc(i));
    yc(i) = read();
  }
  const double rate = fit(xc, yc, rate_lo, rate_hi).rate;
  const Eigen::VectorXd x = linspace(scan.points, pi / rate);
  Eigen::VectorXd y(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    set(x(i));
    y(i) = read();
  }
  return fit(x, y, 0.8 * rate, 1.2 * rate);
}

void set_derived_voltages(CellEstimate& c) {
  c.v_bar = voltage_for(pi / 2, c.law.theta0, c.law.alpha);
  c.v_cross = voltage_for(0.0, c.law.theta0, c.law.alpha);
  c.v_balanced = voltage_for(pi / 4, c.law.theta0, c.law.alpha);
}

}  // namespace

void fit_path(SimulatedDevice& dev, const DiagonalRoute& route, const ScanSpec& scan, std::vector<CellEstimate>& est,
              std::vector<char>& calibrated, int& order) {
  const int n = dev.num_cells();
  std::vector<char> on_route(n, 0);
  for (int c : route.cells) on_route[c] = 1;
  for (auto it = route.cells.rbegin(); it != route.cells.rend(); ++it) {
    const int b = *it;
    std::vector<CellVoltages> v(n);
    for (int k = 0; k < n; ++k) {
      if (k == b || !calibrated[k]) continue;
      v[k].v_theta = on_route[k] ? est[k].v_cross : est[k].v_bar;
    }
    const SineFit f = scan_and_fit(
        scan, [&](double x) { v[b].v_theta = std::sqrt(x); },
        [&] { return dev.measure(v, route.input)(route.output); }, fit_raised_cosine);
    est[b].law.theta0 = f.phase;
    est[b].law.alpha = f.rate;
    est[b].theta_residual = f.rms;
    est[b].diagonal_order = order++;
    set_derived_voltages(est[b]);
    calibrated[b] = 1;
  }
}

CalibrationEstimate calibrate(SimulatedDevice& dev, const ScanSpec& scan) {
  const int m = dev.m(), n = dev.num_cells();
  const auto& layout = dev.layout();
  CalibrationEstimate out;
  out.m = m;
  out.layout = layout;
  out.cells.assign(n, {});

  std::vector<char> calibrated(n, 0);
  int order = 0;
  std::vector<int> visits(n, 0);
  for (const auto& route : calibration_routes(m)) {
    for (int c : route.cells) ++visits[c];
    fit_path(dev, route, scan, out.cells, calibrated, order);
  }
  if (std::any_of(visits.begin(), visits.end(), [](int v) { return v != 1; })) {
    throw std::logic_error("calibrate: diagonal routes do not visit every cell exactly once");
  }

  // Outer heaters, one vertical layer at a time: the scanned layer at 50:50,
  // everything else barred, light injected in the pair of the scanned cell.
  std::vector<double> total_phase(n, 0.0);
  const int layers = num_layers(m, Architecture::Rectangular);
  auto layer_voltages = [&](int layer) {
    std::vector<CellVoltages> v(n);
    for (int k = 0; k < n; ++k) v[k].v_theta = layout[k].layer == layer ? out.cells[k].v_balanced : out.cells[k].v_bar;
    return v;
  };
  for (int layer = 0; layer < layers; ++layer) {
    auto v = layer_voltages(layer);
    for (int b = 0; b < n; ++b) {
      if (layout[b].layer != layer) continue;
      const int top = layout[b].mode;
      const FreeSineFit f = scan_and_fit(
          scan,
          [&](double x) {
            for (int k = 0; k < n; ++k)
              if (layout[k].layer == layer) v[k].v_psi = std::sqrt(x);
          },
          [&] { return dev.measure(v, top, top + 1)(top); }, fit_free_sine);
      out.cells[b].law.beta = f.rate;
      out.cells[b].psi_residual = f.rms;
      total_phase[b] = f.phase();
    }
  }

  // Offsets with the outer heaters off. The phase accumulated before the cell
  // is predicted from the estimates of the earlier layers.
  int psi_order = 0;
  for (int layer = 0; layer < layers; ++layer) {
    const auto v = layer_voltages(layer);
    for (int b = 0; b < n; ++b) {
      if (layout[b].layer != layer) continue;
      const int top = layout[b].mode;
      const double p_top = dev.measure(v, top, top + 1)(top);

      std::vector<VoltagePhaseLaw> model(n);
      for (int k = 0; k < n; ++k) model[k] = out.cells[k].law;
      Eigen::VectorXcd field = Eigen::VectorXcd::Zero(m);
      field(top) = field(top + 1) = kBalancedAmplitude;
      drive(m, layout, model, v, field, layer);
      const double chi = std::arg(field(top)) - std::arg(field(top + 1));

      // p_top = (1 + cos(2 psi0 + chi)) / 2 on the estimated device.
      const double a = std::acos(std::clamp(2.0 * p_top - 1.0, -1.0, 1.0));
      const double hint = wrap_pi(0.5 * (total_phase[b] - chi));
      double best = -1.0, best_d = std::numeric_limits<double>::infinity();
      for (double root : {a, -a})
        for (int wind = -3; wind <= 3; ++wind) {
          const double psi0 = 0.5 * (root - chi) + pi * wind;
          if (psi0 < 0.0 || psi0 > pi / 4) continue;
          const double d = distance_mod_pi(psi0, hint);
          if (d < best_d || (d == best_d && psi0 < best)) {
            best_d = d;
            best = psi0;
          }
        }
      if (best < 0.0) {
        // No exact root inside [0, pi/4]: keep the boundary closest in power.
        auto model_power = [&](double psi0) { return 0.5 * (1.0 + std::cos(2.0 * psi0 + chi)); };
        best = std::abs(model_power(0.0) - p_top) <= std::abs(model_power(pi / 4) - p_top) ? 0.0 : pi / 4;
      }
      out.cells[b].law.psi0 = best;
      out.cells[b].psi_order = psi_order++;
    }
  }

  out.errors.resize(n);
  for (int k = 0; k < n; ++k) {
    const auto& t = dev.truth()[k];
    const auto& e = out.cells[k].law;
    out.errors[k] = {distance_mod_pi(e.theta0, t.theta0), std::abs(e.alpha - t.alpha), std::abs(e.psi0 - t.psi0),
                     std::abs(e.beta - t.beta)};
  }
  return out;
}

std::vector<CellVoltages> route_voltages(const CalibrationEstimate& est, int input, int output) {
  const int m = est.m;
  const MeshGraph g(m, Architecture::Rectangular);
  const auto reach = reach_sets(g);
  const auto& layout = est.layout;
  const int n = static_cast<int>(layout.size());
  // Next node met by a mode after cell k (a later cell or the output).
  auto next_on_mode = [&](int k, int mode) {
    for (int j = k + 1; j < n; ++j)
      if (layout[j].mode == mode || layout[j].mode + 1 == mode) return g.cell_node(j);
    return g.output_node(mode);
  };
  std::vector<CellVoltages> v(n);
  for (int k = 0; k < n; ++k) v[k].v_theta = est.cells[k].v_bar;
  if (!reach[g.input_node(input)].outputs.test(output)) throw std::invalid_argument("route_voltages: unreachable output");
  int mode = input;
  for (int k = 0; k < n; ++k) {
    const int top = layout[k].mode;
    if (mode != top && mode != top + 1) continue;
    const int other = mode == top ? top + 1 : top;
    if (!reach[next_on_mode(k, mode)].outputs.test(output)) {
      v[k].v_theta = est.cells[k].v_cross;
      mode = other;
    }
  }
  if (mode != output) throw std::logic_error("route_voltages: routing failed");
  return v;
}

ErrorMaps calibration_error_map(int m, int repeats, double meas_noise, std::uint64_t seed, const ScanSpec& scan,
                                int workers) {
  if (repeats < 1) throw std::invalid_argument("calibration_error_map: need at least one repeat");
  std::vector<CalibrationEstimate> runs(repeats);
  parallel_for(repeats, workers, [&](std::size_t e) {
    SimulatedDevice dev(m, random_laws(m, derive_seed({seed, e, 0})), meas_noise, derive_seed({seed, e, 1}));
    runs[e] = calibrate(dev, scan);
  });
  ErrorMaps maps;
  maps.m = m;
  maps.layout = runs.front().layout;
  const int n = static_cast<int>(maps.layout.size());
  maps.psi0 = maps.beta = maps.theta0 = maps.alpha = Eigen::VectorXd::Zero(n);
  for (const auto& r : runs)
    for (int k = 0; k < n; ++k) {
      maps.psi0(k) += r.errors[k].psi0;
      maps.beta(k) += r.errors[k].beta;
      maps.theta0(k) += r.errors[k].theta0;
      maps.alpha(k) += r.errors[k].alpha;
    }
  for (auto* v : {&maps.psi0, &maps.beta, &maps.theta0, &maps.alpha}) *v /= repeats;
  for (const auto& c : runs.front().cells) {
    maps.diagonal_order.push_back(c.diagonal_order);
    maps.psi_order.push_back(c.psi_order);
  }
  return maps;
}

}  // namespace mzbias
