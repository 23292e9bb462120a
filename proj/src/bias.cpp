#include "mzbias/bias.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

#include "mzbias/parallel.hpp"
#include "mzbias/random.hpp"

namespace mzbias {

int default_workers() {
  if (const char* env = std::getenv("MZBIAS_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

double zeta_single(Complex u, Complex u_noisy, Part f) {
  const double a = f == Part::Real ? u.real() : u.imag();
  const double b = f == Part::Real ? u_noisy.real() : u_noisy.imag();
  if (b == 0.0) return a == 0.0 ? 0.0 : 1.0;
  return std::abs(1.0 - 2.0 / (1.0 + std::abs(a / b)));
}

std::string_view to_string(Ensemble e) {
  switch (e) {
    case Ensemble::Haar: return "haar";
    case Ensemble::UniformPhases: return "uniform";
    case Ensemble::Fourier: return "fourier";
    case Ensemble::FixedUnitary: return "file";
  }
  return "?";
}

Ensemble parse_ensemble(std::string_view name) {
  if (name == "haar") return Ensemble::Haar;
  if (name == "uniform") return Ensemble::UniformPhases;
  if (name == "fourier") return Ensemble::Fourier;
  if (name == "file") return Ensemble::FixedUnitary;
  throw std::invalid_argument("unknown ensemble '" + std::string(name) + "'");
}

MeshParameters ensemble_mesh(const ZetaConfig& cfg, std::uint64_t index) {
  const std::uint64_t seed = derive_seed({cfg.noise.seed, index, 0});
  switch (cfg.ensemble) {
    case Ensemble::Haar: return decompose(haar_random(cfg.m, seed), cfg.architecture);
    case Ensemble::UniformPhases: return uniform_phase_random(cfg.m, cfg.architecture, seed);
    case Ensemble::Fourier: return decompose(fourier(cfg.m), cfg.architecture);
    case Ensemble::FixedUnitary:
      if (!cfg.fixed_unitary) throw std::invalid_argument("zeta_map: fixed ensemble without a unitary");
      return decompose(*cfg.fixed_unitary, cfg.architecture);
  }
  throw std::invalid_argument("zeta_map: unknown ensemble");
}

ZetaResult zeta_map(const ZetaConfig& cfg) {
  if (cfg.m < 2 || cfg.n_unitaries < 1 || cfg.n_trials < 1) throw std::invalid_argument("zeta_map: invalid counts");
  const bool single = cfg.ensemble == Ensemble::Fourier || cfg.ensemble == Ensemble::FixedUnitary;
  const int n_unitaries = single ? 1 : cfg.n_unitaries;
  const int m = cfg.m;

  struct Partial {
    Eigen::MatrixXd re, im;
  };
  std::vector<Partial> partial(n_unitaries);
  parallel_for(n_unitaries, cfg.workers, [&](std::size_t k) {
    const MeshParameters mesh = ensemble_mesh(cfg, k);
    const ComplexMatrix u = reconstruct(mesh);
    NoiseModel noise = cfg.noise;
    noise.seed = derive_seed({cfg.noise.seed, k, 1});
    Partial p{Eigen::MatrixXd::Zero(m, m), Eigen::MatrixXd::Zero(m, m)};
    for (int r = 0; r < cfg.n_trials; ++r) {
      const ComplexMatrix noisy = reconstruct(perturb(mesh, noise, r));
      for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i) {
          p.re(i, j) += zeta_single(u(i, j), noisy(i, j), Part::Real);
          p.im(i, j) += zeta_single(u(i, j), noisy(i, j), Part::Imag);
        }
    }
    partial[k] = std::move(p);
  });

  ZetaResult out;
  out.n_unitaries = n_unitaries;
  out.real_mean = Eigen::MatrixXd::Zero(m, m);
  out.imag_mean = Eigen::MatrixXd::Zero(m, m);
  for (const auto& p : partial) {
    out.real_mean += p.re;
    out.imag_mean += p.im;
  }
  const double samples = static_cast<double>(n_unitaries) * cfg.n_trials;
  out.real_mean /= samples;
  out.imag_mean /= samples;
  const double max_re = out.real_mean.maxCoeff(), max_im = out.imag_mean.maxCoeff();
  out.gamma1 = max_re > 0 ? 1.0 / max_re : 0.0;
  out.gamma2 = max_im > 0 ? 1.0 / max_im : 0.0;
  out.zeta = 0.5 * (out.gamma1 * out.real_mean + out.gamma2 * out.imag_mean);
  return out;
}

namespace {

constexpr int kTrialBlock = 32;

std::vector<double> pair_probabilities(const ComplexMatrix& u, const std::vector<FockState>& states) {
  std::vector<double> p;
  p.reserve(states.size() * states.size());
  for (const auto& v : states)
    for (const auto& w : states) p.push_back(transition_probability(u, v, w));
  return p;
}

}  // namespace

BiasMaps multi_photon_bias(const ComplexMatrix& u, Architecture a, const BiasConfig& cfg) {
  if (cfg.photons < 1) throw std::invalid_argument("multi_photon_bias: need at least one photon");
  if (cfg.trials < 2) throw std::invalid_argument("multi_photon_bias: need R >= 2 trials");
  const int m = static_cast<int>(u.rows());
  const MeshParameters mesh = decompose(u, a);
  const ComplexMatrix u0 = reconstruct(mesh);

  BiasMaps out;
  out.states = enumerate_states(m, cfg.photons, true);
  const std::size_t n_states = out.states.size();
  const std::vector<double> p0 = pair_probabilities(u0, out.states);
  const std::size_t n_pairs = p0.size();

  // Sums of the deviations and their squares, reduced in trial order.
  std::vector<double> sum(n_pairs, 0.0), sum_sq(n_pairs, 0.0);
  for (int first = 0; first < cfg.trials; first += kTrialBlock) {
    const int block = std::min(kTrialBlock, cfg.trials - first);
    std::vector<std::vector<double>> probs(block);
    parallel_for(block, cfg.workers, [&](std::size_t b) {
      probs[b] = pair_probabilities(reconstruct(perturb(mesh, cfg.noise, first + b)), out.states);
    });
    for (const auto& p : probs)
      for (std::size_t k = 0; k < n_pairs; ++k) {
        const double d = p[k] - p0[k];
        sum[k] += d;
        sum_sq[k] += d * d;
      }
  }

  const DependencySets deps(m, a);
  out.delta_xi = Eigen::VectorXd::Zero(deps.num_internal());
  out.pairs.reserve(n_pairs);
  const double r = cfg.trials;
  double significance = 0.0;
  int used = 0;
  for (std::size_t v = 0; v < n_states; ++v)
    for (std::size_t w = 0; w < n_states; ++w) {
      const std::size_t k = v * n_states + w;
      const double delta = sum[k] / r;
      const double var = std::max(0.0, (sum_sq[k] - r * delta * delta) / (r - 1.0));
      double sigma = std::sqrt(var);
      if (cfg.spread == SpreadEstimator::StandardError) sigma /= std::sqrt(r);
      out.pairs.push_back({static_cast<int>(v), static_cast<int>(w), p0[k], delta, sigma});
      if (sigma == 0.0) {
        ++out.skipped_pairs;
        continue;
      }
      const double s = std::abs(delta / sigma);
      significance += s;
      ++used;
      const auto params = deps.pair(out.states[v], out.states[w]);
      if (params.empty()) continue;
      const double share = s / static_cast<double>(params.size());
      for (int id : params) out.delta_xi(id) += share;
    }
  out.mean_significance = used > 0 ? significance / used : 0.0;

  out.parameter_counts = deps.internal_counts();
  out.delta_ij = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int id : deps.internal(i, j)) out.delta_ij(i, j) += out.delta_xi(id);
  return out;
}

}  // namespace mzbias
