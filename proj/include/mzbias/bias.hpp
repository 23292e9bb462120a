#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "mzbias/photonics.hpp"
#include "mzbias/unitary.hpp"

namespace mzbias {

enum class Part { Real, Imag };

/// |1 - 2/(1 + |f(u)/f(u_noisy)|)|. A vanishing noisy value gives 1, or 0 if
/// the ideal value vanishes as well.
double zeta_single(Complex u, Complex u_noisy, Part f);

enum class Ensemble { Haar, UniformPhases, Fourier, FixedUnitary };
std::string_view to_string(Ensemble e);
/// Accepts haar, uniform, fourier and file.
Ensemble parse_ensemble(std::string_view name);

struct ZetaConfig {
  int m = 16;
  Architecture architecture = Architecture::Rectangular;
  Ensemble ensemble = Ensemble::Haar;
  int n_unitaries = 200;
  int n_trials = 100;
  NoiseModel noise;  ///< noise.seed is the master seed
  std::optional<ComplexMatrix> fixed_unitary;
  int workers = 1;
};

struct ZetaResult {
  Eigen::MatrixXd zeta;     ///< (gamma1 <Re> + gamma2 <Im>) / 2, in [0, 1]
  Eigen::MatrixXd real_mean;
  Eigen::MatrixXd imag_mean;
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  int n_unitaries = 0;
};

/// Pooled average over unitaries and noise trials. Unitary k and trial r use
/// streams derived from (master seed, k) and (.., r).
ZetaResult zeta_map(const ZetaConfig& cfg);

/// Nominal mesh of unitary `index` of an ensemble.
MeshParameters ensemble_mesh(const ZetaConfig& cfg, std::uint64_t index);

enum class SpreadEstimator {
  SampleStd,      ///< spread of the single-trial deviations
  StandardError,  ///< sample std / sqrt(R)
};

struct PairRecord {
  int v, w;  ///< indices into BiasMaps::states
  double p;
  double delta;
  double sigma;
};

struct BiasMaps {
  std::vector<FockState> states;
  std::vector<PairRecord> pairs;
  Eigen::VectorXd delta_xi;  ///< per internal parameter id
  Eigen::MatrixXd delta_ij;  ///< output i, input j
  Eigen::MatrixXi parameter_counts;
  double mean_significance = 0.0;  ///< mean of |delta|/sigma over used pairs
  int skipped_pairs = 0;           ///< sigma == 0
};

struct BiasConfig {
  int photons = 2;
  int trials = 200;
  NoiseModel noise;
  SpreadEstimator spread = SpreadEstimator::StandardError;
  int workers = 1;
};

/// Significance-weighted attribution of multi-photon probability deviations
/// to phase parameters, over all collision-free input/output pairs.
BiasMaps multi_photon_bias(const ComplexMatrix& u, Architecture a, const BiasConfig& cfg);

}  // namespace mzbias
