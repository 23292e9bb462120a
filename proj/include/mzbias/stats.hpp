#pragma once

#include <vector>

#include <Eigen/Dense>

namespace mzbias {

/// Average ranks (ties share the mean rank), starting at 1.
std::vector<double> ranks(const std::vector<double>& x);

/// Zero when either sample is constant.
double pearson(const std::vector<double>& x, const std::vector<double>& y);
/// Pearson correlation of the average ranks.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

/// Column-major flattening, for correlating matrices element-wise.
template <typename Derived>
std::vector<double> flatten(const Eigen::MatrixBase<Derived>& a) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(a.size()));
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) out.push_back(static_cast<double>(a(i, j)));
  return out;
}

double mean(const std::vector<double>& x);
/// Sample standard deviation (n - 1 denominator).
double sample_std(const std::vector<double>& x);

}  // namespace mzbias
