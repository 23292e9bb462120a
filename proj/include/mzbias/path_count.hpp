#pragma once

#include <cmath>
#include <string_view>

#include "mzbias/mesh_graph.hpp"

// Closed-form path counts. Mode, layer and row arguments in this header are
// one-based to match the combinatorial formulas; everything else in the
// library is zero-based.

namespace mzbias {

BigInt binomial(long n, long k);

/// Catalan trapezoid C_s(a, b). Requires s >= 1; negative a or b give 0.
BigInt catalan_trapezoid(long s, long a, long b);

struct TrapezoidIndex {
  long s, a, b;
};

/// Trapezoid index of the input `in` -> output `out` count of the
/// rectangular mesh. Throws std::logic_error if the index is not integral.
TrapezoidIndex rectangular_index(int m, int out, int in);

/// Paths from input `in` to output `out`.
BigInt count_rectangular(int m, int out, int in);
BigInt count_triangular(int m, int out, int in);

/// Trapezoid index for paths from the first-layer cell `q_first` to cell `q`
/// of layer `l` in a rectangular mesh of odd size. Rows count cells from the
/// top of their layer.
TrapezoidIndex mz_index(int m, int l, int q_first, int q);

/// Paths between first-layer cell `q_first` and cell (l, q); odd m only.
/// Zero for l = 1.
BigInt count_mz_rectangular(int m, int l, int q_first, int q);

struct BoundaryCounts {
  BigInt in_count;   ///< paths from first-layer cells to (l, q)
  BigInt out_count;  ///< paths from (l, q) to last-layer cells
};
BoundaryCounts mz_boundary_counts(int m, int l, int q);

enum class RatioCase { Corner11, EdgeHalf };
std::string_view to_string(RatioCase c);
RatioCase parse_ratio_case(std::string_view name);

/// log(3/8) + (5/4) log 3.
inline const double kEdgeExponent = std::log(3.0 / 8.0) + 1.25 * std::log(3.0);

/// Natural log of the approximate triangular/rectangular count ratio:
/// 2^{m-3/2}/m for (1, 1) and e^{wm-1} for input 1 -> output m/2.
double asymptotic_log_ratio(int m, RatioCase c);
inline double asymptotic_ratio(int m, RatioCase c) { return std::exp(asymptotic_log_ratio(m, c)); }

/// Natural log of the exact ratio for the same (input, output) pair.
double exact_log_ratio(int m, RatioCase c);

/// Natural log of a positive big integer.
double log_big(const BigInt& x);

}  // namespace mzbias
