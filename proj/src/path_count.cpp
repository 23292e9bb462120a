#include "mzbias/path_count.hpp"

#include <stdexcept>
#include <string>

namespace mzbias {

namespace {

int parity_sign(long n) { return n % 2 == 0 ? 1 : -1; }

long exact_quotient(long num, long den, const char* what) {
  if (num % den != 0) throw std::logic_error(std::string(what) + ": non-integral trapezoid index");
  return num / den;
}

void check_mode(int m, int x, const char* what) {
  if (x < 1 || x > m) throw std::out_of_range(std::string(what) + ": mode outside [1, m]");
}

void check_mz_query(int m, int l, int q_first, int q) {
  if (m % 2 == 0) throw std::invalid_argument("no closed form for MZ-to-MZ counts at even m");
  if (l < 1 || l > m) throw std::out_of_range("layer outside [1, m]");
  const int rows = (m - 1) / 2;
  if (q_first < 1 || q_first > rows || q < 1 || q > rows) throw std::out_of_range("cell row outside [1, (m-1)/2]");
}

}  // namespace

BigInt binomial(long n, long k) {
  if (n < 0 || k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  BigInt r = 1;
  for (long t = 1; t <= k; ++t) r = r * (n - k + t) / t;
  return r;
}

BigInt catalan_trapezoid(long s, long a, long b) {
  if (s < 1) throw std::invalid_argument("catalan_trapezoid: s must be >= 1");
  if (a < 0 || b < 0) return 0;
  if (b < s) return binomial(a + b, b);
  if (b <= s + a - 1) return binomial(a + b, b) - binomial(a + b, b - s);
  return 0;
}

TrapezoidIndex rectangular_index(int m, int out, int in) {
  check_mode(m, out, "count_rectangular");
  check_mode(m, in, "count_rectangular");
  // Quantities scaled by 4 so the half-integer terms stay integral.
  const long i = in, j = out;
  const long sigma2 = (1 + 2 * (i + j - m)) > 0 ? 1 : -1;
  const long t2 = 2 * (j - i) + parity_sign(i) + parity_sign(m + j);
  const long s4 = 2 * (m + 2) + 2 * sigma2 * (m - 2 * i + parity_sign(i) + 1);
  const long a4 = 2 * (m - 1) - sigma2 * t2;
  const long b4 = 2 * (m - 1) + sigma2 * t2;
  return {exact_quotient(s4, 4, "count_rectangular"), exact_quotient(a4, 4, "count_rectangular"),
          exact_quotient(b4, 4, "count_rectangular")};
}

BigInt count_rectangular(int m, int out, int in) {
  const auto t = rectangular_index(m, out, in);
  return catalan_trapezoid(t.s, t.a, t.b);
}

BigInt count_triangular(int m, int out, int in) {
  check_mode(m, out, "count_triangular");
  check_mode(m, in, "count_triangular");
  const long n = 2L * m - out - in;
  return binomial(n, m - in) - binomial(n, m);
}

TrapezoidIndex mz_index(int m, int l, int q_first, int q) {
  check_mz_query(m, l, q_first, q);
  // Walk of the upper mode of the visited cells between two walls.
  const long t0 = 2L * q_first - 1;
  const long t = l % 2 == 1 ? 2L * q - 1 : 2L * q;
  const long n = l - 1, d = t - t0;
  const long sigma2 = t0 + t + 1 - m > 0 ? 1 : -1;
  return {exact_quotient(m + 2 + sigma2 * (m - 2 * t0), 2, "count_mz_rectangular"),
          exact_quotient(n - sigma2 * d, 2, "count_mz_rectangular"),
          exact_quotient(n + sigma2 * d, 2, "count_mz_rectangular")};
}

BigInt count_mz_rectangular(int m, int l, int q_first, int q) {
  const auto t = mz_index(m, l, q_first, q);
  if (l == 1) return 0;
  return catalan_trapezoid(t.s, t.a, t.b);
}

BoundaryCounts mz_boundary_counts(int m, int l, int q) {
  check_mz_query(m, l, 1, q);
  BoundaryCounts c;
  const int rows = (m - 1) / 2;
  for (int qf = 1; qf <= rows; ++qf) {
    c.in_count += count_mz_rectangular(m, l, qf, q);
    // Reversing the light direction maps layer l onto m + 1 - l and keeps rows.
    c.out_count += count_mz_rectangular(m, m + 1 - l, qf, q);
  }
  return c;
}

std::string_view to_string(RatioCase c) { return c == RatioCase::Corner11 ? "corner_11" : "edge_1_half_m"; }

RatioCase parse_ratio_case(std::string_view name) {
  if (name == "corner_11") return RatioCase::Corner11;
  if (name == "edge_1_half_m") return RatioCase::EdgeHalf;
  throw std::invalid_argument("unknown ratio case '" + std::string(name) + "'");
}

double asymptotic_log_ratio(int m, RatioCase c) {
  if (m < 4) throw std::invalid_argument("asymptotic_ratio: m must be >= 4");
  if (c == RatioCase::Corner11) return (m - 1.5) * std::log(2.0) - std::log(static_cast<double>(m));
  if (m % 2 != 0) throw std::invalid_argument("asymptotic_ratio: edge case needs even m");
  return kEdgeExponent * m - 1.0;
}

double log_big(const BigInt& x) {
  if (x <= 0) throw std::domain_error("log_big: non-positive argument");
  const long bits = static_cast<long>(boost::multiprecision::msb(x));
  if (bits < 60) return std::log(x.convert_to<double>());
  const long shift = bits - 60;
  const BigInt top = x >> shift;
  return std::log(top.convert_to<double>()) + static_cast<double>(shift) * std::log(2.0);
}

double exact_log_ratio(int m, RatioCase c) {
  if (c == RatioCase::Corner11) return log_big(count_triangular(m, 1, 1)) - log_big(count_rectangular(m, 1, 1));
  if (m % 2 != 0) throw std::invalid_argument("exact_log_ratio: edge case needs even m");
  return log_big(count_triangular(m, m / 2, 1)) - log_big(count_rectangular(m, m / 2, 1));
}

}  // namespace mzbias
