// stats.hpp -- small numeric helpers: normal quantile/CDF, sample moments.
#pragma once

#include <cmath>
#include <cstddef>
#include <span>

#include "pacr/errors.hpp"

namespace pacr {

inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / 1.4142135623730950488016887242097);
}

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / 2.5066282746310005024157652848110;
}

// Inverse standard normal CDF.  Rational approximation (Acklam's
// coefficients) followed by one Halley refinement step against erfc; the raw
// approximation is already within 1.2e-9 relative error, far inside the
// 4.5e-4 absolute tolerance the bound computations require.
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw RangeError("normal_quantile: p must lie in (0, 1)");

  static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // Halley refinement: e = CDF(x) - p, u = e / pdf(x).
  const double e = normal_cdf(x) - p;
  const double u = e / normal_pdf(x);
  x = x - u / (1.0 + 0.5 * x * u);
  return x;
}

inline double mean_of(std::span<const double> xs) {
  if (xs.empty()) throw EmptyInputError("mean_of: empty input");
  long double acc = 0.0L;
  for (double x : xs) acc += x;
  return static_cast<double>(acc / static_cast<long double>(xs.size()));
}

// Sample standard deviation with the (m - 1) denominator.
inline double sample_stddev(std::span<const double> xs, double mean) {
  if (xs.size() < 2) throw InsufficientSamplesError("sample_stddev: need at least 2 values");
  long double acc = 0.0L;
  for (double x : xs) {
    const long double dlt = static_cast<long double>(x) - mean;
    acc += dlt * dlt;
  }
  acc /= static_cast<long double>(xs.size() - 1);
  return static_cast<double>(std::sqrt(static_cast<double>(acc)));
}

// Standard error of an observed proportion; used for coverage assertions.
inline double binomial_se(double p_hat, std::size_t n) {
  if (n == 0) throw EmptyInputError("binomial_se: n must be positive");
  const double v = p_hat * (1.0 - p_hat) / static_cast<double>(n);
  return std::sqrt(v > 0 ? v : 0.0);
}

}  // namespace pacr
