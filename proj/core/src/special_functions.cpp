#include "beamcal/special_functions.hpp"

#include <cmath>
#include <stdexcept>

#include "beamcal/quadrature.hpp"

namespace beamcal {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752;
constexpr double kInvSqrt2Pi = 0.39894228040143268;
constexpr double kSqrt2Pi = 2.5066282746310002;
}  // namespace

double normal_cdf(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("normal_cdf: non-finite input");
  return 0.5 * std::erfc(-x * kInvSqrt2);
}

double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("normal_quantile: p must lie in (0, 1)");

  // Acklam's rational approximation, |relative error| < 1.2e-9.
  static constexpr double A[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double B[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  static constexpr double C[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double D[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5]) /
        ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q /
        (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5]) /
        ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0);
  }

  // One Halley step against the CDF brings the result to ~1 ulp.
  const double e = normal_cdf(x) - p;
  const double u = e * kSqrt2Pi * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

double expected_max_normal(int m) {
  if (m < 1) throw std::invalid_argument("expected_max_normal: m must be >= 1");
  if (m == 1) return 0.0;
  const double md = static_cast<double>(m);
  auto integrand = [md](double x) {
    return x * md * normal_pdf(x) * std::pow(normal_cdf(x), md - 1.0);
  };
  return integrate_adaptive(integrand, -10.0, 10.0, 1e-13, 1e-12);
}

}  // namespace beamcal
