#pragma once

namespace beamcal {

// Euler-Mascheroni constant, 17 significant digits.
inline constexpr double kEulerMascheroni = 0.57721566490153286;
inline constexpr double kEulerNumber = 2.7182818284590452;

/// Standard normal CDF. Absolute error below 1e-14. Throws on non-finite input.
double normal_cdf(double x);

/// Standard normal density.
double normal_pdf(double x);

/// Standard normal quantile function (inverse CDF) for p in (0, 1).
/// Rational initial approximation refined by one Halley step against
/// normal_cdf; the round trip normal_cdf(normal_quantile(p)) is exact
/// to ~1e-15. Throws on p outside the open unit interval.
double normal_quantile(double p);

/// E[max of m i.i.d. standard normals], computed by deterministic adaptive
/// quadrature of the order-statistic integral x * m * phi(x) * Phi(x)^(m-1)
/// over [-10, 10]. Relative error well below 1e-6. Throws for m < 1.
double expected_max_normal(int m);

}  // namespace beamcal
