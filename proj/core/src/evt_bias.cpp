#include "beamcal/evt_bias.hpp"

#include <cmath>
#include <stdexcept>

#include "beamcal/special_functions.hpp"

namespace beamcal {

namespace {

void require_model(const TwoClassScorerModel& model) {
  if (!(model.delta > 0.0)) throw std::invalid_argument("model: delta must be > 0");
  if (!(model.sigma > 0.0)) throw std::invalid_argument("model: sigma must be > 0");
}

/// B(1, m) for m >= 2; scale homogeneity is exact because callers multiply
/// by sigma once.
double unit_bias_exact(int m) {
  const double md = static_cast<double>(m);
  const double location = normal_quantile(1.0 - 1.0 / md);
  const double upper = normal_quantile(1.0 - 1.0 / (kEulerNumber * md));
  return location + kEulerMascheroni * (upper - location);
}

/// Bias with the m = 1 / m = 0 convention: a single draw (or none) carries
/// no maximization bias.
double bias_or_zero(double sigma, int m) {
  return m >= 2 ? sigma * unit_bias_exact(m) : 0.0;
}

constexpr double kLogSaturationExponent = 700.0;

}  // namespace

double GumbelParams::mean() const { return location + kEulerMascheroni * scale; }

PoolGeometry PoolGeometry::from_beam_width(int k) {
  if (k < 1) throw std::invalid_argument("PoolGeometry: beam_width must be >= 1");
  return {k, k * k, k * k - 1};
}

PoolGeometry PoolGeometry::from_pool_size(int n) {
  if (n < 1) throw std::invalid_argument("PoolGeometry: pool_size must be >= 1");
  const int k = static_cast<int>(std::sqrt(static_cast<double>(n)));
  return {k > 0 ? k : 1, n, n - 1};
}

GumbelParams gev_params(double sigma, int m) {
  if (!(sigma > 0.0)) throw std::invalid_argument("gev_params: sigma must be > 0");
  if (m < 2) throw std::invalid_argument("gev_params: m must be >= 2");
  const double md = static_cast<double>(m);
  const double location = normal_quantile(1.0 - 1.0 / md);
  const double upper = normal_quantile(1.0 - 1.0 / (kEulerNumber * md));
  return {sigma * location, sigma * (upper - location)};
}

double bias_exact(double sigma, int m) {
  if (!(sigma > 0.0)) throw std::invalid_argument("bias_exact: sigma must be > 0");
  if (m < 2) throw std::invalid_argument("bias_exact: m must be >= 2");
  return sigma * unit_bias_exact(m);
}

double bias_approx(double sigma, int m) {
  if (!(sigma > 0.0)) throw std::invalid_argument("bias_approx: sigma must be > 0");
  if (m < 2) throw std::invalid_argument("bias_approx: m must be >= 2");
  return sigma * std::sqrt(2.0 * std::log(static_cast<double>(m)));
}

double effective_gap(const TwoClassScorerModel& model, int n) {
  require_model(model);
  if (n < 3) throw std::invalid_argument("effective_gap: n must be >= 3");
  return model.delta - bias_exact(model.sigma, n - 1);
}

SuboptimalBound suboptimal_bound(const TwoClassScorerModel& model, int n) {
  const double gap = effective_gap(model, n);
  if (!(gap > 0.0)) return {1.0, true};
  const double ratio = gap / model.sigma;
  const double bound = 1.0 / (1.0 + 0.5 * ratio * ratio);
  return {bound < 1.0 ? bound : 1.0, false};
}

bool search_benefit_criterion(const TwoClassScorerModel& model, int n) {
  require_model(model);
  if (n < 3) throw std::invalid_argument("search_benefit_criterion: n must be >= 3");
  return model.delta > bias_approx(model.sigma, n - 1);
}

PoolLimit max_useful_pool(const TwoClassScorerModel& model) {
  require_model(model);
  const double ratio = model.delta / model.sigma;
  const double exponent = 0.5 * ratio * ratio;
  if (exponent > kLogSaturationExponent)
    return {std::numeric_limits<double>::infinity(), true};
  return {1.0 + std::exp(exponent), false};
}

int max_useful_beam_width(const TwoClassScorerModel& model) {
  const PoolLimit limit = max_useful_pool(model);
  if (limit.saturated) return kSaturatedBeamWidth;
  const double root = std::floor(std::sqrt(limit.n_hat));
  if (root >= static_cast<double>(kSaturatedBeamWidth)) return kSaturatedBeamWidth;
  return root < 1.0 ? 1 : static_cast<int>(root);
}

BiasReport bias_report(const TwoClassScorerModel& model, const PoolGeometry& geometry) {
  require_model(model);
  if (geometry.pool_size < 1)
    throw std::invalid_argument("bias_report: pool_size must be >= 1");
  const int m = geometry.pool_size - 1;

  BiasReport report;
  report.bias_exact = bias_or_zero(model.sigma, m);
  report.bias_approx =
      m >= 2 ? bias_approx(model.sigma, m) : 0.0;
  report.effective_gap = model.delta - report.bias_exact;
  report.criterion_holds = model.delta > report.bias_approx;
  if (m < 1) {
    // k = 1: no competitors, no selection, nothing to bound.
    report.bound = 0.0;
    report.bound_vacuous = false;
  } else if (report.effective_gap > 0.0) {
    const double ratio = report.effective_gap / model.sigma;
    report.bound = 1.0 / (1.0 + 0.5 * ratio * ratio);
    report.bound_vacuous = false;
  } else {
    report.bound = 1.0;
    report.bound_vacuous = true;
  }

  const PoolLimit limit = max_useful_pool(model);
  report.n_hat = limit.n_hat;
  report.saturated = limit.saturated;
  report.k_hat = max_useful_beam_width(model);
  return report;
}

}  // namespace beamcal
