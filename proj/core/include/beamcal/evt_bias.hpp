#pragma once

#include <limits>

namespace beamcal {

// Two-class scorer model: one correct-type candidate of true quality
// mu_w + delta against incorrect-type candidates of true quality mu_w,
// scored with i.i.d. N(0, sigma^2) noise. The closed-form operations below
// require delta > 0 and sigma > 0; the simulator relaxes both.
struct TwoClassScorerModel {
  double delta = 1.0;
  double sigma = 1.0;
  double mu_w = 0.0;

  double mu_c() const { return mu_w + delta; }
};

// Gumbel limit of the max of m i.i.d. Gaussian draws, location re-based at
// the incorrect-type mean.
struct GumbelParams {
  double location = 0.0;
  double scale = 0.0;

  double mean() const;
};

// Symmetric expansion geometry: beam width k, pool n = k^2, m = n - 1
// incorrect competitors.
struct PoolGeometry {
  int beam_width = 1;
  int pool_size = 1;
  int incorrect_count = 0;

  static PoolGeometry from_beam_width(int k);
  static PoolGeometry from_pool_size(int n);
};

/// Reported when n_hat would overflow a double (delta^2 / (2 sigma^2) > 700).
inline constexpr int kSaturatedBeamWidth = std::numeric_limits<int>::max();

struct PoolLimit {
  double n_hat = 0.0;  // +inf when saturated
  bool saturated = false;
};

// One configuration's worth of theory outputs.
struct BiasReport {
  double bias_exact = 0.0;
  double bias_approx = 0.0;
  double effective_gap = 0.0;
  double bound = 1.0;
  bool bound_vacuous = false;
  bool criterion_holds = false;
  double n_hat = 0.0;
  int k_hat = 1;
  bool saturated = false;
};

/// Gumbel location/scale for the max of m >= 2 i.i.d. N(0, sigma^2) draws:
/// location = sigma * Phi^-1(1 - 1/m),
/// scale    = sigma * [Phi^-1(1 - 1/(e m)) - Phi^-1(1 - 1/m)].
GumbelParams gev_params(double sigma, int m);

/// Overestimation bias B(sigma, m): the Gumbel-limit mean of the max of m
/// noisy draws above their common true quality. Requires m >= 2.
double bias_exact(double sigma, int m);

/// Large-m simplification sigma * sqrt(2 log m). Requires m >= 2.
double bias_approx(double sigma, int m);

/// Effective quality gap delta - B(sigma, n - 1); may be negative. n >= 3.
double effective_gap(const TwoClassScorerModel& model, int n);

struct SuboptimalBound {
  double probability = 1.0;
  bool vacuous = false;
};

/// Cantelli bound (1 + Delta_eff^2 / (2 sigma^2))^-1 on the probability that
/// the best of n - 1 incorrect candidates outscores the correct one.
/// Vacuous (bound = 1) when the effective gap is not positive. n >= 3.
SuboptimalBound suboptimal_bound(const TwoClassScorerModel& model, int n);

/// True iff delta exceeds the approximate bias sigma * sqrt(2 log(n - 1)),
/// i.e. search over n candidates can beat single-sample decoding. n >= 3.
bool search_benefit_criterion(const TwoClassScorerModel& model, int n);

/// Maximum useful candidate pool n_hat = 1 + exp(delta^2 / (2 sigma^2)),
/// evaluated in log space and saturated past exponent 700.
PoolLimit max_useful_pool(const TwoClassScorerModel& model);

/// k_hat = max(1, floor(sqrt(n_hat))), clamped to kSaturatedBeamWidth when
/// the pool limit saturates.
int max_useful_beam_width(const TwoClassScorerModel& model);

/// Bundles the closed forms for one (model, geometry) configuration.
/// Accepts any pool_size >= 1; the bias is 0 for fewer than two incorrect
/// competitors (single draw, no maximization).
BiasReport bias_report(const TwoClassScorerModel& model, const PoolGeometry& geometry);

}  // namespace beamcal
