#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "beamcal/evt_bias.hpp"
#include "beamcal/random.hpp"
#include "beamcal/trace_io.hpp"

namespace beamcal {

// One sampled candidate pool: exactly one correct-type candidate (true
// quality mu_c), the rest incorrect-type (mu_w), each scored with fresh
// Gaussian noise.
struct CandidatePool {
  std::vector<double> scores;
  std::size_t correct_index = 0;
  std::vector<double> true_qualities;
};

enum class Correction { none, bias_corrected };

struct BeamConfig {
  int beam_width = 1;     // k in [1, 64]; expansion factor equals k (n = k^2)
  int max_depth = 24;
  Correction correction = Correction::none;
  bool margin_log_enabled = false;
  // Probability per step that the correct lineage's single correct child is
  // produced at all. 1.0 means the policy alone never leaves the correct
  // branch; for k = 1 this is the only failure mode (no selection happens).
  double continuation_prob = 1.0;
};

struct SweepCell {
  int beam_width = 1;
  double success_rate = 0.0;
  double standard_error = 0.0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  std::optional<double> fell_back_rate;  // present under bias correction
};

struct SweepResult {
  std::vector<SweepCell> cells;
};

struct MonteCarloEstimate {
  double value = 0.0;
  double mc_standard_error = 0.0;
};

struct BeamSearchOutcome {
  bool success = false;
  std::vector<SelectionRecord> selection_records;  // only when margin log enabled
  std::size_t selection_steps = 0;
  std::size_t fallback_steps = 0;
};

struct CorrectedSelection {
  std::vector<std::size_t> indices;
  bool fell_back = false;
};

/// Samples a pool of n candidates: one uniformly placed correct-type with
/// score mu_c + eps, n-1 incorrect-type with scores mu_w + eps, all eps
/// i.i.d. N(0, sigma^2). The simulator accepts delta = 0 and sigma = 0.
CandidatePool sample_pool(const TwoClassScorerModel& model, std::size_t n,
                          RandomStream stream);

/// Indices of the k largest scores, sorted by descending score, ties broken
/// toward the lower index. Throws when k exceeds the pool size.
std::vector<std::size_t> select_top(const CandidatePool& pool, std::size_t k);
std::vector<std::size_t> select_top(const std::vector<double>& scores, std::size_t k);

/// Sample standard deviation (n-1 denominator) of a pool's scores; the
/// online sigma proxy of the bias-corrected policy. Conflates quality spread
/// with scorer noise, so it over-estimates sigma whenever delta > 0.
double estimate_sigma_online(const std::vector<double>& scores);

/// Bias-corrected top-k: penalizes the pool maximum by B(sigma_hat, n-1)
/// (0 for pools of size <= 2) and compares it against the unselected
/// reference draw at index 0. Falls back to the reference (replicated to
/// width k) only when the correction would change the plain winner.
CorrectedSelection bias_corrected_select(const CandidatePool& pool, std::size_t k,
                                         double sigma_hat);

/// Mean over trials of max over the n-1 incorrect scores.
MonteCarloEstimate estimate_overestimation(const TwoClassScorerModel& model, int n,
                                           std::size_t trials, RandomStream stream,
                                           int workers = 1);

/// Fraction of trials in which the correct candidate does not strictly
/// attain the pool maximum (ties count as an incorrect win). n >= 2.
MonteCarloEstimate estimate_suboptimal_prob(const TwoClassScorerModel& model, int n,
                                            std::size_t trials, RandomStream stream,
                                            int workers = 1);

// Multi-depth beam search over the two-class worst case. Each step scores a
// pool of k^2 fresh candidates containing at most one correct-type child
// (spawned by the surviving correct lineage); incorrect lineages never
// produce correct children. Selection keeps the top k by score; success
// means the top-ranked terminal path is correct-type. At k = 1 no selection
// occurs and the path stays correct per continuation_prob each step.
BeamSearchOutcome run_beam_search(const TwoClassScorerModel& model,
                                  const BeamConfig& config, RandomStream stream);

/// One success-rate cell per beam width, each from independent replicate
/// streams; deterministic given the master stream for any worker count.
/// Appends selection records to margin_log when provided and enabled.
SweepResult sweep_beam_width(const TwoClassScorerModel& model, const std::vector<int>& ks,
                             const BeamConfig& base_config, std::size_t trials,
                             RandomStream stream, int workers = 1,
                             std::vector<SelectionRecord>* margin_log = nullptr);

}  // namespace beamcal
