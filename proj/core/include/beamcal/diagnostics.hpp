#pragma once

#include <string>
#include <vector>

#include "beamcal/random.hpp"
#include "beamcal/trace_io.hpp"

namespace beamcal {

struct HistogramBin {
  double bin_lower = 0.0;
  double bin_upper = 0.0;
  std::size_t count = 0;
};

// Top-two reward margin statistics over a set of selection records.
// fraction_below uses a strict inequality against the threshold.
struct MarginReport {
  std::size_t total_selections = 0;
  double margin_threshold = 0.1;
  double fraction_below = 0.0;
  std::vector<HistogramBin> histogram;
  std::size_t skipped_records = 0;  // records with fewer than 2 rewards
};

struct InversionRow {
  std::string problem_id;
  double low_k_reward = 0.0;
  bool low_k_correct = true;
  double high_k_reward = 0.0;
  bool high_k_correct = false;
};

struct InversionTable {
  std::vector<InversionRow> rows;
  std::size_t unmatched_pairs = 0;  // (problem, seed) present at one width only
};

struct SnrEstimate {
  double delta_hat = 0.0;  // mean correct score - mean incorrect score
  double sigma_hat = 0.0;  // pooled within-class standard deviation
  std::size_t n_correct = 0;
  std::size_t n_incorrect = 0;
};

struct LabeledScore {
  double score = 0.0;
  bool correct = false;
};

struct BeamWidthRecommendation {
  int k_hat = 1;
  double n_hat = 2.0;
  bool saturated = false;
  std::vector<std::string> caveats;
};

struct PilotComparison {
  double delta_percent = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::string verdict;  // "widen", "do-not-widen", "inconclusive"
  std::size_t paired_problems = 0;
};

/// Margin = rewards[0] - rewards[1] per record (rewards sorted descending).
MarginReport margin_distribution(const std::vector<SelectionRecord>& records,
                                 double threshold = 0.1, int histogram_bins = 50);

/// Rows for every seed-matched (problem, seed) pair where the low_k run is
/// correct, the high_k run is incorrect and the high_k reward is strictly
/// higher. Requires low_k < high_k.
InversionTable detect_inversions(const std::vector<RunResult>& results, int low_k,
                                 int high_k);

/// delta_hat / sigma_hat from labeled candidate scores; each class needs at
/// least two members.
SnrEstimate estimate_snr(const std::vector<LabeledScore>& labeled);

/// Feeds the SNR estimate through the maximum-useful-pool formula. The
/// caveat list always notes that score dispersion conflates quality
/// variation with scorer noise.
BeamWidthRecommendation recommend_beam_width(const SnrEstimate& estimate);

/// Paired success-rate difference (k_b minus k_a, percent points) with a
/// bootstrap confidence interval over problems; seeds stay paired and
/// per-problem success is the seed-mean. Deterministic given the stream.
PilotComparison pilot_compare(const std::vector<RunResult>& results, int k_a, int k_b,
                              std::size_t resamples, RandomStream stream,
                              double confidence = 0.95);

}  // namespace beamcal
