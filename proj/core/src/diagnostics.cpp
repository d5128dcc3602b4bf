#include "beamcal/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "beamcal/evt_bias.hpp"

namespace beamcal {

MarginReport margin_distribution(const std::vector<SelectionRecord>& records,
                                 double threshold, int histogram_bins) {
  if (!(threshold > 0.0))
    throw std::invalid_argument("margin_distribution: threshold must be > 0");
  if (histogram_bins < 1)
    throw std::invalid_argument("margin_distribution: need at least one bin");

  MarginReport report;
  report.margin_threshold = threshold;
  std::vector<double> margins;
  margins.reserve(records.size());
  for (const auto& rec : records) {
    if (rec.rewards.size() < 2) {
      ++report.skipped_records;
      continue;
    }
    margins.push_back(rec.rewards[0] - rec.rewards[1]);
  }
  report.total_selections = margins.size();
  if (margins.empty()) return report;

  std::size_t below = 0;
  double max_margin = 0.0;
  for (double m : margins) {
    if (m < threshold) ++below;
    max_margin = std::max(max_margin, m);
  }
  report.fraction_below =
      static_cast<double>(below) / static_cast<double>(margins.size());

  // 50 equal-width bins over [0, max margin]; last bin closed on the right.
  const int bins = max_margin > 0.0 ? histogram_bins : 1;
  const double width = max_margin > 0.0 ? max_margin / bins : 1.0;
  report.histogram.resize(bins);
  for (int b = 0; b < bins; ++b) {
    report.histogram[b].bin_lower = b * width;
    report.histogram[b].bin_upper = (b + 1) * width;
  }
  for (double m : margins) {
    int b = static_cast<int>(m / width);
    if (b >= bins) b = bins - 1;
    ++report.histogram[b].count;
  }
  return report;
}

InversionTable detect_inversions(const std::vector<RunResult>& results, int low_k,
                                 int high_k) {
  if (!(low_k < high_k))
    throw std::invalid_argument("detect_inversions: low_k must be < high_k");

  // (problem, seed) -> runs at each width, paired in occurrence order.
  std::map<std::pair<std::string, std::int64_t>,
           std::pair<std::vector<const RunResult*>, std::vector<const RunResult*>>>
      paired;
  for (const auto& r : results) {
    if (r.beam_width == low_k)
      paired[{r.problem_id, r.seed}].first.push_back(&r);
    else if (r.beam_width == high_k)
      paired[{r.problem_id, r.seed}].second.push_back(&r);
  }

  InversionTable table;
  for (const auto& [key, runs] : paired) {
    const auto& [low_runs, high_runs] = runs;
    const std::size_t matched = std::min(low_runs.size(), high_runs.size());
    table.unmatched_pairs += std::max(low_runs.size(), high_runs.size()) - matched;
    for (std::size_t i = 0; i < matched; ++i) {
      const RunResult& lo = *low_runs[i];
      const RunResult& hi = *high_runs[i];
      if (lo.correct && !hi.correct && hi.final_reward > lo.final_reward)
        table.rows.push_back(
            {lo.problem_id, lo.final_reward, true, hi.final_reward, false});
    }
  }
  return table;
}

SnrEstimate estimate_snr(const std::vector<LabeledScore>& labeled) {
  std::vector<double> correct, incorrect;
  for (const auto& item : labeled)
    (item.correct ? correct : incorrect).push_back(item.score);
  if (correct.size() < 2 || incorrect.size() < 2)
    throw std::invalid_argument("estimate_snr: need at least 2 scores per class");

  auto mean = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  const double mean_c = mean(correct);
  const double mean_i = mean(incorrect);
  auto ss = [](const std::vector<double>& v, double m) {
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s;
  };
  const double pooled =
      (ss(correct, mean_c) + ss(incorrect, mean_i)) /
      static_cast<double>(correct.size() + incorrect.size() - 2);

  SnrEstimate est;
  est.delta_hat = mean_c - mean_i;
  est.sigma_hat = std::sqrt(pooled);
  est.n_correct = correct.size();
  est.n_incorrect = incorrect.size();
  return est;
}

BeamWidthRecommendation recommend_beam_width(const SnrEstimate& estimate) {
  BeamWidthRecommendation rec;
  rec.caveats.push_back(
      "score dispersion conflates genuine quality variation with scorer noise; "
      "sigma_hat is a rough proxy, not an estimate of the noise alone");

  if (estimate.delta_hat <= 0.0) {
    rec.k_hat = 1;
    rec.n_hat = 2.0;
    rec.caveats.push_back(
        "estimated quality gap is not positive; search cannot help");
    return rec;
  }
  if (!(estimate.sigma_hat > 0.0)) {
    rec.k_hat = kSaturatedBeamWidth;
    rec.n_hat = std::numeric_limits<double>::infinity();
    rec.saturated = true;
    rec.caveats.push_back(
        "sigma_hat is zero: a noiseless scorer has no useful-width limit; "
        "treat the recommendation as unbounded, not literal");
    return rec;
  }

  const TwoClassScorerModel model{estimate.delta_hat, estimate.sigma_hat, 0.0};
  const PoolLimit limit = max_useful_pool(model);
  rec.n_hat = limit.n_hat;
  rec.saturated = limit.saturated;
  rec.k_hat = max_useful_beam_width(model);
  return rec;
}

PilotComparison pilot_compare(const std::vector<RunResult>& results, int k_a, int k_b,
                              std::size_t resamples, RandomStream stream,
                              double confidence) {
  if (resamples < 100)
    throw std::invalid_argument("pilot_compare: need at least 100 resamples");
  if (!(confidence > 0.0 && confidence < 1.0))
    throw std::invalid_argument("pilot_compare: confidence must lie in (0, 1)");

  // problem -> per-width success counts; per-problem success is the seed mean.
  std::map<std::string, std::pair<std::pair<int, int>, std::pair<int, int>>> by_problem;
  for (const auto& r : results) {
    if (r.beam_width != k_a && r.beam_width != k_b) continue;
    auto& entry = by_problem[r.problem_id];
    auto& side = r.beam_width == k_a ? entry.first : entry.second;
    side.first += r.correct ? 1 : 0;
    side.second += 1;
  }

  std::vector<double> diffs;  // per-problem success difference, percent
  for (const auto& [_, entry] : by_problem) {
    const auto& [a, b] = entry;
    if (a.second == 0 || b.second == 0) continue;
    const double pa = static_cast<double>(a.first) / a.second;
    const double pb = static_cast<double>(b.first) / b.second;
    diffs.push_back(100.0 * (pb - pa));
  }
  if (diffs.empty())
    throw std::invalid_argument("pilot_compare: no problems paired across both widths");

  PilotComparison cmp;
  cmp.paired_problems = diffs.size();
  cmp.delta_percent =
      std::accumulate(diffs.begin(), diffs.end(), 0.0) / static_cast<double>(diffs.size());

  // Percentile bootstrap over problems, deterministic given the stream.
  std::vector<double> boot(resamples);
  Rng rng(stream);
  const std::size_t n = diffs.size();
  for (std::size_t r = 0; r < resamples; ++r) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += diffs[rng.next_below(n)];
    boot[r] = sum / static_cast<double>(n);
  }
  std::sort(boot.begin(), boot.end());
  const double alpha = 0.5 * (1.0 - confidence);
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(resamples - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, resamples - 1);
    const double frac = pos - static_cast<double>(lo);
    return boot[lo] * (1.0 - frac) + boot[hi] * frac;
  };
  cmp.ci_low = quantile(alpha);
  cmp.ci_high = quantile(1.0 - alpha);
  cmp.verdict = cmp.ci_low > 0.0   ? "widen"
                : cmp.ci_high < 0.0 ? "do-not-widen"
                                    : "inconclusive";
  return cmp;
}

}  // namespace beamcal
