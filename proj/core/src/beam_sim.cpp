#include "beamcal/beam_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace beamcal {

namespace {

void require_sim_model(const TwoClassScorerModel& model) {
  if (!(model.delta >= 0.0)) throw std::invalid_argument("model: delta must be >= 0");
  if (!(model.sigma >= 0.0)) throw std::invalid_argument("model: sigma must be >= 0");
}

double bias_or_zero(double sigma, int m) {
  return (m >= 2 && sigma > 0.0) ? bias_exact(sigma, m) : 0.0;
}

}  // namespace

CandidatePool sample_pool(const TwoClassScorerModel& model, std::size_t n,
                          RandomStream stream) {
  require_sim_model(model);
  if (n < 1) throw std::invalid_argument("sample_pool: n must be >= 1");
  Rng rng(stream);
  CandidatePool pool;
  pool.correct_index = rng.next_below(n);
  pool.scores.resize(n);
  pool.true_qualities.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double mu = i == pool.correct_index ? model.mu_c() : model.mu_w;
    pool.true_qualities[i] = mu;
    pool.scores[i] = mu + model.sigma * rng.next_normal();
  }
  return pool;
}

std::vector<std::size_t> select_top(const std::vector<double>& scores, std::size_t k) {
  if (k < 1 || k > scores.size())
    throw std::invalid_argument("select_top: k must lie in [1, pool size]");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  order.resize(k);
  return order;
}

std::vector<std::size_t> select_top(const CandidatePool& pool, std::size_t k) {
  return select_top(pool.scores, k);
}

double estimate_sigma_online(const std::vector<double>& scores) {
  if (scores.size() < 2)
    throw std::invalid_argument("estimate_sigma_online: need at least 2 scores");
  const double n = static_cast<double>(scores.size());
  const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) / n;
  double ss = 0.0;
  for (double s : scores) ss += (s - mean) * (s - mean);
  return std::sqrt(ss / (n - 1.0));
}

CorrectedSelection bias_corrected_select(const CandidatePool& pool, std::size_t k,
                                         double sigma_hat) {
  if (pool.scores.empty()) throw std::invalid_argument("bias_corrected_select: empty pool");
  if (k < 1) throw std::invalid_argument("bias_corrected_select: k must be >= 1");
  if (!(sigma_hat >= 0.0))
    throw std::invalid_argument("bias_corrected_select: sigma_hat must be >= 0");

  const std::size_t n = pool.scores.size();
  const std::size_t width = std::min(k, n);
  const double bias = bias_or_zero(sigma_hat, static_cast<int>(n) - 1);
  std::size_t argmax = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (pool.scores[i] > pool.scores[argmax]) argmax = i;
  const double corrected_best = pool.scores[argmax] - bias;
  const double reference = pool.scores[0];

  // Fall back only when the penalized maximum loses to the unselected
  // reference draw AND plain selection would have picked something else.
  if (corrected_best >= reference || argmax == 0) return {select_top(pool, width), false};
  return {std::vector<std::size_t>(width, 0), true};
}

MonteCarloEstimate estimate_overestimation(const TwoClassScorerModel& model, int n,
                                           std::size_t trials, RandomStream stream,
                                           int workers) {
  require_sim_model(model);
  if (n < 3) throw std::invalid_argument("estimate_overestimation: n must be >= 3");
  if (trials < 1) throw std::invalid_argument("estimate_overestimation: trials must be >= 1");

  struct Acc {
    double sum = 0.0;
    double sum_sq = 0.0;
  };
  const int m = n - 1;
  const Acc total = run_trial_blocks<Acc>(
      stream, trials, workers,
      [&](Rng& rng, std::size_t, std::size_t count, Acc& acc) {
        for (std::size_t t = 0; t < count; ++t) {
          double best = -std::numeric_limits<double>::infinity();
          for (int j = 0; j < m; ++j)
            best = std::max(best, model.mu_w + model.sigma * rng.next_normal());
          acc.sum += best;
          acc.sum_sq += best * best;
        }
      },
      [](Acc& a, const Acc& b) {
        a.sum += b.sum;
        a.sum_sq += b.sum_sq;
      });

  const double nt = static_cast<double>(trials);
  const double mean = total.sum / nt;
  const double var = std::max(0.0, (total.sum_sq - nt * mean * mean) / (nt - 1.0));
  return {mean, std::sqrt(var / nt)};
}

MonteCarloEstimate estimate_suboptimal_prob(const TwoClassScorerModel& model, int n,
                                            std::size_t trials, RandomStream stream,
                                            int workers) {
  require_sim_model(model);
  if (!(model.delta > 0.0))
    throw std::invalid_argument("estimate_suboptimal_prob: delta must be > 0");
  if (n < 2) throw std::invalid_argument("estimate_suboptimal_prob: n must be >= 2");
  if (trials < 1) throw std::invalid_argument("estimate_suboptimal_prob: trials must be >= 1");

  const int m = n - 1;
  const std::size_t wins = run_trial_blocks<std::size_t>(
      stream, trials, workers,
      [&](Rng& rng, std::size_t, std::size_t count, std::size_t& acc) {
        for (std::size_t t = 0; t < count; ++t) {
          const double correct = model.mu_c() + model.sigma * rng.next_normal();
          bool incorrect_win = false;
          for (int j = 0; j < m; ++j) {
            const double score = model.mu_w + model.sigma * rng.next_normal();
            if (score >= correct) incorrect_win = true;  // ties count against us
          }
          if (incorrect_win) ++acc;
        }
      },
      [](std::size_t& a, const std::size_t& b) { a += b; });

  const double p = static_cast<double>(wins) / static_cast<double>(trials);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(trials))};
}

namespace {

void validate_config(const BeamConfig& config) {
  if (config.beam_width < 1 || config.beam_width > 64)
    throw std::invalid_argument("BeamConfig: beam_width must lie in [1, 64]");
  if (config.max_depth < 1)
    throw std::invalid_argument("BeamConfig: max_depth must be >= 1");
  if (!(config.continuation_prob >= 0.0 && config.continuation_prob <= 1.0))
    throw std::invalid_argument("BeamConfig: continuation_prob must lie in [0, 1]");
}

}  // namespace

BeamSearchOutcome run_beam_search(const TwoClassScorerModel& model,
                                  const BeamConfig& config, RandomStream stream) {
  require_sim_model(model);
  validate_config(config);
  Rng rng(stream);
  BeamSearchOutcome outcome;

  const int k = config.beam_width;
  if (k == 1) {
    // Single-sample decoding: no pools, no selection; the path stays on the
    // correct branch with continuation_prob per step.
    bool alive = true;
    for (int d = 0; d < config.max_depth && alive; ++d)
      if (config.continuation_prob < 1.0 && rng.next_uniform() >= config.continuation_prob)
        alive = false;
    outcome.success = alive;
    return outcome;
  }

  const std::size_t n = static_cast<std::size_t>(k) * static_cast<std::size_t>(k);
  bool alive = true;          // correct lineage still in the beam
  std::size_t incumbent = 0;  // its rank within the beam
  bool top_is_correct = false;
  std::vector<double> scores(n);

  for (int depth = 1; depth <= config.max_depth; ++depth) {
    // Pool layout is parent-major in beam-rank order; the correct parent's
    // single correct child comes first among its children, so index 0 is
    // always the incumbent path's unselected continuation.
    std::size_t correct_slot = n;  // none
    if (alive) {
      const bool spawned = config.continuation_prob >= 1.0 ||
                           rng.next_uniform() < config.continuation_prob;
      if (spawned)
        correct_slot = incumbent * static_cast<std::size_t>(k);
      else
        alive = false;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double mu = i == correct_slot ? model.mu_c() : model.mu_w;
      scores[i] = mu + model.sigma * rng.next_normal();
    }

    ++outcome.selection_steps;
    bool fell_back = false;
    std::size_t chosen_index = 0;
    if (config.correction == Correction::bias_corrected) {
      const double sigma_hat = estimate_sigma_online(scores);
      const double bias = bias_or_zero(sigma_hat, static_cast<int>(n) - 1);
      std::size_t argmax = 0;
      for (std::size_t i = 1; i < n; ++i)
        if (scores[i] > scores[argmax]) argmax = i;
      fell_back = scores[argmax] - bias < scores[0] && argmax != 0;
    }

    if (fell_back) {
      ++outcome.fallback_steps;
      chosen_index = 0;
      top_is_correct = correct_slot == 0;
      alive = top_is_correct;
      incumbent = 0;  // beam collapses onto the reference path
    } else {
      const auto survivors = select_top(scores, static_cast<std::size_t>(k));
      chosen_index = survivors[0];
      top_is_correct = correct_slot == survivors[0];
      if (alive) {
        const auto pos = std::find(survivors.begin(), survivors.end(), correct_slot);
        if (pos == survivors.end())
          alive = false;
        else
          incumbent = static_cast<std::size_t>(pos - survivors.begin());
      }
    }

    if (config.margin_log_enabled) {
      SelectionRecord rec;
      rec.depth = depth;
      rec.candidate_count = static_cast<int>(n);
      rec.rewards = scores;
      std::vector<bool> correctness(n, false);
      if (correct_slot < n) correctness[correct_slot] = true;
      rec.correctness = std::move(correctness);
      rec.normalize();
      // Rank of the chosen candidate in the descending order.
      std::size_t rank = 0;
      for (std::size_t i = 0; i < n; ++i)
        if (scores[i] > scores[chosen_index] ||
            (scores[i] == scores[chosen_index] && i < chosen_index))
          ++rank;
      rec.selected_rank = static_cast<int>(rank);
      outcome.selection_records.push_back(std::move(rec));
    }
  }

  outcome.success = alive && top_is_correct;
  return outcome;
}

SweepResult sweep_beam_width(const TwoClassScorerModel& model, const std::vector<int>& ks,
                             const BeamConfig& base_config, std::size_t trials,
                             RandomStream stream, int workers,
                             std::vector<SelectionRecord>* margin_log) {
  require_sim_model(model);
  if (trials < 1) throw std::invalid_argument("sweep_beam_width: trials must be >= 1");
  for (int k : ks)
    if (k < 1) throw std::invalid_argument("sweep_beam_width: beam widths must be >= 1");

  struct Acc {
    std::size_t successes = 0;
    std::size_t selection_steps = 0;
    std::size_t fallback_steps = 0;
    std::vector<SelectionRecord> records;
  };

  SweepResult result;
  for (std::size_t cell = 0; cell < ks.size(); ++cell) {
    BeamConfig config = base_config;
    config.beam_width = ks[cell];
    config.margin_log_enabled = base_config.margin_log_enabled && margin_log != nullptr;
    const RandomStream cell_stream = substream(stream, cell);

    Acc total = run_trial_blocks<Acc>(
        cell_stream, trials, workers,
        [&](Rng&, std::size_t first, std::size_t count, Acc& acc) {
          for (std::size_t t = 0; t < count; ++t) {
            auto outcome = run_beam_search(model, config, substream(cell_stream, first + t));
            acc.successes += outcome.success ? 1 : 0;
            acc.selection_steps += outcome.selection_steps;
            acc.fallback_steps += outcome.fallback_steps;
            if (config.margin_log_enabled)
              for (auto& rec : outcome.selection_records)
                acc.records.push_back(std::move(rec));
          }
        },
        [](Acc& a, Acc& b) {
          a.successes += b.successes;
          a.selection_steps += b.selection_steps;
          a.fallback_steps += b.fallback_steps;
          for (auto& rec : b.records) a.records.push_back(std::move(rec));
        });

    SweepCell out;
    out.beam_width = ks[cell];
    out.trials = trials;
    out.seed = stream.seed;
    const double p = static_cast<double>(total.successes) / static_cast<double>(trials);
    out.success_rate = p;
    out.standard_error = std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
    if (config.correction == Correction::bias_corrected)
      out.fell_back_rate = total.selection_steps > 0
                               ? static_cast<double>(total.fallback_steps) /
                                     static_cast<double>(total.selection_steps)
                               : 0.0;
    result.cells.push_back(out);
    if (config.margin_log_enabled && margin_log)
      for (auto& rec : total.records) margin_log->push_back(std::move(rec));
  }
  return result;
}

}  // namespace beamcal
