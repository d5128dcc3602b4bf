#include <benchmark/benchmark.h>

#include <sstream>

#include "beamcal/beam_sim.hpp"
#include "beamcal/evt_bias.hpp"
#include "beamcal/random.hpp"
#include "beamcal/special_functions.hpp"
#include "beamcal/trace_io.hpp"

namespace {

using namespace beamcal;

void BM_normal_quantile(benchmark::State& state) {
  double p = 0.017;
  for (auto _ : state) {
    benchmark::DoNotOptimize(normal_quantile(p));
    p += 1e-7;
    if (p >= 0.999) p = 0.017;
  }
}
BENCHMARK(BM_normal_quantile);

void BM_normal_draws(benchmark::State& state) {
  Rng rng({42, 0});
  for (auto _ : state) benchmark::DoNotOptimize(rng.next_normal());
}
BENCHMARK(BM_normal_draws);

void BM_bias_exact(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(bias_exact(1.0, m));
}
BENCHMARK(BM_bias_exact)->Arg(3)->Arg(15)->Arg(255);

void BM_expected_max_normal(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(expected_max_normal(m));
}
BENCHMARK(BM_expected_max_normal)->Arg(3)->Arg(50)->Unit(benchmark::kMicrosecond);

void BM_run_beam_search(benchmark::State& state) {
  const TwoClassScorerModel model{2.33, 1.0, 0.0};
  BeamConfig config;
  config.beam_width = static_cast<int>(state.range(0));
  config.max_depth = 6;
  std::uint64_t trial = 0;
  for (auto _ : state) {
    auto outcome = run_beam_search(model, config, {7, trial++});
    benchmark::DoNotOptimize(outcome.success);
  }
}
BENCHMARK(BM_run_beam_search)->Arg(2)->Arg(4)->Unit(benchmark::kMicrosecond);

void BM_parse_beam_select_text(benchmark::State& state) {
  std::string text;
  for (int i = 0; i < 200; ++i) {
    text += "[BEAM_SELECT] depth=" + std::to_string(i % 24 + 1) + " | candidates=12\n";
    text += "  #1: reward=-3.0405 [ANS:C] <- SELECTED\n";
    text += "  #2: reward=-3.0496 [ANS:A] <- REJECTED\n";
  }
  for (auto _ : state) {
    auto records = parse_beam_select_text(text);
    benchmark::DoNotOptimize(records.size());
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_parse_beam_select_text)->Unit(benchmark::kMicrosecond);

void BM_selection_jsonl_roundtrip(benchmark::State& state) {
  std::vector<SelectionRecord> records;
  Rng rng({3, 0});
  for (int i = 0; i < 200; ++i) {
    SelectionRecord rec;
    rec.depth = i % 24 + 1;
    rec.candidate_count = 16;
    for (int j = 0; j < 16; ++j) rec.rewards.push_back(rng.next_normal());
    rec.selected_rank = 0;
    rec.normalize();
    records.push_back(std::move(rec));
  }
  for (auto _ : state) {
    std::ostringstream out;
    write_selection_jsonl(records, out);
    std::istringstream in(out.str());
    auto back = read_selection_jsonl(in);
    benchmark::DoNotOptimize(back.size());
  }
}
BENCHMARK(BM_selection_jsonl_roundtrip)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
