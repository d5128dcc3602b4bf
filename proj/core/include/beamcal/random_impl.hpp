#pragma once

#include <atomic>
#include <thread>

namespace beamcal {

template <class Acc, class Body, class Merge>
Acc run_trial_blocks(RandomStream stream, std::size_t trials, int workers,
                     Body&& body, Merge&& merge) {
  const std::size_t blocks = (trials + kTrialsPerBlock - 1) / kTrialsPerBlock;
  std::vector<Acc> partial(blocks);
  if (workers <= 0) workers = default_worker_count();
  const auto run_block = [&](std::size_t b) {
    const std::size_t first = b * kTrialsPerBlock;
    const std::size_t count = std::min(kTrialsPerBlock, trials - first);
    Rng rng(substream(stream, b));
    body(rng, first, count, partial[b]);
  };
  if (workers <= 1 || blocks <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) run_block(b);
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t b = next.fetch_add(1); b < blocks; b = next.fetch_add(1))
        run_block(b);
    };
    std::vector<std::thread> pool;
    const int n = std::min<int>(workers, static_cast<int>(blocks));
    pool.reserve(n);
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  Acc total{};
  for (auto& p : partial) merge(total, p);
  return total;
}

}  // namespace beamcal
