#pragma once

#include <cstdint>
#include <vector>

namespace beamcal {

// Descriptor for a reproducible draw sequence. Equal (seed, stream_index)
// pairs produce bit-identical sequences on every platform; distinct
// stream_index values under one seed give statistically independent streams.
struct RandomStream {
  std::uint64_t seed = 0;
  std::uint64_t stream_index = 0;
};

/// SplitMix64 finalizer; pure integer ops, identical everywhere.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Derives an independent child stream; used to fan out replicates so that
/// results do not depend on scheduling or worker count.
RandomStream substream(RandomStream parent, std::uint64_t index);

// Counter-based generator: a SplitMix64 walk whose starting point is a hash
// of (seed, stream_index). No hidden state beyond the counter, so streams
// can be recreated cheaply anywhere in a parallel fan-out.
class Rng {
 public:
  explicit Rng(RandomStream stream);

  std::uint64_t next_u64();

  /// Uniform draw strictly inside (0, 1), 53-bit resolution.
  double next_uniform();

  /// Standard normal draw via the inverse-CDF transform; exactly one
  /// uniform is consumed per normal.
  double next_normal();

  /// Uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n);

 private:
  std::uint64_t state_;
};

/// Convenience: `count` i.i.d. standard normal draws from the stream.
std::vector<double> standard_normal_draws(RandomStream stream, std::size_t count);

// Deterministic block-parallel trial runner. Trials are split into
// fixed-size blocks; block b draws from substream(stream, b) and the
// per-block results are folded in block order, so the totals are identical
// for any worker count. `body(block_rng, trials_in_block, block_acc)` fills
// a per-block accumulator; `merge(total, block_acc)` folds it.
inline constexpr std::size_t kTrialsPerBlock = 16384;

template <class Acc, class Body, class Merge>
Acc run_trial_blocks(RandomStream stream, std::size_t trials, int workers,
                     Body&& body, Merge&& merge);

int default_worker_count();

}  // namespace beamcal

#include "beamcal/random_impl.hpp"
