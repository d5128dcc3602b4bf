#include "beamcal/random.hpp"

#include <cstdlib>
#include <thread>

#include "beamcal/special_functions.hpp"

namespace beamcal {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;
constexpr std::uint64_t kStreamSalt = 0x632BE59BD9B4E019ull;
}  // namespace

RandomStream substream(RandomStream parent, std::uint64_t index) {
  return {mix64(parent.seed + kGolden * (parent.stream_index + 1)), index};
}

Rng::Rng(RandomStream stream)
    : state_(mix64(stream.seed + kGolden) ^ mix64(stream.stream_index + kStreamSalt)) {}

std::uint64_t Rng::next_u64() {
  state_ += kGolden;
  return mix64(state_);
}

double Rng::next_uniform() {
  // (x >> 11) in [0, 2^53); the half-step keeps the draw strictly inside (0,1).
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::next_normal() { return normal_quantile(next_uniform()); }

std::uint64_t Rng::next_below(std::uint64_t n) {
  return static_cast<std::uint64_t>(next_uniform() * static_cast<double>(n));
}

std::vector<double> standard_normal_draws(RandomStream stream, std::size_t count) {
  Rng rng(stream);
  std::vector<double> out(count);
  for (auto& x : out) x = rng.next_normal();
  return out;
}

int default_worker_count() {
  if (const char* env = std::getenv("BEAMCAL_WORKERS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<int>(v);
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

}  // namespace beamcal
