#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <cstddef>

#include "beamcal/random.hpp"

using namespace beamcal;

TEST_CASE("standard_normal_draws empty and reproducible") {
  CHECK(standard_normal_draws({1, 0}, 0).empty());
  const auto a = standard_normal_draws({123456789, 7}, 1000);
  const auto b = standard_normal_draws({123456789, 7}, 1000);
  CHECK(a == b);  // bit-identical
  const auto c = standard_normal_draws({123456789, 8}, 1000);
  CHECK(a != c);
}

TEST_CASE("draw moments match the standard normal") {
  const std::size_t n = 1000000;
  Rng rng({2024, 0});
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = rng.next_normal();
    sum += z;
    sum_sq += z * z;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  CHECK(std::fabs(mean) < 0.005);
  CHECK(std::fabs(var - 1.0) < 0.01);
}

TEST_CASE("uniforms stay strictly inside (0, 1)") {
  Rng rng({99, 3});
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.next_uniform();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("distinct stream indices decorrelate") {
  const std::size_t n = 200000;
  Rng a({55, 0}), b({55, 1});
  double sa = 0, sb = 0, sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = a.next_normal(), y = b.next_normal();
    sa += x;
    sb += y;
    sab += x * y;
    saa += x * x;
    sbb += y * y;
  }
  const double corr = (sab / n - (sa / n) * (sb / n)) /
                      std::sqrt((saa / n - (sa / n) * (sa / n)) * (sbb / n - (sb / n) * (sb / n)));
  CHECK(std::fabs(corr) < 0.01);  // ~4.5 sigma at n = 2e5
}

TEST_CASE("empirical variance of the max never exceeds the noise variance") {
  // Var[max of m i.i.d. N(0,1)] <= 1 for every m >= 1.
  const std::size_t trials = 1000000;
  for (int m : {1, 2, 4, 8, 16}) {
    struct Acc {
      double s1 = 0, s2 = 0, s4 = 0;
    };
    const Acc acc = run_trial_blocks<Acc>(
        RandomStream{31337, static_cast<std::uint64_t>(m)}, trials, 2,
        [&](Rng& rng, std::size_t, std::size_t count, Acc& a) {
          for (std::size_t t = 0; t < count; ++t) {
            double best = rng.next_normal();
            for (int j = 1; j < m; ++j) best = std::max(best, rng.next_normal());
            a.s1 += best;
            a.s2 += best * best;
            a.s4 += best * best * best * best;
          }
        },
        [](Acc& a, const Acc& b) {
          a.s1 += b.s1;
          a.s2 += b.s2;
          a.s4 += b.s4;
        });
    const double mean = acc.s1 / trials;
    const double var = acc.s2 / trials - mean * mean;
    const double se = std::sqrt(std::max(0.0, acc.s4 / trials - var * var) / trials);
    CHECK(var <= 1.0 + 3.0 * se);
  }
}

TEST_CASE("run_trial_blocks totals are worker-count independent") {
  auto count_heads = [](int workers) {
    return run_trial_blocks<std::size_t>(
        RandomStream{7, 42}, 100000, workers,
        [](Rng& rng, std::size_t, std::size_t count, std::size_t& acc) {
          for (std::size_t t = 0; t < count; ++t)
            if (rng.next_uniform() < 0.5) ++acc;
        },
        [](std::size_t& a, const std::size_t& b) { a += b; });
  };
  const auto one = count_heads(1);
  CHECK(count_heads(2) == one);
  CHECK(count_heads(4) == one);
}

TEST_CASE("substream derivation is deterministic and hierarchical") {
  const RandomStream parent{11, 4};
  const RandomStream c1 = substream(parent, 0);
  const RandomStream c2 = substream(parent, 1);
  CHECK(c1.seed == c2.seed);
  CHECK(c1.stream_index != c2.stream_index);
  CHECK(substream(parent, 0).seed == c1.seed);
  CHECK(substream(c1, 0).seed != substream(c2, 0).seed);
}
