// Copyright 2026 The adhoc-css Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <doctest.h>

#include <cmath>

#include "common.hpp"
#include "evaluation.hpp"
#include "support.hpp"

using namespace acss;
using acss::testing::random_signal;

namespace {

AudioClip clip(std::vector<double> x) { return AudioClip(std::move(x), 16000); }

AudioClip scaled(const AudioClip& c, double a) {
  AudioClip out = c;
  for (double& v : out.samples) v *= a;
  return out;
}

AudioClip plus(const AudioClip& a, const AudioClip& b, double wb = 1.0) {
  AudioClip out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.samples[i] += wb * b.samples[i];
  return out;
}

}  // namespace

TEST_CASE("SI-SNR of constructed orthogonal decompositions") {
  // Alternating +-1 noise is orthogonal to a constant-pair reference.
  std::vector<double> ref(10000), noise(10000);
  for (std::size_t i = 0; i < ref.size(); ++i) {
    ref[i] = (i / 2) % 2 ? 1.0 : -1.0;  // +-1 in pairs
    noise[i] = i % 2 ? 1.0 : -1.0;      // alternating, orthogonal to ref
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) dot += ref[i] * noise[i];
  REQUIRE(dot == 0.0);
  const AudioClip r = clip(ref), n = clip(noise);
  // Power ratio 10:1 -> 10 dB.
  CHECK(si_snr(plus(r, n, std::sqrt(0.1)), r) == doctest::Approx(10.0).epsilon(1e-9));
  CHECK(si_snr(plus(scaled(r, 2.0), n, std::sqrt(0.4)), r) == doctest::Approx(10.0).epsilon(1e-9));
  CHECK(si_snr(plus(r, n, 1.0), r) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("SI-SNR caps, scale invariance and errors") {
  const AudioClip r = clip(random_signal(4000, 1));
  CHECK(si_snr(r, r) == kMetricCapDb);
  CHECK(si_snr(scaled(r, 3.0), r) == kMetricCapDb);
  const AudioClip est = plus(r, clip(random_signal(4000, 2)), 0.3);
  for (double a : {0.01, 0.5, 7.0})
    CHECK(si_snr(scaled(est, a), r) == doctest::Approx(si_snr(est, r)).epsilon(1e-10));
  CHECK(si_snr(clip(std::vector<double>(4000, 0.0)), r) == -kMetricCapDb);
  CHECK_THROWS_AS(si_snr(r, clip(std::vector<double>(4000, 0.0))), Error);
  CHECK_THROWS_AS(si_snr(r, clip(random_signal(10, 1))), Error);
}

TEST_CASE("best assignment resolves stream order") {
  const AudioClip a = clip(random_signal(8000, 3)), b = clip(random_signal(8000, 4));
  const AudioClip na = plus(a, clip(random_signal(8000, 5)), 0.1);
  const AudioClip nb = plus(b, clip(random_signal(8000, 6)), 0.2);
  const auto id = best_assignment_si_snr({na, nb}, {a, b});
  const auto sw = best_assignment_si_snr({nb, na}, {a, b});
  CHECK(id.stream == std::vector<std::size_t>{0, 1});
  CHECK(sw.stream == std::vector<std::size_t>{1, 0});
  CHECK(id.mean_db == doctest::Approx(sw.mean_db));
  CHECK(sw.identity_mean_db < sw.mean_db);
  CHECK(id.si_snr_db[0] == doctest::Approx(si_snr(na, a)));
  const auto one = best_assignment_si_snr({clip(std::vector<double>(8000, 0.0)), na}, {a});
  CHECK(one.stream == std::vector<std::size_t>{1});
  CHECK(one.mean_db == doctest::Approx(si_snr(na, a)));
}

TEST_CASE("best assignment is never worse than identity") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const AudioClip a = clip(random_signal(2000, seed)), b = clip(random_signal(2000, seed + 50));
    const AudioClip s0 = plus(a, b, std::sin(seed * 0.3));
    const AudioClip s1 = plus(b, a, std::cos(seed * 0.7));
    const auto r = best_assignment_si_snr({s0, s1}, {a, b});
    CHECK(r.mean_db >= r.identity_mean_db);
  }
}

TEST_CASE("duplication leakage") {
  const AudioClip a = clip(random_signal(6000, 9));
  const AudioClip z = clip(std::vector<double>(6000, 0.0));
  CHECK(duplication_leakage({a, z}, {{0, 6000}}) == -kMetricCapDb);
  CHECK(duplication_leakage({z, z}, {{0, 6000}}) == -kMetricCapDb);
  CHECK(duplication_leakage({a, a}, {{0, 6000}}) == doctest::Approx(0.0));
  CHECK(duplication_leakage({a, scaled(a, 0.1)}, {{0, 3000}, {4000, 6000}}) ==
        doctest::Approx(-20.0));
  CHECK(duplication_leakage({scaled(a, 0.1), a}, {{100, 200}}) == doctest::Approx(-20.0));
  CHECK_THROWS_AS(duplication_leakage({a, a}, {}), Error);
  CHECK_THROWS_AS(duplication_leakage({a, a}, {{0, 7000}}), Error);
}

TEST_CASE("counting metrics match a direct tally") {
  std::mt19937_64 rng(4);
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<bool> d(37), l(37);
    for (std::size_t i = 0; i < 37; ++i) {
      d[i] = coin(rng);
      l[i] = coin(rng);
    }
    std::size_t tally[2][2] = {{0, 0}, {0, 0}};  // [label][decision]
    for (std::size_t i = 0; i < 37; ++i) ++tally[l[i]][d[i]];
    const auto m = counting_metrics(d, l);
    CHECK(m.true_multi == tally[1][1]);
    CHECK(m.false_single == tally[1][0]);
    CHECK(m.false_multi == tally[0][1]);
    CHECK(m.true_single == tally[0][0]);
    CHECK(m.accuracy == doctest::Approx((tally[0][0] + tally[1][1]) / 37.0));
    if (tally[0][0] + tally[0][1])
      CHECK(m.false_multi_rate ==
            doctest::Approx(static_cast<double>(tally[0][1]) / (tally[0][0] + tally[0][1])));
  }
  const std::vector<bool> single(5, false), multi(5, true);
  CHECK(counting_metrics(single, single).accuracy == 1.0);
  CHECK(counting_metrics(multi, single).false_multi_rate == 1.0);
  CHECK(counting_metrics(single, multi).false_single_rate == 1.0);
  CHECK_THROWS_AS(counting_metrics(single, std::vector<bool>(4)), Error);
}
