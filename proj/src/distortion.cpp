// Copyright 2026 The adhoc-css Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "distortion.hpp"

#include <algorithm>
#include <cmath>

#include "common.hpp"
#include "fft.hpp"

namespace acss {

namespace {

constexpr double kSixthOctave = 1.122462048309373;  // 2^(1/6)

double raised_cosine(double frac) {
  frac = std::clamp(frac, 0.0, 1.0);
  return 0.5 - 0.5 * std::cos(kPi * frac);
}

void check_prob(double p, const char* name) {
  require(p >= 0.0 && p <= 1.0, std::string(name) + " must be in [0, 1]");
}

void check_range(const Range& r, const char* name) {
  require(r.lo <= r.hi, std::string(name) + " range is inverted");
}

}  // namespace

void validate(const DistortionPolicy& policy) {
  check_prob(policy.p_bandpass, "p_bandpass");
  check_prob(policy.p_clip, "p_clip");
  check_prob(policy.p_delay, "p_delay");
  check_range(policy.low_cut, "low_cut");
  check_range(policy.high_cut, "high_cut");
  check_range(policy.clip_ratio, "clip_ratio");
  check_range(policy.delay_ms, "delay_ms");
  require(policy.low_cut.lo > 0.0, "low_cut must be positive");
  require(policy.low_cut.hi < policy.high_cut.lo, "low_cut must lie below high_cut");
  require(policy.high_cut.hi < 0.5 * kDefaultSampleRate, "high_cut must lie below Nyquist");
  require(policy.clip_ratio.lo > 0.0 && policy.clip_ratio.hi <= 1.0,
          "clip_ratio must be in (0, 1]");
}

DistortionParams sample_params(const DistortionPolicy& policy, std::mt19937_64& rng) {
  validate(policy);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](const Range& r) { return r.lo + (r.hi - r.lo) * unit(rng); };
  DistortionParams p;
  if (unit(rng) < policy.p_bandpass) {
    const double lo = uniform(policy.low_cut);
    const double hi = uniform(policy.high_cut);
    p.bandpass = BandPass{lo, hi};
  }
  if (unit(rng) < policy.p_clip) p.clip_ratio = uniform(policy.clip_ratio);
  if (unit(rng) < policy.p_delay) p.delay_ms = uniform(policy.delay_ms);
  return p;
}

double bandpass_gain(const BandPass& bp, double f) {
  const double la = bp.low_cut / kSixthOctave, lb = bp.low_cut * kSixthOctave;
  const double ha = bp.high_cut / kSixthOctave, hb = bp.high_cut * kSixthOctave;
  double low = 1.0, high = 1.0;
  if (f <= la) low = 0.0;
  else if (f < lb) low = raised_cosine(std::log2(f / la) * 3.0);
  if (f >= hb) high = 0.0;
  else if (f > ha) high = 1.0 - raised_cosine(std::log2(f / ha) * 3.0);
  return low * high;
}

std::vector<double> bandpass_filter(std::span<const double> x, const BandPass& bp,
                                    int sample_rate) {
  require(bp.low_cut > 0.0 && bp.low_cut < bp.high_cut &&
              bp.high_cut < 0.5 * sample_rate,
          "band-pass cutoffs must satisfy 0 < low_cut < high_cut < Nyquist");
  if (x.empty()) return {};
  const std::size_t n = next_pow2(std::max<std::size_t>(2 * x.size(), 2));
  auto spec = rfft(x, n);
  for (std::size_t k = 0; k < spec.size(); ++k)
    spec[k] *= bandpass_gain(bp, static_cast<double>(k) * sample_rate / n);
  auto y = irfft(spec, n);
  y.resize(x.size());
  return y;
}

std::vector<double> hard_clip(std::span<const double> x, double ratio) {
  require(ratio > 0.0, "clip ratio must be positive");
  const double thr = ratio * peak(x);
  std::vector<double> y(x.begin(), x.end());
  for (double& v : y) v = std::clamp(v, -thr, thr);
  return y;
}

std::vector<double> delay_samples(std::span<const double> x, std::int64_t shift) {
  const auto n = static_cast<std::int64_t>(x.size());
  std::vector<double> y(x.size(), 0.0);
  for (std::int64_t i = 0; i < n; ++i) {
    const std::int64_t src = i - shift;
    if (src >= 0 && src < n) y[i] = x[src];
  }
  return y;
}

AudioClip apply_distortion(const AudioClip& clip, const DistortionParams& params) {
  AudioClip out = clip;
  if (params.bandpass)
    out.samples = bandpass_filter(out.samples, *params.bandpass, clip.sample_rate);
  if (params.clip_ratio) out.samples = hard_clip(out.samples, *params.clip_ratio);
  if (params.delay_ms) {
    const auto shift = static_cast<std::int64_t>(
        std::lround(*params.delay_ms * clip.sample_rate / 1000.0));
    out.samples = delay_samples(out.samples, shift);
  }
  return out;
}

}  // namespace acss
