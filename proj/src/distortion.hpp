// Copyright 2026 The adhoc-css Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <optional>
#include <random>

#include "audio.hpp"

namespace acss {

struct BandPass {
  double low_cut = 0.0;   // Hz
  double high_cut = 0.0;  // Hz
};

struct DistortionParams {
  std::optional<BandPass> bandpass;
  std::optional<double> clip_ratio;
  std::optional<double> delay_ms;

  bool empty() const { return !bandpass && !clip_ratio && !delay_ms; }
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct DistortionPolicy {
  double p_bandpass = 0.40;
  double p_clip = 0.05;
  double p_delay = 0.80;
  Range low_cut{50.0, 200.0};
  Range high_cut{4000.0, 7000.0};
  Range clip_ratio{0.55, 0.9};
  Range delay_ms{-20.0, 20.0};
};

void validate(const DistortionPolicy& policy);

// Each distortion is present independently with its policy probability.
DistortionParams sample_params(const DistortionPolicy& policy, std::mt19937_64& rng);

// Band-pass, then hard clipping at clip_ratio * peak, then an integer-sample
// delay. Output length equals input length.
AudioClip apply_distortion(const AudioClip& clip, const DistortionParams& params);

// Zero-phase gain with raised-cosine transitions one third of an octave wide,
// centred on each cutoff.
double bandpass_gain(const BandPass& bp, double freq_hz);
std::vector<double> bandpass_filter(std::span<const double> x, const BandPass& bp,
                                    int sample_rate);
std::vector<double> hard_clip(std::span<const double> x, double ratio);
std::vector<double> delay_samples(std::span<const double> x, std::int64_t shift);

}  // namespace acss
