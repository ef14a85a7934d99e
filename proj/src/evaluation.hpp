// Copyright 2026 The adhoc-css Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <array>
#include <span>
#include <utility>
#include <vector>

#include "audio.hpp"

namespace acss {

inline constexpr double kMetricCapDb = 60.0;

// Scale-invariant SNR in dB: est is projected onto ref, no mean removal.
// Clamped to [-60, 60]. Throws on length mismatch or a silent reference.
double si_snr(std::span<const double> est, std::span<const double> ref);
inline double si_snr(const AudioClip& est, const AudioClip& ref) {
  return si_snr(est.samples, ref.samples);
}

struct AssignmentScore {
  std::vector<double> si_snr_db;      // per reference, under the best assignment
  std::vector<std::size_t> stream;    // stream assigned to each reference
  double mean_db = 0.0;
  double identity_mean_db = 0.0;      // stream i -> reference i
};

// Best assignment of two streams to one or two nonzero references.
AssignmentScore best_assignment_si_snr(const std::array<AudioClip, 2>& streams,
                                       const std::vector<AudioClip>& refs);

using Interval = std::pair<std::size_t, std::size_t>;  // [begin, end) samples

// 10 log10(weaker / stronger) of the two streams' energies summed over the
// intervals; floored at -60 dB (also when both are silent).
double duplication_leakage(const std::array<AudioClip, 2>& streams,
                           const std::vector<Interval>& intervals);

struct CountingMetrics {
  double accuracy = 0.0;
  double false_multi_rate = 0.0;   // multi decisions among single-speaker windows
  double false_single_rate = 0.0;  // single decisions among multi-speaker windows
  std::size_t true_multi = 0, true_single = 0, false_multi = 0, false_single = 0;
};

CountingMetrics counting_metrics(const std::vector<bool>& decisions,
                                 const std::vector<bool>& labels);

}  // namespace acss
