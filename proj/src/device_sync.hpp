// Copyright 2026 The adhoc-css Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <vector>

#include "audio.hpp"

namespace acss {

struct LagEstimate {
  std::int64_t lag = 0;  // other[n] ~ ref[n - lag]; positive means other lags
  double score = 0.0;    // normalized correlation at the peak, in [-1, 1]
  bool low_confidence = false;
};

struct AlignmentResult {
  std::vector<std::int64_t> lags;  // per channel, reference (channel 0) = 0
  std::vector<double> peak_scores;
  MultiChannelRecording aligned;
  std::size_t offset = 0;  // aligned sample 0 is reference sample offset
};

struct SyncOptions {
  std::int64_t max_lag = 2 * kDefaultSampleRate;
  double score_floor = 0.1;
};

LagEstimate estimate_lag(const AudioClip& ref, const AudioClip& other,
                         std::int64_t max_lag, double score_floor = 0.1);

// Shifts every channel by its negated lag against channel 0 and trims all
// channels to their common support.
AlignmentResult align_session(const MultiChannelRecording& rec,
                              const SyncOptions& opts = {});

// The shift-and-trim step of align_session with known lags.
AlignmentResult apply_lags(const MultiChannelRecording& rec,
                           const std::vector<std::int64_t>& lags);

}  // namespace acss
