// Copyright 2026 The adhoc-css Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "device_sync.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "common.hpp"
#include "fft.hpp"

namespace acss {

LagEstimate estimate_lag(const AudioClip& ref, const AudioClip& other,
                         std::int64_t max_lag, double score_floor) {
  require(max_lag >= 0, "max_lag must be non-negative");
  require(ref.sample_rate == other.sample_rate,
          "lag estimation needs equal sample rates");
  const auto need = static_cast<std::size_t>(2 * max_lag);
  require(ref.size() >= need && other.size() >= need && !ref.empty() &&
              !other.empty(),
          "clips too short for the requested lag range");

  const double norm = std::sqrt(energy(ref.samples) * energy(other.samples));
  LagEstimate est;
  if (norm <= 0.0) {
    est.low_confidence = true;
    return est;
  }
  const auto r = cross_correlate(ref.samples, other.samples,
                                 static_cast<std::size_t>(max_lag));
  // Lowest |lag| wins ties, then the negative side.
  std::size_t best = static_cast<std::size_t>(max_lag);
  for (std::size_t k = 0; k < r.size(); ++k) {
    const auto lag = static_cast<std::int64_t>(k) - max_lag;
    const auto best_lag = static_cast<std::int64_t>(best) - max_lag;
    if (r[k] > r[best] ||
        (r[k] == r[best] && std::llabs(lag) < std::llabs(best_lag)))
      best = k;
  }
  est.lag = static_cast<std::int64_t>(best) - max_lag;
  est.score = std::clamp(r[best] / norm, -1.0, 1.0);
  est.low_confidence = est.score < score_floor;
  return est;
}

AlignmentResult align_session(const MultiChannelRecording& rec,
                              const SyncOptions& opts) {
  require(rec.num_channels() >= 2, "alignment needs at least two channels");
  AlignmentResult out;
  out.lags.assign(rec.num_channels(), 0);
  out.peak_scores.assign(rec.num_channels(), 1.0);
  std::vector<std::size_t> weak;
  for (std::size_t c = 1; c < rec.num_channels(); ++c) {
    const std::int64_t limit = std::min<std::int64_t>(
        opts.max_lag,
        static_cast<std::int64_t>(std::min(rec.channels[0].size(),
                                           rec.channels[c].size()) / 2));
    const auto est = estimate_lag(rec.channels[0], rec.channels[c], limit,
                                  opts.score_floor);
    out.lags[c] = est.lag;
    out.peak_scores[c] = est.score;
    if (est.low_confidence) weak.push_back(c);
  }
  if (!weak.empty()) {
    std::ostringstream msg;
    msg << "cross-correlation below floor " << opts.score_floor << " for channel(s)";
    for (auto c : weak) msg << ' ' << c;
    fail(ErrorCode::kNumeric, msg.str());
  }

  AlignmentResult shifted = apply_lags(rec, out.lags);
  shifted.peak_scores = std::move(out.peak_scores);
  return shifted;
}

AlignmentResult apply_lags(const MultiChannelRecording& rec,
                           const std::vector<std::int64_t>& lags) {
  require(lags.size() == rec.num_channels(), "one lag per channel is required");
  AlignmentResult out;
  out.lags = lags;
  out.peak_scores.assign(rec.num_channels(), 1.0);
  // Channel c sample n + lag_c lines up with reference sample n.
  std::int64_t start = 0;
  std::int64_t end = static_cast<std::int64_t>(rec.channels[0].size());
  for (std::size_t c = 0; c < rec.num_channels(); ++c) {
    start = std::max(start, -out.lags[c]);
    end = std::min(end, static_cast<std::int64_t>(rec.channels[c].size()) - out.lags[c]);
  }
  require(end > start, "channels share no common support after alignment",
          ErrorCode::kNumeric);
  for (std::size_t c = 0; c < rec.num_channels(); ++c) {
    const auto& src = rec.channels[c].samples;
    AudioClip clip;
    clip.sample_rate = rec.channels[c].sample_rate;
    clip.samples.assign(src.begin() + (start + out.lags[c]),
                        src.begin() + (end + out.lags[c]));
    out.aligned.channels.push_back(std::move(clip));
  }
  out.offset = static_cast<std::size_t>(start);
  return out;
}

}  // namespace acss
