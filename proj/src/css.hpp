// Copyright 2026 The adhoc-css Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <array>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "audio.hpp"
#include "counting.hpp"
#include "dsp.hpp"
#include "nn/network.hpp"

namespace acss {

struct CssConfig {
  double window_s = 4.0;
  double shift_s = 2.0;
  StftConfig stft;
  bool count_merge = true;  // false skips the speaker-counting gate
  nn::CountHead count_head = nn::CountHead::kVad;
  DecisionRule rule;
  std::uint64_t seed = 0;   // per-window counting channel choice
};

void validate(const CssConfig& cfg, int sample_rate);

// Frame grid of a session. The signal is reflect-padded by fft - hop samples
// on each side (then zero-filled) so that every input sample is covered by
// the full set of overlapping analysis frames. Window w spans frames
// [start(w), start(w) + frames(w)); the last window also takes the closing
// frames that only exist because of the right-hand padding.
struct WindowLayout {
  std::size_t length = 0;         // input samples
  std::size_t window_frames = 0;  // nominal
  std::size_t shift_frames = 0;
  std::size_t needed_frames = 0;  // frames touching the input
  std::size_t num_windows = 0;
  std::size_t total_frames = 0;   // frames spanned by all windows
  bool truncated = false;         // session shorter than one window

  std::size_t start(std::size_t w) const { return w * shift_frames; }
  std::size_t frames(std::size_t w) const;
  std::size_t padded_length(const StftConfig& stft) const;
  static std::size_t pad(const StftConfig& stft) { return stft.fft_size - stft.hop; }
};

WindowLayout make_layout(std::size_t length, const CssConfig& cfg, int sample_rate);

// Reflect pad on the left and right, then zeros up to the padded length of
// the layout.
std::vector<double> pad_for_css(std::span<const double> x, const WindowLayout& layout,
                                const StftConfig& stft);

// Spectrogram of frames [first, first + frames) of a padded signal. Reads
// only samples [first * hop, (first + frames - 1) * hop + fft).
ComplexSpectrogram window_stft(std::span<const double> padded, std::size_t first,
                               std::size_t frames, const StftConfig& stft);

// Posterior SNR of every channel under the summed mask (clipped to 1).
std::vector<double> posterior_snr(const MaskPair& masks,
                                  const std::vector<ComplexSpectrogram>& specs);
std::size_t select_channel(const MaskPair& masks, const std::vector<ComplexSpectrogram>& specs);

// Sum of per-stream Euclidean distances between prev[k] and cur[perm[k]].
double permutation_distance(const std::array<RealGrid, 2>& prev,
                            const std::array<RealGrid, 2>& cur, Permutation perm);
// perm[k] is the current output continuing previous output k. Ties keep the
// identity.
Permutation align_permutation(const std::array<RealGrid, 2>& prev,
                              const std::array<RealGrid, 2>& cur);

// Raised-cosine fade-in weight of frame k of an overlap of n frames. The
// previous window uses 1 - crossfade_in(k, n) over the same frames.
double crossfade_in(std::size_t k, std::size_t n);

struct StitchWindow {
  std::size_t start = 0;                  // first frame on the session grid
  std::array<ComplexGrid, 2> streams;     // per output stream, frames x bins
};

// Cross-fades consecutive windows and reconstructs both streams, trimming
// the hop of left padding and everything past length.
std::array<AudioClip, 2> stitch(const std::vector<StitchWindow>& windows,
                                std::size_t total_frames, std::size_t length,
                                const StftConfig& stft, int sample_rate);

struct WindowContext {
  std::size_t index = 0;
  std::size_t first_frame = 0;
  const std::vector<ComplexSpectrogram>* specs = nullptr;  // per channel
  const MagnitudeTensor* mags = nullptr;
};

struct CountDecision {
  bool multi_speaker = true;
  std::size_t channel = 0;
  nn::Mat head;  // empty for injected decisions
};

using MaskEstimator = std::function<MaskPair(const WindowContext&)>;
using CountDecider = std::function<CountDecision(const WindowContext&, std::mt19937_64&)>;

MaskEstimator model_estimator(const nn::SpatioTemporalNet& sep);
CountDecider model_decider(const nn::SpatioTemporalNet& count, const DecisionRule& rule);
CountDecider forced_decider(bool multi_speaker);

struct WindowResult {
  std::size_t index = 0;
  std::size_t first_frame = 0;
  std::size_t frames = 0;
  std::size_t selected_channel = 0;
  std::vector<double> snr;
  MaskPair masks;                    // model output order
  bool gated = false;                // counting gate evaluated
  bool multi_speaker = true;
  std::size_t count_channel = 0;
  Permutation relative = kIdentityPerm;  // raw output of the previous window -> this one
  Permutation absolute = kIdentityPerm;  // stream k takes raw output absolute[k]
  std::array<RealGrid, 2> raw_mags;      // separated magnitudes, model order (after merge)
  bool truncated = false;
};

struct CssOutput {
  std::array<AudioClip, 2> streams;
  std::vector<WindowResult> windows;
  WindowLayout layout;
};

// Sequential window processor. Each call to process_next consumes one
// window; frames before committed_frames() are final.
class CssSession {
 public:
  CssSession(const MultiChannelRecording& session, MaskEstimator estimator,
             CountDecider decider, const CssConfig& cfg);

  bool finished() const { return next_ >= layout_.num_windows; }
  const WindowResult& process_next();
  std::size_t committed_frames() const;
  const WindowLayout& layout() const { return layout_; }
  const std::vector<WindowResult>& windows() const { return results_; }
  CssOutput finish();

 private:
  CssConfig cfg_;
  int sample_rate_;
  WindowLayout layout_;
  std::vector<std::vector<double>> padded_;
  MaskEstimator estimator_;
  CountDecider decider_;
  std::vector<WindowResult> results_;
  std::vector<StitchWindow> stitch_;
  std::size_t next_ = 0;
};

CssOutput run_css(const MultiChannelRecording& session, const MaskEstimator& estimator,
                  const CountDecider& decider, const CssConfig& cfg);
CssOutput run_css(const MultiChannelRecording& session, const nn::SpatioTemporalNet& sep,
                  const nn::SpatioTemporalNet* count, const CssConfig& cfg);

std::string to_json_line(const WindowResult& w);

// Per-speaker reference streams that follow the channel each window selected.
// device_refs[c][s] is speaker s as observed by device c, on the timeline of
// the session the output came from. Uses the same windows and cross-fades as
// the separated streams, so the references differ from them only by the masks.
std::array<AudioClip, 2> selected_channel_references(
    const CssOutput& out, const std::vector<std::array<AudioClip, 2>>& device_refs,
    const CssConfig& cfg, int sample_rate = kDefaultSampleRate);

// Oracle per-window multi-speaker labels: a window is multi-speaker when it
// holds at least run_length consecutive frames with two active speakers.
// frame_counts is indexed by frames of the unpadded signal.
std::vector<bool> oracle_window_labels(const std::vector<int>& frame_counts,
                                       const WindowLayout& layout, const StftConfig& stft,
                                       std::size_t run_length);

}  // namespace acss
