// Copyright 2026 The adhoc-css Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "css.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "common.hpp"

namespace acss {

namespace {

std::size_t to_samples(double seconds, int rate) {
  return static_cast<std::size_t>(std::llround(seconds * rate));
}

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

}  // namespace

void validate(const CssConfig& cfg, int sample_rate) {
  validate(cfg.stft);
  validate(cfg.rule);
  require(cfg.window_s > 0.0 && cfg.shift_s > 0.0, "window and shift must be positive",
          ErrorCode::kConfig);
  require(cfg.shift_s < cfg.window_s, "shift must be shorter than the window",
          ErrorCode::kConfig);
  const std::size_t W = to_samples(cfg.window_s, sample_rate);
  const std::size_t S = to_samples(cfg.shift_s, sample_rate);
  require(W % cfg.stft.hop == 0 && S % cfg.stft.hop == 0,
          "window and shift must be whole numbers of STFT hops", ErrorCode::kConfig);
  require(W - S <= S, "window overlap may not exceed the shift", ErrorCode::kConfig);
}

std::size_t WindowLayout::frames(std::size_t w) const {
  if (w + 1 < num_windows) return window_frames;
  return total_frames - start(w);
}

std::size_t WindowLayout::padded_length(const StftConfig& stft) const {
  return (total_frames - 1) * stft.hop + stft.fft_size;
}

WindowLayout make_layout(std::size_t length, const CssConfig& cfg, int sample_rate) {
  validate(cfg, sample_rate);
  const std::size_t pad = WindowLayout::pad(cfg.stft);
  require(length > pad, "session is too short (" + std::to_string(length) + " samples)");
  WindowLayout l;
  l.length = length;
  const std::size_t W = to_samples(cfg.window_s, sample_rate);
  const std::size_t S = to_samples(cfg.shift_s, sample_rate);
  l.window_frames = W / cfg.stft.hop;
  l.shift_frames = S / cfg.stft.hop;
  const std::size_t padded = length + 2 * pad;
  l.needed_frames = padded <= cfg.stft.fft_size
                        ? 1
                        : ceil_div(padded - cfg.stft.fft_size, cfg.stft.hop) + 1;
  l.truncated = length < W;
  l.num_windows = length <= W ? 1 : 1 + ceil_div(length - W, S);
  const std::size_t last_start = (l.num_windows - 1) * l.shift_frames;
  l.total_frames = last_start + std::max(l.window_frames, l.needed_frames - std::min(
                                                                               l.needed_frames,
                                                                               last_start));
  return l;
}

std::vector<double> pad_for_css(std::span<const double> x, const WindowLayout& layout,
                                const StftConfig& stft) {
  require(x.size() == layout.length, "signal length does not match the layout");
  const std::size_t pad = WindowLayout::pad(stft);
  std::vector<double> out = reflect_pad(x, pad, pad);
  out.resize(std::max(out.size(), layout.padded_length(stft)), 0.0);
  return out;
}

ComplexSpectrogram window_stft(std::span<const double> padded, std::size_t first,
                               std::size_t frames, const StftConfig& stft) {
  require(frames >= 1, "window needs at least one frame");
  const std::size_t begin = first * stft.hop;
  const std::size_t end = (first + frames - 1) * stft.hop + stft.fft_size;
  require(end <= padded.size(), "window exceeds the padded signal");
  return acss::stft(padded.subspan(begin, end - begin), stft);
}

std::vector<double> posterior_snr(const MaskPair& masks,
                                  const std::vector<ComplexSpectrogram>& specs) {
  require(!specs.empty(), "channel selection needs at least one channel");
  const RealGrid m = (masks[0] + masks[1]).cwiseMin(1.0);
  std::vector<double> snr;
  for (const auto& s : specs) {
    require(s.data.rows() == m.rows() && s.data.cols() == m.cols(),
            "mask shape does not match the channel spectrogram");
    const RealGrid mag = s.data.cwiseAbs();
    const double speech = (m.array() * mag.array()).square().sum();
    const double noise = ((1.0 - m.array()) * mag.array()).square().sum();
    snr.push_back(speech / (noise + 1e-8));
  }
  return snr;
}

std::size_t select_channel(const MaskPair& masks, const std::vector<ComplexSpectrogram>& specs) {
  const auto snr = posterior_snr(masks, specs);
  std::size_t best = 0;
  for (std::size_t c = 1; c < snr.size(); ++c)
    if (snr[c] > snr[best]) best = c;
  return best;
}

double permutation_distance(const std::array<RealGrid, 2>& prev,
                            const std::array<RealGrid, 2>& cur, Permutation perm) {
  double d = 0.0;
  for (int k = 0; k < 2; ++k) {
    require(prev[k].rows() == cur[perm[k]].rows() && prev[k].cols() == cur[perm[k]].cols(),
            "overlap shapes differ");
    d += (prev[k] - cur[perm[k]]).norm();
  }
  return d;
}

Permutation align_permutation(const std::array<RealGrid, 2>& prev,
                              const std::array<RealGrid, 2>& cur) {
  require(prev[0].rows() > 0, "overlap region is empty");
  const double id = permutation_distance(prev, cur, kIdentityPerm);
  const double sw = permutation_distance(prev, cur, kSwapPerm);
  return sw < id ? kSwapPerm : kIdentityPerm;
}

double crossfade_in(std::size_t k, std::size_t n) {
  return 0.5 - 0.5 * std::cos(kPi * (static_cast<double>(k) + 0.5) / static_cast<double>(n));
}

std::array<AudioClip, 2> stitch(const std::vector<StitchWindow>& windows,
                                std::size_t total_frames, std::size_t length,
                                const StftConfig& stft, int sample_rate) {
  require(!windows.empty(), "nothing to stitch");
  const Eigen::Index bins = static_cast<Eigen::Index>(stft.num_bins());
  auto end_of = [&](std::size_t w) {
    return windows[w].start + static_cast<std::size_t>(windows[w].streams[0].rows());
  };
  for (std::size_t w = 0; w < windows.size(); ++w) {
    const auto& win = windows[w];
    require(win.streams[0].rows() > 0 && win.streams[0].rows() == win.streams[1].rows() &&
                win.streams[0].cols() == bins && win.streams[1].cols() == bins,
            "inconsistent frame counts in window " + std::to_string(w));
    if (w == 0) {
      require(win.start == 0, "gap in window series before window 0");
      continue;
    }
    require(win.start > windows[w - 1].start, "windows out of order at " + std::to_string(w));
    require(win.start <= end_of(w - 1), "gap in window series at window " + std::to_string(w));
    require(w < 2 || win.start >= end_of(w - 2),
            "more than two windows overlap at window " + std::to_string(w));
  }
  require(end_of(windows.size() - 1) == total_frames,
          "gap in window series at the end of the session");
  const std::size_t pad = WindowLayout::pad(stft);
  require((total_frames - 1) * stft.hop + stft.fft_size >= pad + length,
          "window series does not cover the session");

  std::array<ComplexSpectrogram, 2> acc;
  for (auto& a : acc) a.data = ComplexGrid::Zero(static_cast<Eigen::Index>(total_frames), bins);
  for (std::size_t w = 0; w < windows.size(); ++w) {
    const auto& win = windows[w];
    const std::size_t n = static_cast<std::size_t>(win.streams[0].rows());
    std::vector<double> weight(n, 1.0);
    if (w > 0) {
      const std::size_t ov = end_of(w - 1) - win.start;
      for (std::size_t k = 0; k < ov; ++k) weight[k] = crossfade_in(k, ov);
    }
    if (w + 1 < windows.size()) {
      const std::size_t ov = end_of(w) - windows[w + 1].start;
      for (std::size_t k = 0; k < ov; ++k) weight[n - ov + k] = 1.0 - crossfade_in(k, ov);
    }
    for (int s = 0; s < 2; ++s)
      for (std::size_t t = 0; t < n; ++t)
        acc[s].data.row(static_cast<Eigen::Index>(win.start + t)) +=
            weight[t] * win.streams[s].row(static_cast<Eigen::Index>(t));
  }

  std::array<AudioClip, 2> out;
  for (int s = 0; s < 2; ++s) {
    AudioClip full = istft(acc[s], stft, sample_rate);
    out[s].sample_rate = sample_rate;
    out[s].samples.assign(full.samples.begin() + static_cast<std::ptrdiff_t>(pad),
                          full.samples.begin() + static_cast<std::ptrdiff_t>(pad + length));
  }
  return out;
}

MaskEstimator model_estimator(const nn::SpatioTemporalNet& sep) {
  require(sep.config().head == nn::CountHead::kNone, "separation checkpoint has a counting head");
  return [&sep](const WindowContext& ctx) { return sep.forward(*ctx.mags).masks; };
}

CountDecider model_decider(const nn::SpatioTemporalNet& count, const DecisionRule& rule) {
  require(count.config().head != nn::CountHead::kNone, "counting checkpoint has no counting head");
  return [&count, rule](const WindowContext& ctx, std::mt19937_64& rng) {
    CountDecision d;
    d.channel = std::uniform_int_distribution<std::size_t>(0, ctx.mags->num_channels() - 1)(rng);
    MagnitudeTensor one;
    one.channels.push_back(ctx.mags->channels[d.channel]);
    d.head = count_forward(count, one).head;
    d.multi_speaker = decide_multi_speaker(d.head, rule, count.config().head);
    return d;
  };
}

CountDecider forced_decider(bool multi_speaker) {
  return [multi_speaker](const WindowContext&, std::mt19937_64&) {
    CountDecision d;
    d.multi_speaker = multi_speaker;
    return d;
  };
}

CssSession::CssSession(const MultiChannelRecording& session, MaskEstimator estimator,
                       CountDecider decider, const CssConfig& cfg)
    : cfg_(cfg), estimator_(std::move(estimator)), decider_(std::move(decider)) {
  require(session.num_channels() >= 1, "session has no channels");
  for (const auto& ch : session.channels) validate(ch);
  sample_rate_ = session.sample_rate();
  require(estimator_ != nullptr, "no mask estimator");
  require(!cfg_.count_merge || decider_ != nullptr,
          "count merging is enabled but no counting decider was given");
  layout_ = make_layout(session.min_length(), cfg_, sample_rate_);
  for (const auto& ch : session.channels)
    padded_.push_back(pad_for_css(std::span<const double>(ch.samples.data(), layout_.length),
                                  layout_, cfg_.stft));
}

const WindowResult& CssSession::process_next() {
  require(!finished(), "all windows have been processed", ErrorCode::kState);
  const std::size_t w = next_;
  WindowResult r;
  r.index = w;
  r.first_frame = layout_.start(w);
  r.frames = layout_.frames(w);
  r.truncated = layout_.truncated;

  std::vector<ComplexSpectrogram> specs;
  for (const auto& p : padded_) specs.push_back(window_stft(p, r.first_frame, r.frames, cfg_.stft));
  const MagnitudeTensor mags = magnitudes(specs);
  const WindowContext ctx{w, r.first_frame, &specs, &mags};

  r.masks = estimator_(ctx);
  for (const auto& m : r.masks) {
    require(m.rows() == static_cast<Eigen::Index>(r.frames) &&
                m.cols() == static_cast<Eigen::Index>(cfg_.stft.num_bins()),
            "mask estimator returned a mask of the wrong shape");
    if (!m.allFinite()) fail(ErrorCode::kNumeric, "mask estimator returned non-finite values");
  }
  r.snr = posterior_snr(r.masks, specs);
  r.selected_channel = 0;
  for (std::size_t c = 1; c < r.snr.size(); ++c)
    if (r.snr[c] > r.snr[r.selected_channel]) r.selected_channel = c;
  const ComplexGrid& x = specs[r.selected_channel].data;

  std::array<ComplexGrid, 2> raw;
  for (int i = 0; i < 2; ++i) raw[i] = x.array() * r.masks[i].cast<std::complex<double>>().array();
  if (cfg_.count_merge) {
    std::mt19937_64 rng(derive_seed(cfg_.seed, w));
    const CountDecision d = decider_(ctx, rng);
    r.gated = true;
    r.multi_speaker = d.multi_speaker;
    r.count_channel = d.channel;
    if (!d.multi_speaker) {
      raw[0] += raw[1];
      raw[1].setZero();
    }
  }
  for (int i = 0; i < 2; ++i) r.raw_mags[i] = raw[i].cwiseAbs();

  if (w > 0) {
    const WindowResult& prev = results_.back();
    const std::size_t ov = prev.first_frame + prev.frames - r.first_frame;
    const auto po = static_cast<Eigen::Index>(r.first_frame - prev.first_frame);
    const auto n = static_cast<Eigen::Index>(ov);
    std::array<RealGrid, 2> p{prev.raw_mags[0].middleRows(po, n),
                              prev.raw_mags[1].middleRows(po, n)};
    std::array<RealGrid, 2> c{r.raw_mags[0].topRows(n), r.raw_mags[1].topRows(n)};
    r.relative = align_permutation(p, c);
    for (int k = 0; k < 2; ++k) r.absolute[k] = r.relative[prev.absolute[k]];
  }

  StitchWindow sw;
  sw.start = r.first_frame;
  for (int k = 0; k < 2; ++k) sw.streams[k] = raw[r.absolute[k]];
  stitch_.push_back(std::move(sw));
  results_.push_back(std::move(r));
  ++next_;
  return results_.back();
}

std::size_t CssSession::committed_frames() const {
  if (finished()) return layout_.total_frames;
  return next_ == 0 ? 0 : layout_.start(next_);
}

CssOutput CssSession::finish() {
  while (!finished()) process_next();
  CssOutput out;
  out.streams = stitch(stitch_, layout_.total_frames, layout_.length, cfg_.stft, sample_rate_);
  out.windows = results_;
  out.layout = layout_;
  return out;
}

std::array<AudioClip, 2> selected_channel_references(
    const CssOutput& out, const std::vector<std::array<AudioClip, 2>>& device_refs,
    const CssConfig& cfg, int sample_rate) {
  const WindowLayout& layout = out.layout;
  std::vector<std::array<std::vector<double>, 2>> padded(device_refs.size());
  auto padded_ref = [&](std::size_t c, int s) -> const std::vector<double>& {
    auto& p = padded[c][s];
    if (p.empty()) {
      const auto& x = device_refs[c][s].samples;
      require(x.size() >= layout.length, "device reference shorter than the session");
      p = pad_for_css(std::span<const double>(x.data(), layout.length), layout, cfg.stft);
    }
    return p;
  };
  std::vector<StitchWindow> windows;
  for (const auto& w : out.windows) {
    require(w.selected_channel < device_refs.size(), "no reference for the selected channel");
    StitchWindow sw;
    sw.start = w.first_frame;
    for (int s = 0; s < 2; ++s)
      sw.streams[s] = window_stft(padded_ref(w.selected_channel, s), w.first_frame, w.frames,
                                  cfg.stft).data;
    windows.push_back(std::move(sw));
  }
  return stitch(windows, layout.total_frames, layout.length, cfg.stft, sample_rate);
}

CssOutput run_css(const MultiChannelRecording& session, const MaskEstimator& estimator,
                  const CountDecider& decider, const CssConfig& cfg) {
  CssSession s(session, estimator, decider, cfg);
  return s.finish();
}

CssOutput run_css(const MultiChannelRecording& session, const nn::SpatioTemporalNet& sep,
                  const nn::SpatioTemporalNet* count, const CssConfig& cfg) {
  CountDecider decider;
  if (cfg.count_merge) {
    require(count != nullptr, "count merging needs a counting model");
    require(count->config().head == cfg.count_head,
            "counting model head is " + nn::to_string(count->config().head) +
                " but the configuration asks for " + nn::to_string(cfg.count_head));
    decider = model_decider(*count, cfg.rule);
  }
  return run_css(session, model_estimator(sep), decider, cfg);
}

std::string to_json_line(const WindowResult& w) {
  nlohmann::json j;
  j["window"] = w.index;
  j["first_frame"] = w.first_frame;
  j["frames"] = w.frames;
  j["selected_channel"] = w.selected_channel;
  j["posterior_snr"] = w.snr;
  j["permutation"] = {w.relative[0], w.relative[1]};
  j["stream_assignment"] = {w.absolute[0], w.absolute[1]};
  j["decision"] = !w.gated ? "ungated" : (w.multi_speaker ? "multi" : "single");
  if (w.gated) j["count_channel"] = w.count_channel;
  j["truncated"] = w.truncated;
  return j.dump();
}

std::vector<bool> oracle_window_labels(const std::vector<int>& frame_counts,
                                       const WindowLayout& layout, const StftConfig& stft,
                                       std::size_t run_length) {
  // Padded frame t is centred where unpadded frame t - pad / hop is.
  const std::size_t lead = WindowLayout::pad(stft) / stft.hop;
  std::vector<bool> labels;
  for (std::size_t w = 0; w < layout.num_windows; ++w) {
    std::size_t run = 0, best = 0;
    for (std::size_t t = layout.start(w); t < layout.start(w) + layout.frames(w); ++t) {
      const bool two = t >= lead && t - lead < frame_counts.size() && frame_counts[t - lead] >= 2;
      run = two ? run + 1 : 0;
      best = std::max(best, run);
    }
    labels.push_back(best >= run_length);
  }
  return labels;
}

}  // namespace acss
