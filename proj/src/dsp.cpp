// Copyright 2026 The adhoc-css Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "dsp.hpp"

#include <cmath>

#include "common.hpp"
#include "fft.hpp"

namespace acss {

std::vector<double> analysis_window(const StftConfig& cfg) {
  std::vector<double> w(cfg.fft_size, 1.0);
  if (cfg.window == WindowKind::kSqrtHann) {
    for (std::size_t n = 0; n < cfg.fft_size; ++n)
      w[n] = std::sqrt(0.5 - 0.5 * std::cos(2.0 * kPi * n / cfg.fft_size));
  }
  return w;
}

void validate(const StftConfig& cfg) {
  require(cfg.fft_size >= 2 && cfg.fft_size % 2 == 0,
          "fft_size must be even and >= 2");
  require(cfg.hop >= 1 && cfg.hop <= cfg.fft_size, "hop must be in [1, fft_size]");
  require(cfg.fft_size % cfg.hop == 0,
          "hop must divide fft_size for constant overlap-add");
  const auto w = analysis_window(cfg);
  std::vector<double> sum(cfg.hop, 0.0);
  for (std::size_t n = 0; n < cfg.fft_size; ++n) sum[n % cfg.hop] += w[n] * w[n];
  for (double s : sum)
    require(std::abs(s - sum[0]) < 1e-9 * sum[0],
            "window pair is not constant-overlap-add at this hop");
}

std::size_t num_frames(std::size_t num_samples, const StftConfig& cfg) {
  if (num_samples < cfg.fft_size) return 0;
  return (num_samples - cfg.fft_size) / cfg.hop + 1;
}

ComplexSpectrogram stft(std::span<const double> samples, const StftConfig& cfg) {
  validate(cfg);
  require(samples.size() >= cfg.fft_size, "input too short");
  const std::size_t frames = num_frames(samples.size(), cfg);
  const auto w = analysis_window(cfg);
  ComplexSpectrogram spec;
  spec.data.resize(static_cast<Eigen::Index>(frames),
                   static_cast<Eigen::Index>(cfg.num_bins()));
  std::vector<double> frame(cfg.fft_size);
  for (std::size_t t = 0; t < frames; ++t) {
    const std::size_t off = t * cfg.hop;
    for (std::size_t n = 0; n < cfg.fft_size; ++n) frame[n] = samples[off + n] * w[n];
    const auto bins = rfft(frame, cfg.fft_size);
    for (std::size_t f = 0; f < bins.size(); ++f) spec.data(t, f) = bins[f];
  }
  return spec;
}

AudioClip istft(const ComplexSpectrogram& spec, const StftConfig& cfg,
                int sample_rate) {
  validate(cfg);
  require(spec.bins() == cfg.num_bins(),
          "spectrogram bin count does not match the STFT configuration");
  AudioClip out;
  out.sample_rate = sample_rate;
  if (spec.frames() == 0) return out;
  const std::size_t len = (spec.frames() - 1) * cfg.hop + cfg.fft_size;
  const auto w = analysis_window(cfg);
  std::vector<double> acc(len, 0.0), norm(len, 0.0);
  std::vector<cdouble> bins(cfg.num_bins());
  for (std::size_t t = 0; t < spec.frames(); ++t) {
    for (std::size_t f = 0; f < bins.size(); ++f) bins[f] = spec.data(t, f);
    const auto frame = irfft(bins, cfg.fft_size);
    const std::size_t off = t * cfg.hop;
    for (std::size_t n = 0; n < cfg.fft_size; ++n) {
      acc[off + n] += frame[n] * w[n];
      norm[off + n] += w[n] * w[n];
    }
  }
  out.samples.resize(len);
  for (std::size_t i = 0; i < len; ++i)
    out.samples[i] = norm[i] > 1e-10 ? acc[i] / norm[i] : 0.0;
  return out;
}

ComplexSpectrogram apply_mask(const ComplexSpectrogram& mix, const RealGrid& mask) {
  require(mask.rows() == mix.data.rows() && mask.cols() == mix.data.cols(),
          "mask shape does not match the spectrogram");
  ComplexSpectrogram out;
  out.data = mix.data.array() * mask.array().cast<cdouble>();
  return out;
}

RealGrid magnitude(const ComplexSpectrogram& spec) { return spec.data.cwiseAbs(); }

MagnitudeTensor magnitudes(std::span<const ComplexSpectrogram> specs) {
  MagnitudeTensor m;
  m.channels.reserve(specs.size());
  for (const auto& s : specs) m.channels.push_back(magnitude(s));
  return m;
}

std::vector<double> reflect_pad(std::span<const double> x, std::size_t left,
                                std::size_t right) {
  require(x.size() > std::max(left, right),
          "signal too short for reflection padding");
  std::vector<double> y;
  y.reserve(x.size() + left + right);
  for (std::size_t i = left; i >= 1; --i) y.push_back(x[i]);
  y.insert(y.end(), x.begin(), x.end());
  const std::size_t n = x.size();
  for (std::size_t i = 1; i <= right; ++i) y.push_back(x[n - 1 - i]);
  return y;
}

}  // namespace acss
