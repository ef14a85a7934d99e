// Copyright 2026 The adhoc-css Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <Eigen/Core>
#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "audio.hpp"

namespace acss {

// Row-major frames x bins grids. Every time-frequency quantity in the
// library uses this orientation.
using RealGrid =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ComplexGrid = Eigen::Matrix<std::complex<double>, Eigen::Dynamic,
                                  Eigen::Dynamic, Eigen::RowMajor>;

enum class WindowKind { kSqrtHann, kRectangular };

struct StftConfig {
  std::size_t fft_size = 512;
  std::size_t hop = 256;
  WindowKind window = WindowKind::kSqrtHann;

  std::size_t num_bins() const { return fft_size / 2 + 1; }
};

// Throws if the analysis/synthesis window pair does not overlap-add to a
// constant at the configured hop.
void validate(const StftConfig& cfg);
std::vector<double> analysis_window(const StftConfig& cfg);

struct ComplexSpectrogram {
  ComplexGrid data;  // frames x bins

  std::size_t frames() const { return static_cast<std::size_t>(data.rows()); }
  std::size_t bins() const { return static_cast<std::size_t>(data.cols()); }
};

// channels x frames x bins, all entries >= 0.
struct MagnitudeTensor {
  std::vector<RealGrid> channels;

  std::size_t num_channels() const { return channels.size(); }
  std::size_t frames() const {
    return channels.empty() ? 0 : static_cast<std::size_t>(channels[0].rows());
  }
  std::size_t bins() const {
    return channels.empty() ? 0 : static_cast<std::size_t>(channels[0].cols());
  }
};

using MaskPair = std::array<RealGrid, 2>;

// perm[i] is the reference (or stream) index matched to output i.
using Permutation = std::array<int, 2>;
inline constexpr Permutation kIdentityPerm{0, 1};
inline constexpr Permutation kSwapPerm{1, 0};

std::size_t num_frames(std::size_t num_samples, const StftConfig& cfg);

ComplexSpectrogram stft(std::span<const double> samples, const StftConfig& cfg);
inline ComplexSpectrogram stft(const AudioClip& clip, const StftConfig& cfg) {
  return stft(clip.samples, cfg);
}

// Weighted overlap-add. Output length is (frames - 1) * hop + fft_size.
AudioClip istft(const ComplexSpectrogram& spec, const StftConfig& cfg,
                int sample_rate = kDefaultSampleRate);

ComplexSpectrogram apply_mask(const ComplexSpectrogram& mix, const RealGrid& mask);

RealGrid magnitude(const ComplexSpectrogram& spec);
MagnitudeTensor magnitudes(std::span<const ComplexSpectrogram> specs);

// Mirror padding without repeating the edge sample.
std::vector<double> reflect_pad(std::span<const double> x, std::size_t left,
                                std::size_t right);

}  // namespace acss
