// Copyright 2026 The adhoc-css Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace acss {

inline constexpr int kDefaultSampleRate = 16000;

struct AudioClip {
  std::vector<double> samples;
  int sample_rate = kDefaultSampleRate;

  AudioClip() = default;
  explicit AudioClip(std::vector<double> s, int rate = kDefaultSampleRate)
      : samples(std::move(s)), sample_rate(rate) {}

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double duration() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// One clip per device. Channels may differ in length before alignment.
struct MultiChannelRecording {
  std::vector<AudioClip> channels;

  std::size_t num_channels() const { return channels.size(); }
  int sample_rate() const {
    return channels.empty() ? kDefaultSampleRate : channels.front().sample_rate;
  }
  std::size_t min_length() const;
};

// Throws unless every sample is finite and the rate is positive.
void validate(const AudioClip& clip);

double energy(std::span<const double> x);
double peak(std::span<const double> x);

// 16-bit PCM mono WAV. Reading also accepts 32-bit float and multi-channel
// files, keeping the first channel.
AudioClip read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const AudioClip& clip);

// A session manifest lists one WAV path per line; line order is channel
// order. Relative paths resolve against the manifest's directory. Blank
// lines and lines starting with '#' are ignored.
std::vector<std::filesystem::path> read_session_manifest(
    const std::filesystem::path& manifest);
MultiChannelRecording read_session(const std::filesystem::path& manifest);
void write_session(const std::filesystem::path& dir,
                   const MultiChannelRecording& rec,
                   const std::string& stem = "ch");

}  // namespace acss
