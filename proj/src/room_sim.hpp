// Copyright 2026 The adhoc-css Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "audio.hpp"
#include "distortion.hpp"
#include "dsp.hpp"

namespace acss {

using Point3 = std::array<double, 3>;

struct RoomSpec {
  Point3 dims{5.0, 4.0, 3.0};  // metres
  // Absorption per surface: x=0, x=Lx, y=0, y=Ly, z=0, z=Lz.
  std::array<double, 6> absorption{0.5, 0.5, 0.5, 0.5, 0.5, 0.5};
  double speed_of_sound = 343.0;
};

struct ArrayLayout {
  std::vector<Point3> source_positions;
  std::vector<Point3> mic_positions;
};

enum class OverlapStyle { kSingle, kInclusive, kSequential, kFullOverlap, kPartialOverlap };
inline constexpr std::size_t kNumOverlapStyles = 5;
// Sampling weights in enum order.
inline constexpr std::array<double, kNumOverlapStyles> kDefaultStyleWeights{
    0.40, 0.09, 0.06, 0.36, 0.09};

std::string_view to_string(OverlapStyle style);
OverlapStyle parse_overlap_style(std::string_view name);

struct ImageSource {
  double distance = 0.0;
  double gain = 0.0;  // product of wall reflection coefficients / (4 pi d)
  int order = 0;
};

// Every mirror image of src with reflection order <= max_order.
std::vector<ImageSource> image_sources(const RoomSpec& room, const Point3& src,
                                       const Point3& mic, int max_order);

// Shoebox image-method impulse response with nearest-sample delays.
std::vector<double> image_method_rir(const RoomSpec& room, const Point3& src,
                                     const Point3& mic, int max_order,
                                     int sample_rate = kDefaultSampleRate,
                                     std::size_t length = 8000);

// Linear convolution, length |dry| + |rir| - 1.
AudioClip render_source(const AudioClip& dry, std::span<const double> rir);

struct OverlapSchedule {
  std::size_t onset_a = 0;
  std::size_t len_a = 0;
  std::optional<std::size_t> onset_b;  // absent for single-speaker segments
  std::size_t len_b = 0;
};

// Places utterances of the given lengths inside a segment of segment_len
// samples according to the style. Full overlap trims both to the shorter
// length. Throws when the geometry is impossible.
OverlapSchedule schedule_overlap(OverlapStyle style, std::size_t len_a,
                                 std::size_t len_b, std::size_t segment_len,
                                 std::mt19937_64& rng);

OverlapStyle sample_style(const std::array<double, kNumOverlapStyles>& weights,
                          std::mt19937_64& rng);

// White Gaussian noise per channel scaled so each channel's SNR is snr_db.
// An infinite snr_db yields silence.
MultiChannelRecording make_noise(const MultiChannelRecording& rec, double snr_db,
                                 std::mt19937_64& rng);
MultiChannelRecording add_noise(const MultiChannelRecording& rec, double snr_db,
                                std::mt19937_64& rng);

struct Speaker {
  std::string id;
  std::vector<AudioClip> utterances;
};

struct Catalog {
  std::vector<Speaker> speakers;
};

// Speaker-labelled folders of 16 kHz WAV files.
Catalog load_catalog(const std::filesystem::path& root);

// Harmonic vowel-like utterances with per-speaker pitch and formant scale.
Catalog synthesize_catalog(std::size_t num_speakers, std::size_t utterances_per_speaker,
                           double utterance_seconds, std::uint64_t seed,
                           int sample_rate = kDefaultSampleRate);

struct RoomSampler {
  Range length{2.5, 12.0};
  Range width{2.5, 12.0};
  Range height{2.5, 12.0};
  Range absorption{0.3, 0.9};
  double wall_margin = 0.5;  // metres kept free between points and walls
  double min_source_mic_distance = 0.3;
};

RoomSpec sample_room(const RoomSampler& sampler, std::mt19937_64& rng);
ArrayLayout sample_layout(const RoomSpec& room, const RoomSampler& sampler,
                          std::size_t num_sources, std::size_t num_mics,
                          std::mt19937_64& rng);

struct MixtureConfig {
  double segment_s = 4.0;
  std::size_t min_devices = 2;
  std::size_t max_devices = 4;
  std::array<double, kNumOverlapStyles> style_weights = kDefaultStyleWeights;
  std::optional<OverlapStyle> forced_style;
  bool fill_segment = false;  // single/full styles span the whole segment
  Range snr_db{-5.0, 15.0};
  Range source_gain_db{-5.0, 5.0};  // level of speaker B relative to A
  bool distortion = true;
  DistortionPolicy distortion_policy;
  int max_order = 6;
  double rir_seconds = 0.5;
  std::size_t ref_channel = 0;
  bool reuse_utterances = true;
  double peak_level = 0.9;
  RoomSampler room;
  StftConfig stft;
};

struct MixtureSample {
  MultiChannelRecording mixture;
  std::array<AudioClip, 2> clean_refs;  // silent when the speaker is absent
  std::array<std::vector<int>, 2> activity;
  std::vector<int> count_labels;
  OverlapStyle style = OverlapStyle::kSingle;
  double snr_db = 0.0;
  std::size_t num_speakers = 1;
  std::array<std::string, 2> speaker_ids;
  RoomSpec room;
  ArrayLayout layout;
  OverlapSchedule schedule;
  // Constituents, already scaled: images[s][c] is speaker s at device c.
  std::array<std::vector<AudioClip>, 2> images;
  std::vector<AudioClip> noise;
  std::vector<DistortionParams> distortions;
  double scale = 1.0;
};

// Draws utterances without replacement when cfg.reuse_utterances is false.
class UtterancePool {
 public:
  UtterancePool(const Catalog& catalog, bool reuse);
  // Concatenates random utterances of the speaker until length samples.
  std::vector<double> draw(std::size_t speaker, std::size_t length, std::mt19937_64& rng);
  const Catalog& catalog() const { return catalog_; }

 private:
  const Catalog& catalog_;
  bool reuse_;
  std::vector<std::vector<std::size_t>> remaining_;
};

MixtureSample generate_mixture(UtterancePool& pool, const MixtureConfig& cfg,
                               std::mt19937_64& rng);
MixtureSample generate_mixture(const Catalog& catalog, const MixtureConfig& cfg,
                               std::mt19937_64& rng);

// Re-applies the stored per-device distortions to sum(images) + noise.
MultiChannelRecording recompose_mixture(const MixtureSample& sample);

// Each speaker's image at every device through the linear part of that
// device's distortion (band-pass and delay, no clipping): [device][speaker].
std::vector<std::array<AudioClip, 2>> device_references(const MixtureSample& sample);

// Sample intervals [begin, end) where exactly one speaker is active.
std::vector<std::pair<std::size_t, std::size_t>> single_speaker_intervals(
    const MixtureSample& sample);

}  // namespace acss
