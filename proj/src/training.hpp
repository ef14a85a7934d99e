// Copyright 2026 The adhoc-css Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "audio.hpp"
#include "dsp.hpp"
#include "nn/network.hpp"
#include "room_sim.hpp"

namespace acss {

struct PitResult {
  double loss = 0.0;
  Permutation permutation = kIdentityPerm;  // output i -> reference permutation[i]
  MaskPair grad;                            // dL/dmask under the chosen permutation
};

// loss(perm) = mean over (t, f, i) of (mask_i * mix - ref_perm(i))^2, minimized
// over both permutations. Ties keep the identity.
PitResult pit_mse_loss(const MaskPair& masks, const RealGrid& mix_mag,
                       const std::array<RealGrid, 2>& ref_mags, bool with_grad = true);

// Loss of one fixed permutation, no gradient.
double permutation_mse(const MaskPair& masks, const RealGrid& mix_mag,
                       const std::array<RealGrid, 2>& ref_mags, Permutation perm);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<nn::Mat> m, v;
  std::uint64_t step = 0;
};

AdamState make_adam_state(const nn::ModelParameters& params);

// Bias-corrected adaptive-moment update. Throws kNumeric on a non-finite
// gradient before touching any parameter.
void optimizer_step(nn::ModelParameters& params, const nn::GradientSet& grads,
                    AdamState& state, const AdamConfig& hyper);

// One sample of a training corpus held in memory.
struct TrainingSample {
  std::string id;
  MultiChannelRecording mixture;
  std::array<AudioClip, 2> refs;             // source images at the reference device
  std::array<std::vector<int>, 2> activity;  // per STFT frame
  std::vector<int> count_labels;             // per STFT frame
};

TrainingSample to_training_sample(std::string id, const MixtureSample& sample);

// A crop in the network's input domain.
struct TrainingExample {
  MagnitudeTensor input;               // all channels, or one for counting models
  RealGrid mix_mag;                    // reference channel magnitude
  std::array<RealGrid, 2> ref_mags;
  std::array<std::vector<int>, 2> activity;
  std::vector<int> count_labels;
};

struct Dataset {
  std::vector<TrainingSample> samples;
  std::vector<std::string> skipped;  // ids or paths that failed to load
};

// Reads a corpus manifest written by `simulate`. Unreadable samples are
// skipped with a logged warning.
Dataset load_dataset(const std::filesystem::path& manifest);

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 4;
  AdamConfig adam;
  std::uint64_t seed = 0;
  std::size_t ref_channel = 0;
  double crop_s = 4.0;
  std::size_t validate_every = 1;  // epochs
  std::optional<std::size_t> patience;  // early stopping on the selection loss
  std::optional<std::size_t> max_channels;  // random channel subset per crop
  StftConfig stft;
  // Per-epoch checkpoints epoch_NNN.ckpt, best.ckpt and metrics.jsonl are
  // written here when set.
  std::optional<std::filesystem::path> out_dir;
};

void validate(const TrainConfig& cfg);

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  std::optional<double> val_loss;
  double wall_time_s = 0.0;
};

struct TrainResult {
  nn::SpatioTemporalNet best;
  nn::SpatioTemporalNet last;
  std::vector<EpochMetrics> history;
  std::size_t best_epoch = 0;
  double best_loss = 0.0;  // selection loss at best_epoch
  bool stopped_early = false;
};

// Builds a crop of frames [frame_offset, frame_offset + frames) for a
// separation model (all channels, optionally a subset) or a counting model
// (one channel).
TrainingExample make_example(const TrainingSample& sample, const nn::NetConfig& net_cfg,
                             const TrainConfig& cfg, std::mt19937_64& rng, bool random_crop);

// Loss and gradient of one example under the model's objective: PIT MSE for
// separation models, the multi-task counting objective otherwise.
double example_loss(const nn::SpatioTemporalNet& net, const TrainingExample& ex,
                    nn::GradientSet* grads);

using EpochCallback = std::function<void(const EpochMetrics&)>;

// Trains a fresh network built from net_cfg. Selection uses the validation
// loss when a validation set is given, otherwise the training loss.
TrainResult train(const nn::NetConfig& net_cfg, const Dataset& train_set,
                  const Dataset* val_set, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

std::string to_json_line(const EpochMetrics& m);

}  // namespace acss
