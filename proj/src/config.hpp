// Copyright 2026 The adhoc-css Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// JSON configuration files. Every subcommand reads one optional file; the
// sections it does not use are ignored, unknown keys are errors, and every
// error names the offending field path (e.g. "train.epochs").

#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "css.hpp"
#include "device_sync.hpp"
#include "distortion.hpp"
#include "nn/network.hpp"
#include "room_sim.hpp"
#include "training.hpp"

namespace acss {

struct CatalogConfig {
  std::optional<std::filesystem::path> dir;  // speaker folders of WAVs
  std::size_t num_speakers = 24;             // synthetic voices otherwise
  std::size_t utterances_per_speaker = 6;
  double utterance_s = 3.0;
};

struct SimulateConfig {
  std::optional<std::size_t> num_samples;
  std::optional<double> hours;  // total mixture duration; used when num_samples is unset
  CatalogConfig catalog;
  MixtureConfig mixture;
};

struct TrainJobConfig {
  nn::NetConfig model;
  TrainConfig train;
};

// Missing or unparsable files raise kIo/kConfig naming the path. An empty
// path yields an empty object.
nlohmann::json load_config_file(const std::filesystem::path& path);

SimulateConfig parse_simulate_config(const nlohmann::json& j);
DistortionPolicy parse_distortion_config(const nlohmann::json& j);
SyncOptions parse_sync_config(const nlohmann::json& j);
// Starts from the separation or counting defaults depending on head.
TrainJobConfig parse_train_config(const nlohmann::json& j, nn::CountHead head);
CssConfig parse_css_config(const nlohmann::json& j);

// FNV-1a 64 of the canonical (sorted-key) dump.
std::uint64_t config_hash(const nlohmann::json& j);
std::string hex64(std::uint64_t v);

}  // namespace acss
