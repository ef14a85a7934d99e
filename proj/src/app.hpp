// Copyright 2026 The adhoc-css Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Subcommand jobs. Each job reads its inputs from disk, writes its outputs
// plus a run_manifest sidecar, and reports failures as acss::Error.

#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "config.hpp"

namespace acss::app {

inline constexpr const char* kVersion = "0.1.0";

namespace fs = std::filesystem;

struct SimulateJob {
  fs::path config;
  fs::path out_dir;
  std::optional<double> hours;
  std::optional<std::size_t> num_samples;
  std::uint64_t seed = 0;
};

struct DistortJob {
  fs::path config;
  fs::path input;   // WAV
  fs::path output;  // WAV
  std::uint64_t seed = 0;
};

struct SyncJob {
  fs::path config;
  fs::path session;  // channel manifest
  fs::path out_dir;
  std::uint64_t seed = 0;
};

struct TrainJob {
  fs::path config;
  fs::path train_manifest;
  std::optional<fs::path> val_manifest;
  fs::path out_dir;
  nn::CountHead head = nn::CountHead::kNone;  // kNone trains the separation model
  std::optional<std::size_t> epochs;
  std::uint64_t seed = 0;
};

struct SeparateJob {
  fs::path config;
  fs::path session;                     // channel manifest of one session, or
  std::optional<fs::path> corpus;       // manifest.jsonl: every session to out_dir/<id>/
  fs::path sep_ckpt;
  std::optional<fs::path> count_ckpt;
  nn::CountHead count_head = nn::CountHead::kVad;
  bool count_merge = true;
  bool align = false;  // run device sync first
  fs::path out_dir;
  std::uint64_t seed = 0;
};

struct CountJob {
  fs::path config;
  fs::path session;
  fs::path count_ckpt;
  nn::CountHead count_head = nn::CountHead::kVad;
  fs::path output;  // JSONL
  std::uint64_t seed = 0;
};

struct EvaluateJob {
  fs::path hyp_dir;       // <id>/stream1.wav, <id>/stream2.wav [, <id>/report.jsonl]
  fs::path ref_manifest;  // manifest.jsonl written by simulate
  std::optional<fs::path> output;  // JSONL records, default hyp_dir/eval.jsonl
};

void run_simulate(const SimulateJob& job);
void run_distort(const DistortJob& job);
void run_sync(const SyncJob& job);
void run_train(const TrainJob& job);
void run_separate(const SeparateJob& job);
void run_count(const CountJob& job);
// Returns the human-readable summary.
std::string run_evaluate(const EvaluateJob& job);

// Sidecar describing how an artifact was produced.
void write_run_manifest(const fs::path& path, const std::string& command, std::uint64_t seed,
                        const nlohmann::json& config, const nlohmann::json& extra = {});

// Simulation metadata of one sample as stored in manifest.jsonl.
nlohmann::json sample_record(const std::string& id, const MixtureSample& s,
                             const std::string& rel_dir);
void write_sample(const fs::path& corpus_dir, const std::string& id, const MixtureSample& s);

}  // namespace acss::app
