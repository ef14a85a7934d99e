// Copyright 2026 The adhoc-css Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Small in-memory corpora for training and pipeline tests.

#pragma once

#include "room_sim.hpp"
#include "training.hpp"

namespace acss::testing {

inline MixtureConfig quick_mixture_config(double segment_s = 1.0) {
  MixtureConfig cfg;
  cfg.segment_s = segment_s;
  cfg.max_order = 2;
  cfg.rir_seconds = 0.1;
  cfg.room.length = {3.0, 5.0};
  cfg.room.width = {3.0, 5.0};
  cfg.room.height = {2.5, 3.0};
  return cfg;
}

inline Dataset quick_dataset(std::size_t n, std::uint64_t seed, double segment_s = 1.0,
                             bool distortion = true) {
  const Catalog cat = synthesize_catalog(4, 3, segment_s, seed);
  MixtureConfig cfg = quick_mixture_config(segment_s);
  cfg.distortion = distortion;
  std::mt19937_64 rng(seed + 1);
  Dataset d;
  for (std::size_t i = 0; i < n; ++i)
    d.samples.push_back(
        to_training_sample("q" + std::to_string(i), generate_mixture(cat, cfg, rng)));
  return d;
}

}  // namespace acss::testing
