// Copyright 2026 The adhoc-css Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <array>
#include <vector>

#include "audio.hpp"
#include "dsp.hpp"
#include "nn/network.hpp"

namespace acss {

struct DecisionRule {
  double vad_threshold = 0.5;    // s1: both nodes above this
  double count_threshold = 1.2;  // s2: value above this
  std::size_t run_length = 3;    // consecutive frames
};

void validate(const DecisionRule& rule);

// Runs a counting model on exactly one channel. Throws for multi-channel input.
nn::SpatioTemporalNet::Output count_forward(const nn::SpatioTemporalNet& net,
                                            const MagnitudeTensor& x);

struct CountLoss {
  double total = 0.0;       // 0.5 * counting + 0.5 * separation
  double counting = 0.0;
  double separation = 0.0;
  Permutation vad_permutation = kIdentityPerm;  // s1 only
  Permutation sep_permutation = kIdentityPerm;
  nn::Mat head_grad;
  MaskPair mask_grad;
};

// s1: PIT MSE between the two VAD tracks and the activity labels, permuted
// independently of the auxiliary separation PIT. s2: MSE between the count
// output and the integer count labels. Throws if any count label exceeds 2.
CountLoss count_loss(nn::CountHead head, const nn::Mat& head_out,
                     const std::array<std::vector<int>, 2>& activity,
                     const std::vector<int>& count_labels, const MaskPair& masks,
                     const RealGrid& mix_mag, const std::array<RealGrid, 2>& ref_mags,
                     bool with_grad = true);

// Longest run of consecutive frames satisfying the head's activation test.
std::size_t longest_active_run(const nn::Mat& head_out, const DecisionRule& rule,
                               nn::CountHead head);

bool decide_multi_speaker(const nn::Mat& head_out, const DecisionRule& rule,
                          nn::CountHead head);

struct MergedPair {
  AudioClip merged;
  AudioClip zeros;
};

// (a, b) -> (a + b, exact zeros).
MergedPair merge_outputs(const AudioClip& a, const AudioClip& b);

}  // namespace acss
