// Copyright 2026 The adhoc-css Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dsp.hpp"
#include "nn/layers.hpp"

namespace acss::nn {

enum class CountHead {
  kNone,  // separation model
  kVad,   // s1: two sigmoid voice-activity tracks
  kCount  // s2: one linear speaker-count node
};

std::string to_string(CountHead head);
CountHead parse_count_head(const std::string& name);

struct NetConfig {
  Eigen::Index num_bins = 257;
  Eigen::Index d_model = 32;
  Eigen::Index num_heads = 4;
  Eigen::Index num_blocks = 2;
  Eigen::Index rnn_cells = 64;   // per direction
  Eigen::Index ffn_mult = 4;
  bool cross_channel = true;     // false for single-channel counting models
  CountHead head = CountHead::kNone;
  std::uint64_t seed = 0;

  static NetConfig separation_defaults();
  static NetConfig counting_defaults(CountHead head);
  // Spatio-temporal sizes of the full-scale system, as opposed to the toy
  // defaults above.
  static NetConfig separation_full_scale();
};

void validate(const NetConfig& cfg);

// Global normalization -> linear embedding -> stacked encoder blocks
// (optional cross-channel layer, then cross-frame layer) -> channel mean
// pooling -> two BLSTM layers -> ReLU mask head (2 x bins) and, for counting
// models, a per-frame counting head. No positional encoding on either axis.
class SpatioTemporalNet {
 public:
  struct Output {
    MaskPair masks;
    Mat head;  // frames x 2 (kVad, sigmoid) or frames x 1 (kCount); empty otherwise
  };

  struct Cache {
    const ModelParameters* params = nullptr;
    std::uint64_t version = 0;
    TokenGrid grid;
    Mat input;
    LayerNorm::Cache input_norm;
    Mat normalized;
    std::vector<EncoderLayer::Cache> layers;
    Mat pooled;
    BiLstm::Cache rnn1, rnn2;
    Mat rnn1_out, rnn2_out;
    Mat mask_pre;
    Mat head_out;
  };

  explicit SpatioTemporalNet(const NetConfig& cfg);
  SpatioTemporalNet(const NetConfig& cfg, ModelParameters params);

  const NetConfig& config() const { return cfg_; }
  ModelParameters& params() { return params_; }
  const ModelParameters& params() const { return params_; }

  Output forward(const MagnitudeTensor& x, Cache& cache) const;
  Output forward(const MagnitudeTensor& x) const;

  // Accumulates dL/dparams into grads. head_grad may be null for separation
  // models or when the counting loss is absent.
  void backward(const Cache& cache, const MaskPair& mask_grad, const Mat* head_grad,
                GradientSet& grads) const;

 private:
  void build(std::mt19937_64& rng);

  NetConfig cfg_;
  ModelParameters params_;
  LayerNorm input_norm_;
  Linear embed_;
  std::vector<EncoderLayer> layers_;
  BiLstm rnn1_, rnn2_;
  Linear mask_head_;
  std::optional<Linear> count_head_;
};

// Free-standing forms of the network stages, used directly by tests.
Mat global_normalize(const Mat& frames, const RowVec& gain, const RowVec& bias);
Mat multihead_self_attention(const ModelParameters& p, const EncoderLayer& layer,
                             const Mat& x, TokenGrid grid);
Mat bidirectional_recurrent(const ModelParameters& p, const BiLstm& rnn, const Mat& x);

}  // namespace acss::nn
