// Copyright 2026 The adhoc-css Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Differentiable building blocks. Each layer holds parameter indices into a
// ModelParameters store; forward fills a cache that backward consumes, and
// backward accumulates parameter gradients into a caller-owned GradientSet.

#pragma once

#include <random>
#include <string>
#include <vector>

#include "nn/params.hpp"

namespace acss::nn {

struct Linear {
  std::size_t weight = 0;  // in x out
  std::size_t bias = 0;    // 1 x out
  Eigen::Index in = 0, out = 0;

  static Linear create(ModelParameters& p, const std::string& name, Eigen::Index in,
                       Eigen::Index out, std::mt19937_64& rng);
  Mat forward(const ModelParameters& p, const Mat& x) const;
  // Returns dL/dx.
  Mat backward(const ModelParameters& p, const Mat& x, const Mat& dy,
               GradientSet& g) const;
};

inline constexpr double kVarianceFloor = 1e-5;

// Row-wise normalization over the feature axis with a learned gain and bias
// shared by every row. Variance is floored at kVarianceFloor.
struct LayerNorm {
  std::size_t gain = 0, bias = 0;
  Eigen::Index dim = 0;

  struct Cache {
    Mat xhat;
    Eigen::VectorXd inv_std;
    std::vector<char> floored;
  };

  static LayerNorm create(ModelParameters& p, const std::string& name, Eigen::Index dim);
  Mat forward(const ModelParameters& p, const Mat& x, Cache& cache) const;
  Mat backward(const ModelParameters& p, const Cache& cache, const Mat& dy,
               GradientSet& g) const;
};

// Tokens of a channels x frames grid stored as rows c * frames + t.
struct TokenGrid {
  Eigen::Index channels = 1;
  Eigen::Index frames = 1;
  Eigen::Index rows() const { return channels * frames; }
};

// kChannel attends across channels within each frame; kFrame attends across
// frames within each channel.
enum class AttentionAxis { kChannel, kFrame };

struct MultiHeadAttention {
  Linear q, k, v, o;
  Eigen::Index heads = 1;
  Eigen::Index d_model = 0;

  struct Cache {
    Mat x, q, k, v, context;
    std::vector<Mat> probs;  // group-major, then head
  };

  static MultiHeadAttention create(ModelParameters& p, const std::string& name,
                                   Eigen::Index d_model, Eigen::Index heads,
                                   std::mt19937_64& rng);
  Mat forward(const ModelParameters& p, const Mat& x, TokenGrid grid, AttentionAxis axis,
              Cache& cache) const;
  Mat backward(const ModelParameters& p, const Cache& cache, TokenGrid grid,
               AttentionAxis axis, const Mat& dy, GradientSet& g) const;
};

struct FeedForward {
  Linear l1, l2;

  struct Cache {
    Mat x, pre, hidden;
  };

  static FeedForward create(ModelParameters& p, const std::string& name, Eigen::Index d,
                            Eigen::Index hidden, std::mt19937_64& rng);
  Mat forward(const ModelParameters& p, const Mat& x, Cache& cache) const;
  Mat backward(const ModelParameters& p, const Cache& cache, const Mat& dy,
               GradientSet& g) const;
};

// Post-norm transformer encoder sublayer:
//   y1 = LN(x + MHA(x)),  y = LN(y1 + FFN(y1)).
struct EncoderLayer {
  MultiHeadAttention attn;
  LayerNorm norm1;
  FeedForward ffn;
  LayerNorm norm2;
  AttentionAxis axis = AttentionAxis::kFrame;

  struct Cache {
    MultiHeadAttention::Cache attn;
    LayerNorm::Cache norm1;
    FeedForward::Cache ffn;
    LayerNorm::Cache norm2;
  };

  static EncoderLayer create(ModelParameters& p, const std::string& name,
                             Eigen::Index d_model, Eigen::Index heads,
                             Eigen::Index ffn_hidden, AttentionAxis axis,
                             std::mt19937_64& rng);
  Mat forward(const ModelParameters& p, const Mat& x, TokenGrid grid, Cache& cache) const;
  Mat backward(const ModelParameters& p, const Cache& cache, TokenGrid grid, const Mat& dy,
               GradientSet& g) const;
};

// Single-direction LSTM with gate order (input, forget, cell, output).
struct Lstm {
  std::size_t wx = 0;  // in x 4H
  std::size_t wh = 0;  // H x 4H
  std::size_t bias = 0;
  Eigen::Index in = 0, hidden = 0;
  bool reverse = false;

  struct Cache {
    Mat x;
    Mat gates;  // activated gates, T x 4H
    Mat cell;
    Mat cell_tanh;
    Mat h;
  };

  static Lstm create(ModelParameters& p, const std::string& name, Eigen::Index in,
                     Eigen::Index hidden, bool reverse, std::mt19937_64& rng);
  Mat forward(const ModelParameters& p, const Mat& x, Cache& cache) const;
  Mat backward(const ModelParameters& p, const Cache& cache, const Mat& dh,
               GradientSet& g) const;
};

// Forward and reverse LSTM outputs concatenated per frame: T x 2H.
struct BiLstm {
  Lstm fwd, bwd;

  struct Cache {
    Lstm::Cache fwd, bwd;
  };

  static BiLstm create(ModelParameters& p, const std::string& name, Eigen::Index in,
                       Eigen::Index hidden, std::mt19937_64& rng);
  Mat forward(const ModelParameters& p, const Mat& x, Cache& cache) const;
  Mat backward(const ModelParameters& p, const Cache& cache, const Mat& dy,
               GradientSet& g) const;
};

// C x T token rows -> T x d mean over channels.
Mat channel_mean_pool(const Mat& x, TokenGrid grid);
Mat channel_mean_pool_backward(const Mat& dy, TokenGrid grid);

}  // namespace acss::nn
