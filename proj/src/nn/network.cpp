// Copyright 2026 The adhoc-css Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "nn/network.hpp"

#include <cmath>

#include "common.hpp"

namespace acss::nn {

namespace {

void check_finite(const Mat& m, const char* layer) {
  if (!m.allFinite())
    fail(ErrorCode::kNumeric, std::string("non-finite activation in layer ") + layer);
}

}  // namespace

std::string to_string(CountHead head) {
  switch (head) {
    case CountHead::kNone: return "none";
    case CountHead::kVad: return "s1";
    case CountHead::kCount: return "s2";
  }
  return "none";
}

CountHead parse_count_head(const std::string& name) {
  if (name == "s1") return CountHead::kVad;
  if (name == "s2") return CountHead::kCount;
  if (name == "none") return CountHead::kNone;
  fail(ErrorCode::kInvalidArgument, "unknown counting head (expected s1 or s2): " + name);
}

NetConfig NetConfig::separation_defaults() { return NetConfig{}; }

NetConfig NetConfig::counting_defaults(CountHead head) {
  NetConfig c;
  c.num_blocks = 3;
  c.cross_channel = false;
  c.head = head;
  return c;
}

NetConfig NetConfig::separation_full_scale() {
  NetConfig c;
  c.d_model = 128;
  c.num_heads = 8;
  c.num_blocks = 3;
  c.rnn_cells = 512;
  return c;
}

void validate(const NetConfig& cfg) {
  require(cfg.num_bins >= 2, "num_bins must be >= 2");
  require(cfg.d_model >= 1 && cfg.num_heads >= 1 && cfg.d_model % cfg.num_heads == 0,
          "d_model must be divisible by num_heads");
  require(cfg.num_blocks >= 1, "num_blocks must be >= 1");
  require(cfg.rnn_cells >= 1, "rnn_cells must be >= 1");
  require(cfg.ffn_mult >= 1, "ffn_mult must be >= 1");
  require(cfg.cross_channel == (cfg.head == CountHead::kNone),
          "counting models are single-channel and separation models are multi-channel");
}

SpatioTemporalNet::SpatioTemporalNet(const NetConfig& cfg) : cfg_(cfg) {
  validate(cfg_);
  std::mt19937_64 rng(cfg_.seed);
  build(rng);
}

SpatioTemporalNet::SpatioTemporalNet(const NetConfig& cfg, ModelParameters params)
    : cfg_(cfg) {
  validate(cfg_);
  std::mt19937_64 rng(cfg_.seed);
  build(rng);
  require(params.size() == params_.size(),
          "checkpoint tensor count does not match the model configuration",
          ErrorCode::kConfig);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    require(params.name(i) == params_.name(i) &&
                params.value(i).rows() == params_.value(i).rows() &&
                params.value(i).cols() == params_.value(i).cols(),
            "checkpoint tensor '" + params.name(i) + "' does not match the model layout",
            ErrorCode::kConfig);
    require(params.value(i).allFinite(),
            "checkpoint tensor '" + params.name(i) + "' is not finite", ErrorCode::kNumeric);
    params_.mutable_value(i) = params.value(i);
  }
  params_.bump_version();
}

void SpatioTemporalNet::build(std::mt19937_64& rng) {
  const Eigen::Index d = cfg_.d_model;
  input_norm_ = LayerNorm::create(params_, "input_norm", cfg_.num_bins);
  embed_ = Linear::create(params_, "embed", cfg_.num_bins, d, rng);
  for (Eigen::Index b = 0; b < cfg_.num_blocks; ++b) {
    const std::string prefix = "block" + std::to_string(b);
    if (cfg_.cross_channel)
      layers_.push_back(EncoderLayer::create(params_, prefix + ".channel", d, cfg_.num_heads,
                                             cfg_.ffn_mult * d, AttentionAxis::kChannel, rng));
    layers_.push_back(EncoderLayer::create(params_, prefix + ".frame", d, cfg_.num_heads,
                                           cfg_.ffn_mult * d, AttentionAxis::kFrame, rng));
  }
  rnn1_ = BiLstm::create(params_, "rnn1", d, cfg_.rnn_cells, rng);
  rnn2_ = BiLstm::create(params_, "rnn2", 2 * cfg_.rnn_cells, cfg_.rnn_cells, rng);
  mask_head_ = Linear::create(params_, "mask_head", 2 * cfg_.rnn_cells, 2 * cfg_.num_bins, rng);
  // Masks start near 0.5 so both ReLU outputs are live at initialization.
  params_.mutable_value(mask_head_.bias).setConstant(0.5);
  if (cfg_.head != CountHead::kNone)
    count_head_ = Linear::create(params_, "count_head", 2 * cfg_.rnn_cells,
                                 cfg_.head == CountHead::kVad ? 2 : 1, rng);
}

SpatioTemporalNet::Output SpatioTemporalNet::forward(const MagnitudeTensor& x) const {
  Cache cache;
  return forward(x, cache);
}

SpatioTemporalNet::Output SpatioTemporalNet::forward(const MagnitudeTensor& x,
                                                     Cache& cache) const {
  require(x.num_channels() >= 1, "model input needs at least one channel");
  const Eigen::Index C = static_cast<Eigen::Index>(x.num_channels());
  const Eigen::Index T = static_cast<Eigen::Index>(x.frames());
  const Eigen::Index F = cfg_.num_bins;
  require(T >= 1, "model input has no frames");
  require(static_cast<Eigen::Index>(x.bins()) == F,
          "model input bin count does not match the model configuration");
  if (!cfg_.cross_channel) require(C == 1, "counting model expects single-channel input");

  cache.params = &params_;
  cache.version = params_.version();
  cache.grid = TokenGrid{C, T};
  cache.input.resize(C * T, F);
  for (Eigen::Index c = 0; c < C; ++c) {
    const auto& ch = x.channels[static_cast<std::size_t>(c)];
    require(ch.rows() == T && ch.cols() == F, "model input channels differ in shape");
    cache.input.middleRows(c * T, T) = ch;
  }
  check_finite(cache.input, "input");

  cache.normalized = input_norm_.forward(params_, cache.input, cache.input_norm);
  Mat h = embed_.forward(params_, cache.normalized);
  check_finite(h, "embed");
  cache.layers.resize(layers_.size());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    h = layers_[l].forward(params_, h, cache.grid, cache.layers[l]);
    check_finite(h, layers_[l].axis == AttentionAxis::kChannel ? "cross-channel attention"
                                                               : "cross-frame attention");
  }
  cache.pooled = channel_mean_pool(h, cache.grid);
  cache.rnn1_out = rnn1_.forward(params_, cache.pooled, cache.rnn1);
  check_finite(cache.rnn1_out, "rnn1");
  cache.rnn2_out = rnn2_.forward(params_, cache.rnn1_out, cache.rnn2);
  check_finite(cache.rnn2_out, "rnn2");
  cache.mask_pre = mask_head_.forward(params_, cache.rnn2_out);
  check_finite(cache.mask_pre, "mask_head");

  Output out;
  for (Eigen::Index i = 0; i < 2; ++i)
    out.masks[static_cast<std::size_t>(i)] = cache.mask_pre.middleCols(i * F, F).cwiseMax(0.0);
  if (count_head_) {
    Mat pre = count_head_->forward(params_, cache.rnn2_out);
    if (cfg_.head == CountHead::kVad) pre = (1.0 + (-pre.array()).exp()).inverse().matrix();
    check_finite(pre, "count_head");
    cache.head_out = pre;
    out.head = std::move(pre);
  }
  return out;
}

void SpatioTemporalNet::backward(const Cache& cache, const MaskPair& mask_grad,
                                 const Mat* head_grad, GradientSet& grads) const {
  require(cache.params == &params_ && cache.version == params_.version(),
          "activation cache is stale or belongs to another model", ErrorCode::kState);
  require(grads.size() == params_.size(), "gradient set does not match the model");
  const Eigen::Index T = cache.grid.frames, F = cfg_.num_bins;
  Mat dpre(T, 2 * F);
  for (Eigen::Index i = 0; i < 2; ++i) {
    const auto& mg = mask_grad[static_cast<std::size_t>(i)];
    require(mg.rows() == T && mg.cols() == F, "mask gradient shape mismatch");
    dpre.middleCols(i * F, F) =
        mg.array() * (cache.mask_pre.middleCols(i * F, F).array() > 0.0).cast<double>();
  }
  Mat dr2 = mask_head_.backward(params_, cache.rnn2_out, dpre, grads);
  if (head_grad != nullptr) {
    require(count_head_.has_value(), "model has no counting head");
    require(head_grad->rows() == cache.head_out.rows() &&
                head_grad->cols() == cache.head_out.cols(),
            "head gradient shape mismatch");
    Mat dz = *head_grad;
    if (cfg_.head == CountHead::kVad)
      dz.array() *= cache.head_out.array() * (1.0 - cache.head_out.array());
    dr2 += count_head_->backward(params_, cache.rnn2_out, dz, grads);
  }
  const Mat dr1 = rnn2_.backward(params_, cache.rnn2, dr2, grads);
  const Mat dpool = rnn1_.backward(params_, cache.rnn1, dr1, grads);
  Mat dh = channel_mean_pool_backward(dpool, cache.grid);
  for (std::size_t l = layers_.size(); l-- > 0;)
    dh = layers_[l].backward(params_, cache.layers[l], cache.grid, dh, grads);
  const Mat dnorm = embed_.backward(params_, cache.normalized, dh, grads);
  input_norm_.backward(params_, cache.input_norm, dnorm, grads);
}

Mat global_normalize(const Mat& frames, const RowVec& gain, const RowVec& bias) {
  require(gain.size() == frames.cols() && bias.size() == frames.cols(),
          "normalization gain/bias length does not match the bin count");
  ModelParameters p;
  LayerNorm ln = LayerNorm::create(p, "norm", frames.cols());
  p.mutable_value(ln.gain) = gain;
  p.mutable_value(ln.bias) = bias;
  LayerNorm::Cache cache;
  return ln.forward(p, frames, cache);
}

Mat multihead_self_attention(const ModelParameters& p, const EncoderLayer& layer,
                             const Mat& x, TokenGrid grid) {
  EncoderLayer::Cache cache;
  return layer.forward(p, x, grid, cache);
}

Mat bidirectional_recurrent(const ModelParameters& p, const BiLstm& rnn, const Mat& x) {
  require(x.rows() >= 1, "recurrent input needs at least one frame");
  BiLstm::Cache cache;
  return rnn.forward(p, x, cache);
}

}  // namespace acss::nn
