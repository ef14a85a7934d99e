// Copyright 2026 The adhoc-css Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "nn/layers.hpp"

#include <cmath>

#include "common.hpp"

namespace acss::nn {

namespace {

struct GroupRows {
  Eigen::Index start, size, stride;
};

Eigen::Index num_groups(TokenGrid grid, AttentionAxis axis) {
  return axis == AttentionAxis::kFrame ? grid.channels : grid.frames;
}

GroupRows group_rows(TokenGrid grid, AttentionAxis axis, Eigen::Index g) {
  if (axis == AttentionAxis::kFrame) return {g * grid.frames, grid.frames, 1};
  return {g, grid.channels, grid.frames};
}

auto seq(const GroupRows& r) { return Eigen::seqN(r.start, r.size, r.stride); }

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

Linear Linear::create(ModelParameters& p, const std::string& name, Eigen::Index in,
                      Eigen::Index out, std::mt19937_64& rng) {
  Linear l;
  l.in = in;
  l.out = out;
  l.weight = p.add(name + ".weight", uniform_fan_in(in, out, in, rng));
  l.bias = p.add(name + ".bias", uniform_fan_in(1, out, in, rng));
  return l;
}

Mat Linear::forward(const ModelParameters& p, const Mat& x) const {
  Mat y = x * p.value(weight);
  y.rowwise() += p.value(bias).row(0);
  return y;
}

Mat Linear::backward(const ModelParameters& p, const Mat& x, const Mat& dy,
                     GradientSet& g) const {
  g[weight].noalias() += x.transpose() * dy;
  g[bias] += dy.colwise().sum();
  return dy * p.value(weight).transpose();
}

LayerNorm LayerNorm::create(ModelParameters& p, const std::string& name,
                            Eigen::Index dim) {
  LayerNorm ln;
  ln.dim = dim;
  ln.gain = p.add(name + ".gain", Mat::Ones(1, dim));
  ln.bias = p.add(name + ".bias", Mat::Zero(1, dim));
  return ln;
}

Mat LayerNorm::forward(const ModelParameters& p, const Mat& x, Cache& cache) const {
  require(x.cols() == dim, "layer norm width mismatch");
  const Eigen::Index n = x.rows();
  cache.xhat.resize(n, dim);
  cache.inv_std.resize(n);
  cache.floored.assign(static_cast<std::size_t>(n), 0);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double mean = x.row(r).mean();
    const auto centred = x.row(r).array() - mean;
    double var = centred.square().mean();
    if (var < kVarianceFloor) {
      var = kVarianceFloor;
      cache.floored[static_cast<std::size_t>(r)] = 1;
    }
    const double inv = 1.0 / std::sqrt(var);
    cache.inv_std(r) = inv;
    cache.xhat.row(r) = centred * inv;
  }
  Mat y = cache.xhat.array().rowwise() * p.value(gain).row(0).array();
  y.rowwise() += p.value(bias).row(0);
  return y;
}

Mat LayerNorm::backward(const ModelParameters& p, const Cache& cache, const Mat& dy,
                        GradientSet& g) const {
  g[gain] += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  g[bias] += dy.colwise().sum();
  const Mat dxhat = dy.array().rowwise() * p.value(gain).row(0).array();
  Mat dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const double m1 = dxhat.row(r).mean();
    if (cache.floored[static_cast<std::size_t>(r)]) {
      dx.row(r) = (dxhat.row(r).array() - m1) * cache.inv_std(r);
    } else {
      const double m2 = (dxhat.row(r).array() * cache.xhat.row(r).array()).mean();
      dx.row(r) = (dxhat.row(r).array() - m1 - cache.xhat.row(r).array() * m2) *
                  cache.inv_std(r);
    }
  }
  return dx;
}

MultiHeadAttention MultiHeadAttention::create(ModelParameters& p, const std::string& name,
                                              Eigen::Index d_model, Eigen::Index heads,
                                              std::mt19937_64& rng) {
  require(heads >= 1 && d_model % heads == 0, "d_model must be divisible by num_heads");
  MultiHeadAttention a;
  a.heads = heads;
  a.d_model = d_model;
  a.q = Linear::create(p, name + ".query", d_model, d_model, rng);
  a.k = Linear::create(p, name + ".key", d_model, d_model, rng);
  a.v = Linear::create(p, name + ".value", d_model, d_model, rng);
  a.o = Linear::create(p, name + ".out", d_model, d_model, rng);
  return a;
}

Mat MultiHeadAttention::forward(const ModelParameters& p, const Mat& x, TokenGrid grid,
                                AttentionAxis axis, Cache& cache) const {
  require(x.rows() == grid.rows() && x.rows() >= 1, "attention token count mismatch");
  require(x.cols() == d_model, "attention width mismatch");
  const Eigen::Index dk = d_model / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  cache.x = x;
  cache.q = q.forward(p, x);
  cache.k = k.forward(p, x);
  cache.v = v.forward(p, x);
  cache.context.setZero(x.rows(), d_model);
  const Eigen::Index groups = num_groups(grid, axis);
  cache.probs.assign(static_cast<std::size_t>(groups * heads), Mat());
  for (Eigen::Index gi = 0; gi < groups; ++gi) {
    const auto rows = group_rows(grid, axis, gi);
    for (Eigen::Index h = 0; h < heads; ++h) {
      const auto cols = Eigen::seqN(h * dk, dk);
      const Mat qg = cache.q(seq(rows), cols);
      const Mat kg = cache.k(seq(rows), cols);
      const Mat vg = cache.v(seq(rows), cols);
      Mat s = (qg * kg.transpose()) * scale;
      for (Eigen::Index r = 0; r < s.rows(); ++r) {
        const double mx = s.row(r).maxCoeff();
        s.row(r) = (s.row(r).array() - mx).exp();
        s.row(r) /= s.row(r).sum();
      }
      cache.context(seq(rows), cols) = s * vg;
      cache.probs[static_cast<std::size_t>(gi * heads + h)] = std::move(s);
    }
  }
  return o.forward(p, cache.context);
}

Mat MultiHeadAttention::backward(const ModelParameters& p, const Cache& cache,
                                 TokenGrid grid, AttentionAxis axis, const Mat& dy,
                                 GradientSet& g) const {
  const Eigen::Index dk = d_model / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  const Mat dctx = o.backward(p, cache.context, dy, g);
  Mat dq = Mat::Zero(dy.rows(), d_model);
  Mat dk_all = Mat::Zero(dy.rows(), d_model);
  Mat dv = Mat::Zero(dy.rows(), d_model);
  const Eigen::Index groups = num_groups(grid, axis);
  for (Eigen::Index gi = 0; gi < groups; ++gi) {
    const auto rows = group_rows(grid, axis, gi);
    for (Eigen::Index h = 0; h < heads; ++h) {
      const auto cols = Eigen::seqN(h * dk, dk);
      const Mat& prob = cache.probs[static_cast<std::size_t>(gi * heads + h)];
      const Mat qg = cache.q(seq(rows), cols);
      const Mat kg = cache.k(seq(rows), cols);
      const Mat vg = cache.v(seq(rows), cols);
      const Mat dc = dctx(seq(rows), cols);
      const Mat dprob = dc * vg.transpose();
      dv(seq(rows), cols) += prob.transpose() * dc;
      Mat ds = prob.array() *
               (dprob.array().colwise() - (dprob.array() * prob.array()).rowwise().sum());
      ds *= scale;
      dq(seq(rows), cols) += ds * kg;
      dk_all(seq(rows), cols) += ds.transpose() * qg;
    }
  }
  Mat dx = q.backward(p, cache.x, dq, g);
  dx += k.backward(p, cache.x, dk_all, g);
  dx += v.backward(p, cache.x, dv, g);
  return dx;
}

FeedForward FeedForward::create(ModelParameters& p, const std::string& name,
                                Eigen::Index d, Eigen::Index hidden,
                                std::mt19937_64& rng) {
  FeedForward f;
  f.l1 = Linear::create(p, name + ".fc1", d, hidden, rng);
  f.l2 = Linear::create(p, name + ".fc2", hidden, d, rng);
  return f;
}

Mat FeedForward::forward(const ModelParameters& p, const Mat& x, Cache& cache) const {
  cache.x = x;
  cache.pre = l1.forward(p, x);
  cache.hidden = cache.pre.cwiseMax(0.0);
  return l2.forward(p, cache.hidden);
}

Mat FeedForward::backward(const ModelParameters& p, const Cache& cache, const Mat& dy,
                          GradientSet& g) const {
  Mat dh = l2.backward(p, cache.hidden, dy, g);
  dh.array() *= (cache.pre.array() > 0.0).cast<double>();
  return l1.backward(p, cache.x, dh, g);
}

EncoderLayer EncoderLayer::create(ModelParameters& p, const std::string& name,
                                  Eigen::Index d_model, Eigen::Index heads,
                                  Eigen::Index ffn_hidden, AttentionAxis axis,
                                  std::mt19937_64& rng) {
  EncoderLayer e;
  e.axis = axis;
  e.attn = MultiHeadAttention::create(p, name + ".attn", d_model, heads, rng);
  e.norm1 = LayerNorm::create(p, name + ".norm1", d_model);
  e.ffn = FeedForward::create(p, name + ".ffn", d_model, ffn_hidden, rng);
  e.norm2 = LayerNorm::create(p, name + ".norm2", d_model);
  return e;
}

Mat EncoderLayer::forward(const ModelParameters& p, const Mat& x, TokenGrid grid,
                          Cache& cache) const {
  const Mat a = attn.forward(p, x, grid, axis, cache.attn);
  const Mat y1 = norm1.forward(p, x + a, cache.norm1);
  const Mat f = ffn.forward(p, y1, cache.ffn);
  return norm2.forward(p, y1 + f, cache.norm2);
}

Mat EncoderLayer::backward(const ModelParameters& p, const Cache& cache, TokenGrid grid,
                           const Mat& dy, GradientSet& g) const {
  const Mat d2 = norm2.backward(p, cache.norm2, dy, g);
  const Mat dy1 = d2 + ffn.backward(p, cache.ffn, d2, g);
  const Mat d1 = norm1.backward(p, cache.norm1, dy1, g);
  return d1 + attn.backward(p, cache.attn, grid, axis, d1, g);
}

Lstm Lstm::create(ModelParameters& p, const std::string& name, Eigen::Index in,
                  Eigen::Index hidden, bool reverse, std::mt19937_64& rng) {
  Lstm l;
  l.in = in;
  l.hidden = hidden;
  l.reverse = reverse;
  l.wx = p.add(name + ".wx", uniform_fan_in(in, 4 * hidden, hidden, rng));
  l.wh = p.add(name + ".wh", uniform_fan_in(hidden, 4 * hidden, hidden, rng));
  l.bias = p.add(name + ".bias", uniform_fan_in(1, 4 * hidden, hidden, rng));
  return l;
}

Mat Lstm::forward(const ModelParameters& p, const Mat& x, Cache& cache) const {
  require(x.cols() == in, "LSTM input width mismatch");
  const Eigen::Index steps = x.rows(), H = hidden;
  cache.x = x;
  Mat z = x * p.value(wx);
  z.rowwise() += p.value(bias).row(0);
  cache.gates.resize(steps, 4 * H);
  cache.cell.resize(steps, H);
  cache.cell_tanh.resize(steps, H);
  cache.h.resize(steps, H);
  const Mat& Wh = p.value(wh);
  RowVec h_prev = RowVec::Zero(H), c_prev = RowVec::Zero(H);
  for (Eigen::Index s = 0; s < steps; ++s) {
    const Eigen::Index t = reverse ? steps - 1 - s : s;
    RowVec a = z.row(t);
    a.noalias() += h_prev * Wh;
    for (Eigen::Index j = 0; j < H; ++j) {
      a(j) = sigmoid(a(j));
      a(H + j) = sigmoid(a(H + j));
      a(2 * H + j) = std::tanh(a(2 * H + j));
      a(3 * H + j) = sigmoid(a(3 * H + j));
    }
    RowVec c = a.segment(H, H).cwiseProduct(c_prev) +
               a.segment(0, H).cwiseProduct(a.segment(2 * H, H));
    RowVec ct = c.array().tanh();
    RowVec h = a.segment(3 * H, H).cwiseProduct(ct);
    cache.gates.row(t) = a;
    cache.cell.row(t) = c;
    cache.cell_tanh.row(t) = ct;
    cache.h.row(t) = h;
    h_prev = std::move(h);
    c_prev = std::move(c);
  }
  return cache.h;
}

Mat Lstm::backward(const ModelParameters& p, const Cache& cache, const Mat& dh_out,
                   GradientSet& g) const {
  const Eigen::Index steps = cache.x.rows(), H = hidden;
  const Mat& Wh = p.value(wh);
  Mat dz(steps, 4 * H);
  RowVec dh_next = RowVec::Zero(H), dc_next = RowVec::Zero(H);
  for (Eigen::Index s = steps - 1; s >= 0; --s) {
    const Eigen::Index t = reverse ? steps - 1 - s : s;
    const bool has_prev = s > 0;
    const Eigen::Index tp = reverse ? t + 1 : t - 1;
    const auto gi = cache.gates.row(t).segment(0, H).array();
    const auto gf = cache.gates.row(t).segment(H, H).array();
    const auto gg = cache.gates.row(t).segment(2 * H, H).array();
    const auto go = cache.gates.row(t).segment(3 * H, H).array();
    const auto ct = cache.cell_tanh.row(t).array();
    const RowVec dh = dh_out.row(t) + dh_next;
    const RowVec dc = (dh.array() * go * (1.0 - ct.square())).matrix() + dc_next;
    const RowVec c_prev = has_prev ? RowVec(cache.cell.row(tp)) : RowVec::Zero(H);
    dz.row(t).segment(0, H) = dc.array() * gg * gi * (1.0 - gi);
    dz.row(t).segment(H, H) = dc.array() * c_prev.array() * gf * (1.0 - gf);
    dz.row(t).segment(2 * H, H) = dc.array() * gi * (1.0 - gg.square());
    dz.row(t).segment(3 * H, H) = dh.array() * ct * go * (1.0 - go);
    dc_next = dc.array() * gf;
    if (has_prev) g[wh].noalias() += cache.h.row(tp).transpose() * dz.row(t);
    dh_next.noalias() = dz.row(t) * Wh.transpose();
  }
  g[wx].noalias() += cache.x.transpose() * dz;
  g[bias] += dz.colwise().sum();
  return dz * p.value(wx).transpose();
}

BiLstm BiLstm::create(ModelParameters& p, const std::string& name, Eigen::Index in,
                      Eigen::Index hidden, std::mt19937_64& rng) {
  BiLstm b;
  b.fwd = Lstm::create(p, name + ".fwd", in, hidden, false, rng);
  b.bwd = Lstm::create(p, name + ".bwd", in, hidden, true, rng);
  return b;
}

Mat BiLstm::forward(const ModelParameters& p, const Mat& x, Cache& cache) const {
  const Eigen::Index H = fwd.hidden;
  Mat y(x.rows(), 2 * H);
  y.leftCols(H) = fwd.forward(p, x, cache.fwd);
  y.rightCols(H) = bwd.forward(p, x, cache.bwd);
  return y;
}

Mat BiLstm::backward(const ModelParameters& p, const Cache& cache, const Mat& dy,
                     GradientSet& g) const {
  const Eigen::Index H = fwd.hidden;
  Mat dx = fwd.backward(p, cache.fwd, dy.leftCols(H), g);
  dx += bwd.backward(p, cache.bwd, dy.rightCols(H), g);
  return dx;
}

Mat channel_mean_pool(const Mat& x, TokenGrid grid) {
  require(grid.channels >= 1 && x.rows() == grid.rows(), "mean pool shape mismatch");
  Mat y = Mat::Zero(grid.frames, x.cols());
  for (Eigen::Index c = 0; c < grid.channels; ++c)
    y += x.middleRows(c * grid.frames, grid.frames);
  return y / static_cast<double>(grid.channels);
}

Mat channel_mean_pool_backward(const Mat& dy, TokenGrid grid) {
  Mat dx(grid.rows(), dy.cols());
  const double inv = 1.0 / static_cast<double>(grid.channels);
  for (Eigen::Index c = 0; c < grid.channels; ++c)
    dx.middleRows(c * grid.frames, grid.frames) = dy * inv;
  return dx;
}

}  // namespace acss::nn
