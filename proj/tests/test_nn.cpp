// Copyright 2026 The adhoc-css Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <doctest.h>

#include <cmath>

#include "common.hpp"
#include "nn/checkpoint.hpp"
#include "nn/network.hpp"
#include "support.hpp"
#include "gradcheck.hpp"

using namespace acss;
using namespace acss::nn;

namespace {

Mat random_mat(Eigen::Index r, Eigen::Index c, std::uint64_t seed, double scale = 1.0) {
  return acss::testing::random_grid(r, c, seed, -scale, scale);
}

// Scaled dot-product attention over explicit index lists, one head at a time.
Mat naive_attention(const Mat& x, const ModelParameters& p, const MultiHeadAttention& a,
                    TokenGrid grid, AttentionAxis axis) {
  const Eigen::Index d = a.d_model, dk = d / a.heads;
  auto lin = [&](const Linear& l, const Mat& in) {
    Mat y(in.rows(), l.out);
    for (Eigen::Index r = 0; r < in.rows(); ++r)
      for (Eigen::Index o = 0; o < l.out; ++o) {
        double s = p.value(l.bias)(0, o);
        for (Eigen::Index i = 0; i < l.in; ++i) s += in(r, i) * p.value(l.weight)(i, o);
        y(r, o) = s;
      }
    return y;
  };
  const Mat q = lin(a.q, x), k = lin(a.k, x), v = lin(a.v, x);
  Mat ctx = Mat::Zero(x.rows(), d);
  std::vector<std::vector<Eigen::Index>> groups;
  if (axis == AttentionAxis::kFrame) {
    for (Eigen::Index c = 0; c < grid.channels; ++c) {
      groups.emplace_back();
      for (Eigen::Index t = 0; t < grid.frames; ++t) groups.back().push_back(c * grid.frames + t);
    }
  } else {
    for (Eigen::Index t = 0; t < grid.frames; ++t) {
      groups.emplace_back();
      for (Eigen::Index c = 0; c < grid.channels; ++c) groups.back().push_back(c * grid.frames + t);
    }
  }
  for (const auto& g : groups)
    for (Eigen::Index h = 0; h < a.heads; ++h)
      for (Eigen::Index i : g) {
        std::vector<double> w;
        double mx = -1e300;
        for (Eigen::Index j : g) {
          double s = 0.0;
          for (Eigen::Index e = 0; e < dk; ++e) s += q(i, h * dk + e) * k(j, h * dk + e);
          s /= std::sqrt(static_cast<double>(dk));
          w.push_back(s);
          mx = std::max(mx, s);
        }
        double z = 0.0;
        for (double& s : w) z += (s = std::exp(s - mx));
        for (std::size_t n = 0; n < g.size(); ++n)
          for (Eigen::Index e = 0; e < dk; ++e) ctx(i, h * dk + e) += w[n] / z * v(g[n], h * dk + e);
      }
  return lin(a.o, ctx);
}

Mat naive_layer_norm(const Mat& x, const RowVec& gain, const RowVec& bias) {
  Mat y(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    double mean = 0.0, var = 0.0;
    for (Eigen::Index c = 0; c < x.cols(); ++c) mean += x(r, c);
    mean /= x.cols();
    for (Eigen::Index c = 0; c < x.cols(); ++c) var += (x(r, c) - mean) * (x(r, c) - mean);
    var = std::max(var / x.cols(), 1e-5);
    for (Eigen::Index c = 0; c < x.cols(); ++c)
      y(r, c) = (x(r, c) - mean) / std::sqrt(var) * gain(c) + bias(c);
  }
  return y;
}

double sigm(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// Step-by-step LSTM with explicit gate arithmetic.
Mat naive_lstm(const Mat& x, const ModelParameters& p, const Lstm& l) {
  const Eigen::Index H = l.hidden, T = x.rows();
  const Mat& wx = p.value(l.wx);
  const Mat& wh = p.value(l.wh);
  const Mat& b = p.value(l.bias);
  std::vector<double> h(H, 0.0), c(H, 0.0);
  Mat out(T, H);
  for (Eigen::Index s = 0; s < T; ++s) {
    const Eigen::Index t = l.reverse ? T - 1 - s : s;
    std::vector<double> z(4 * H);
    for (Eigen::Index j = 0; j < 4 * H; ++j) {
      double v = b(0, j);
      for (Eigen::Index i = 0; i < x.cols(); ++i) v += x(t, i) * wx(i, j);
      for (Eigen::Index i = 0; i < H; ++i) v += h[i] * wh(i, j);
      z[j] = v;
    }
    for (Eigen::Index j = 0; j < H; ++j) {
      const double ig = sigm(z[j]), fg = sigm(z[H + j]), gg = std::tanh(z[2 * H + j]),
                   og = sigm(z[3 * H + j]);
      c[j] = fg * c[j] + ig * gg;
      h[j] = og * std::tanh(c[j]);
      out(t, j) = h[j];
    }
  }
  return out;
}

MagnitudeTensor random_input(std::size_t C, Eigen::Index T, Eigen::Index F, std::uint64_t seed) {
  MagnitudeTensor x;
  for (std::size_t c = 0; c < C; ++c)
    x.channels.push_back(acss::testing::random_grid(T, F, seed + c, 0.0, 2.0));
  return x;
}

}  // namespace

TEST_CASE("attention matches the naive oracle on both axes") {
  ModelParameters p;
  std::mt19937_64 rng(1);
  const auto a = MultiHeadAttention::create(p, "att", 8, 2, rng);
  const TokenGrid grid{3, 5};
  const Mat x = random_mat(grid.rows(), 8, 2);
  for (auto axis : {AttentionAxis::kFrame, AttentionAxis::kChannel}) {
    MultiHeadAttention::Cache cache;
    const Mat y = a.forward(p, x, grid, axis, cache);
    CHECK((y - naive_attention(x, p, a, grid, axis)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("encoder layer is post-norm attention plus feed-forward") {
  ModelParameters p;
  std::mt19937_64 rng(3);
  const auto layer = EncoderLayer::create(p, "enc", 8, 4, 32, AttentionAxis::kFrame, rng);
  p.mutable_value(layer.norm1.gain) = random_mat(1, 8, 4);
  p.mutable_value(layer.norm2.bias) = random_mat(1, 8, 5);
  const TokenGrid grid{2, 4};
  const Mat x = random_mat(grid.rows(), 8, 6);
  const Mat y = multihead_self_attention(p, layer, x, grid);

  const Mat y1 = naive_layer_norm(x + naive_attention(x, p, layer.attn, grid, layer.axis),
                                  p.value(layer.norm1.gain), p.value(layer.norm1.bias));
  Mat hidden = y1 * p.value(layer.ffn.l1.weight);
  hidden.rowwise() += p.value(layer.ffn.l1.bias).row(0);
  hidden = hidden.cwiseMax(0.0);
  Mat f = hidden * p.value(layer.ffn.l2.weight);
  f.rowwise() += p.value(layer.ffn.l2.bias).row(0);
  const Mat expect =
      naive_layer_norm(y1 + f, p.value(layer.norm2.gain), p.value(layer.norm2.bias));
  CHECK((y - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("global normalization floors the variance") {
  Mat x = random_mat(3, 9, 8);
  x.row(1).setConstant(0.25);  // zero variance
  const RowVec g = random_mat(1, 9, 9), b = random_mat(1, 9, 10);
  const Mat y = global_normalize(x, g, b);
  CHECK((y - naive_layer_norm(x, g, b)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((y.row(1) - b).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("bidirectional LSTM matches a step-by-step oracle") {
  ModelParameters p;
  std::mt19937_64 rng(11);
  const auto rnn = BiLstm::create(p, "rnn", 5, 3, rng);
  const Mat x = random_mat(7, 5, 12);
  const Mat y = bidirectional_recurrent(p, rnn, x);
  REQUIRE(y.cols() == 6);
  CHECK((y.leftCols(3) - naive_lstm(x, p, rnn.fwd)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((y.rightCols(3) - naive_lstm(x, p, rnn.bwd)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("separation gradients match finite differences") {
  NetConfig cfg = acss::testing::tiny_separation_config();
  SpatioTemporalNet net(cfg);
  const auto x = random_input(2, 6, cfg.num_bins, 21);
  const auto r = acss::testing::gradient_check(net, x, 31);
  MESSAGE("max relative error " << r.max_rel_error << " over " << r.checked << " entries");
  CHECK(r.checked == net.params().num_elements());
  CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("counting gradients match finite differences") {
  for (auto head : {CountHead::kVad, CountHead::kCount}) {
    NetConfig cfg = acss::testing::tiny_separation_config();
    cfg.cross_channel = false;
    cfg.head = head;
    SpatioTemporalNet net(cfg);
    const auto x = random_input(1, 6, cfg.num_bins, 41);
    const auto r = acss::testing::gradient_check(net, x, 51);
    CHECK(r.max_rel_error < 1e-4);
  }
}

TEST_CASE("masks are invariant to the order of input channels") {
  NetConfig cfg = NetConfig::separation_defaults();
  cfg.num_bins = 33;
  SpatioTemporalNet net(cfg);
  const auto x = random_input(3, 12, 33, 61);
  const auto base = net.forward(x).masks;
  const std::vector<std::array<int, 3>> perms{{0, 2, 1}, {1, 0, 2}, {2, 1, 0}, {1, 2, 0}};
  for (const auto& perm : perms) {
    MagnitudeTensor y;
    for (int c : perm) y.channels.push_back(x.channels[c]);
    const auto m = net.forward(y).masks;
    for (int i = 0; i < 2; ++i) CHECK((m[i] - base[i]).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("outputs have the documented ranges and shapes") {
  NetConfig cfg = NetConfig::counting_defaults(CountHead::kVad);
  cfg.num_bins = 17;
  SpatioTemporalNet net(cfg);
  MagnitudeTensor x = random_input(1, 9, 17, 3);
  x.channels[0] *= 50.0;
  const auto out = net.forward(x);
  CHECK(out.head.rows() == 9);
  CHECK(out.head.cols() == 2);
  CHECK(out.head.minCoeff() > 0.0);
  CHECK(out.head.maxCoeff() < 1.0);
  CHECK(out.masks[0].minCoeff() >= 0.0);
  CHECK_THROWS_AS(net.forward(random_input(2, 9, 17, 4)), Error);
}

TEST_CASE("network configuration is validated") {
  NetConfig cfg = NetConfig::separation_defaults();
  cfg.num_heads = 3;
  CHECK_THROWS_AS(SpatioTemporalNet{cfg}, Error);
  NetConfig c2 = NetConfig::counting_defaults(CountHead::kCount);
  c2.cross_channel = true;
  CHECK_THROWS_AS(SpatioTemporalNet{c2}, Error);
  CHECK(NetConfig::counting_defaults(CountHead::kVad).num_blocks == 3);
  const NetConfig full = NetConfig::separation_full_scale();
  CHECK(full.d_model == 128);
  CHECK(full.num_heads == 8);
  CHECK(full.rnn_cells == 512);
}

TEST_CASE("a stale cache is refused") {
  NetConfig cfg = acss::testing::tiny_separation_config();
  SpatioTemporalNet net(cfg);
  const auto x = random_input(2, 4, cfg.num_bins, 5);
  SpatioTemporalNet::Cache cache;
  const auto out = net.forward(x, cache);
  net.params().bump_version();
  GradientSet g = net.params().zeros_like();
  try {
    net.backward(cache, out.masks, nullptr, g);
    FAIL("expected a state error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kState);
  }
}

TEST_CASE("non-finite activations name the failing layer") {
  NetConfig cfg = acss::testing::tiny_separation_config();
  SpatioTemporalNet net(cfg);
  net.params().mutable_value(net.params().index("embed.weight"))(0, 0) = std::nan("");
  try {
    net.forward(random_input(2, 4, cfg.num_bins, 5));
    FAIL("expected a numeric error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNumeric);
    CHECK(std::string(e.what()).find("embed") != std::string::npos);
  }
}

TEST_CASE("checkpoint round trip is bit exact") {
  for (auto head : {CountHead::kNone, CountHead::kVad, CountHead::kCount}) {
    NetConfig cfg = head == CountHead::kNone ? NetConfig::separation_defaults()
                                             : NetConfig::counting_defaults(head);
    cfg.num_bins = 17;
    cfg.seed = 77;
    SpatioTemporalNet net(cfg);
    const auto bytes = serialize(net);
    CHECK(bytes.substr(0, 8) == "ACSSCKPT");
    const SpatioTemporalNet back = deserialize(bytes);
    CHECK(serialize(back) == bytes);
    const auto x = random_input(head == CountHead::kNone ? 2 : 1, 5, 17, 8);
    const auto a = net.forward(x), b = back.forward(x);
    for (int i = 0; i < 2; ++i) CHECK(a.masks[i] == b.masks[i]);
    CHECK(a.head == b.head);
    CHECK(back.config().head == head);
  }
}

TEST_CASE("checkpoint files round trip and corrupt files are rejected") {
  const auto dir = acss::testing::scratch_dir("ckpt");
  NetConfig cfg = acss::testing::tiny_separation_config();
  SpatioTemporalNet net(cfg);
  save_checkpoint(dir / "a.ckpt", net);
  const auto back = load_checkpoint(dir / "a.ckpt");
  CHECK(serialize(back) == serialize(net));
  std::string bytes = serialize(net);
  CHECK_THROWS_AS(deserialize(bytes.substr(0, bytes.size() / 2)), Error);
  std::string bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(deserialize(bad), Error);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt"), Error);
}

TEST_CASE("initialization is seed controlled") {
  NetConfig cfg = acss::testing::tiny_separation_config();
  cfg.seed = 5;
  const SpatioTemporalNet a(cfg), b(cfg);
  CHECK(serialize(a) == serialize(b));
  cfg.seed = 6;
  const SpatioTemporalNet c(cfg);
  CHECK(serialize(a) != serialize(c));
}
