// Copyright 2026 The adhoc-css Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Central-difference gradient check of an entire network against a random
// linear functional of its outputs.

#pragma once

#include <cmath>

#include "nn/network.hpp"
#include "support.hpp"

namespace acss::testing {

inline nn::NetConfig tiny_separation_config() {
  nn::NetConfig cfg;
  cfg.num_bins = 9;
  cfg.d_model = 8;
  cfg.num_heads = 2;
  cfg.num_blocks = 2;
  cfg.rnn_cells = 4;
  cfg.ffn_mult = 4;
  cfg.seed = 13;
  return cfg;
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::string worst;
};

// Relative error |a - n| / max(|a|, |n|, 1e-6); the floor keeps entries whose
// true gradient is zero from dividing rounding noise by zero.
inline GradCheckResult gradient_check(nn::SpatioTemporalNet& net, const MagnitudeTensor& x,
                                      std::uint64_t seed, double h = 1e-5) {
  const Eigen::Index T = static_cast<Eigen::Index>(x.frames());
  const Eigen::Index F = net.config().num_bins;
  const MaskPair w{random_grid(T, F, seed, -1.0, 1.0), random_grid(T, F, seed + 1, -1.0, 1.0)};
  const Eigen::Index hw = net.config().head == nn::CountHead::kNone
                              ? 0
                              : (net.config().head == nn::CountHead::kVad ? 2 : 1);
  const nn::Mat wh = hw ? nn::Mat(random_grid(T, hw, seed + 2, -1.0, 1.0)) : nn::Mat();
  auto objective = [&](const nn::SpatioTemporalNet::Output& o) {
    double v = (o.masks[0].array() * w[0].array()).sum() +
               (o.masks[1].array() * w[1].array()).sum();
    if (hw) v += (o.head.array() * wh.array()).sum();
    return v;
  };
  nn::SpatioTemporalNet::Cache cache;
  net.forward(x, cache);
  nn::GradientSet g = net.params().zeros_like();
  net.backward(cache, w, hw ? &wh : nullptr, g);

  GradCheckResult r;
  auto& p = net.params();
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (Eigen::Index k = 0; k < p.value(i).size(); ++k) {
      double& v = p.mutable_value(i).data()[k];
      const double orig = v;
      v = orig + h;
      p.bump_version();
      const double up = objective(net.forward(x));
      v = orig - h;
      p.bump_version();
      const double down = objective(net.forward(x));
      v = orig;
      p.bump_version();
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = g[i].data()[k];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
      const double rel = std::abs(analytic - numeric) / denom;
      if (rel > r.max_rel_error) {
        r.max_rel_error = rel;
        r.worst = p.name(i) + "[" + std::to_string(k) + "]";
      }
      ++r.checked;
    }
  }
  return r;
}

}  // namespace acss::testing
