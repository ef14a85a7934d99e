// Copyright 2026 The adhoc-css Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "counting.hpp"

#include <cmath>

#include <algorithm>

#include "common.hpp"
#include "training.hpp"

namespace acss {

using nn::CountHead;
using nn::Mat;

void validate(const DecisionRule& rule) {
  require(rule.run_length >= 1, "run_length must be >= 1", ErrorCode::kConfig);
  require(rule.vad_threshold > 0.0 && rule.vad_threshold < 1.0,
          "vad_threshold must be in (0, 1)", ErrorCode::kConfig);
  require(std::isfinite(rule.count_threshold), "count_threshold must be finite",
          ErrorCode::kConfig);
}

nn::SpatioTemporalNet::Output count_forward(const nn::SpatioTemporalNet& net,
                                            const MagnitudeTensor& x) {
  require(net.config().head != CountHead::kNone, "model has no counting head");
  require(x.num_channels() == 1, "counting models take exactly one channel, got " +
                                     std::to_string(x.num_channels()));
  return net.forward(x);
}

CountLoss count_loss(CountHead head, const Mat& head_out,
                     const std::array<std::vector<int>, 2>& activity,
                     const std::vector<int>& count_labels, const MaskPair& masks,
                     const RealGrid& mix_mag, const std::array<RealGrid, 2>& ref_mags,
                     bool with_grad) {
  require(head != CountHead::kNone, "count_loss needs a counting head");
  const Eigen::Index T = head_out.rows();
  CountLoss r;
  const PitResult sep = pit_mse_loss(masks, mix_mag, ref_mags, with_grad);
  r.separation = sep.loss;
  r.sep_permutation = sep.permutation;

  if (head == CountHead::kVad) {
    require(head_out.cols() == 2, "s1 head output must have two columns");
    Mat labels(T, 2);
    for (int i = 0; i < 2; ++i) {
      require(static_cast<Eigen::Index>(activity[i].size()) == T,
              "activity label length does not match the head output");
      for (Eigen::Index t = 0; t < T; ++t) {
        const int a = activity[i][static_cast<std::size_t>(t)];
        require(a == 0 || a == 1, "activity labels must be 0 or 1");
        labels(t, i) = a;
      }
    }
    const double n = 2.0 * static_cast<double>(T);
    auto loss_of = [&](Permutation p) {
      double s = 0.0;
      for (int i = 0; i < 2; ++i) s += (head_out.col(i) - labels.col(p[i])).squaredNorm();
      return s / n;
    };
    const double id = loss_of(kIdentityPerm), sw = loss_of(kSwapPerm);
    r.vad_permutation = sw < id ? kSwapPerm : kIdentityPerm;
    r.counting = std::min(id, sw);
    if (with_grad) {
      r.head_grad.resize(T, 2);
      for (int i = 0; i < 2; ++i)
        r.head_grad.col(i) =
            (0.5 * 2.0 / n) * (head_out.col(i) - labels.col(r.vad_permutation[i]));
    }
  } else {
    require(head_out.cols() == 1, "s2 head output must have one column");
    require(static_cast<Eigen::Index>(count_labels.size()) == T,
            "count label length does not match the head output");
    Eigen::VectorXd labels(T);
    for (Eigen::Index t = 0; t < T; ++t) {
      const int c = count_labels[static_cast<std::size_t>(t)];
      require(c >= 0 && c <= 2, "count labels must lie in {0, 1, 2}, got " + std::to_string(c));
      labels(t) = c;
    }
    const Eigen::VectorXd diff = head_out.col(0) - labels;
    r.counting = diff.squaredNorm() / static_cast<double>(T);
    if (with_grad) r.head_grad = (0.5 * 2.0 / static_cast<double>(T)) * diff;
  }
  r.total = 0.5 * r.counting + 0.5 * r.separation;
  if (with_grad)
    for (int i = 0; i < 2; ++i) r.mask_grad[i] = 0.5 * sep.grad[i];
  return r;
}

std::size_t longest_active_run(const Mat& head_out, const DecisionRule& rule, CountHead head) {
  require(head != CountHead::kNone, "decision needs a counting head");
  require(head_out.cols() == (head == CountHead::kVad ? 2 : 1),
          "head output width does not match the head kind");
  std::size_t best = 0, run = 0;
  for (Eigen::Index t = 0; t < head_out.rows(); ++t) {
    const bool active = head == CountHead::kVad
                            ? head_out(t, 0) > rule.vad_threshold &&
                                  head_out(t, 1) > rule.vad_threshold
                            : head_out(t, 0) > rule.count_threshold;
    run = active ? run + 1 : 0;
    best = std::max(best, run);
  }
  return best;
}

bool decide_multi_speaker(const Mat& head_out, const DecisionRule& rule, CountHead head) {
  return longest_active_run(head_out, rule, head) >= rule.run_length;
}

MergedPair merge_outputs(const AudioClip& a, const AudioClip& b) {
  require(a.size() == b.size(), "merge_outputs needs equal lengths");
  MergedPair out;
  out.merged.sample_rate = out.zeros.sample_rate = a.sample_rate;
  out.merged.samples.resize(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out.merged.samples[i] = a.samples[i] + b.samples[i];
  out.zeros.samples.assign(a.size(), 0.0);
  return out;
}

}  // namespace acss
