// Copyright 2026 The adhoc-css Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "evaluation.hpp"

#include <algorithm>
#include <cmath>

#include "common.hpp"

namespace acss {

namespace {

double clamp_db(double ratio) {
  if (!(ratio > 0.0)) return -kMetricCapDb;
  if (std::isinf(ratio)) return kMetricCapDb;
  return std::clamp(10.0 * std::log10(ratio), -kMetricCapDb, kMetricCapDb);
}

}  // namespace

double si_snr(std::span<const double> est, std::span<const double> ref) {
  require(est.size() == ref.size(), "si_snr needs equal lengths");
  double rr = 0.0, er = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    rr += ref[i] * ref[i];
    er += est[i] * ref[i];
  }
  require(rr > 0.0, "si_snr reference is silent");
  const double a = er / rr;
  double target = 0.0, residual = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double t = a * ref[i];
    target += t * t;
    residual += (est[i] - t) * (est[i] - t);
  }
  if (residual == 0.0) return target > 0.0 ? kMetricCapDb : -kMetricCapDb;
  return clamp_db(target / residual);
}

AssignmentScore best_assignment_si_snr(const std::array<AudioClip, 2>& streams,
                                       const std::vector<AudioClip>& refs) {
  require(refs.size() == 1 || refs.size() == 2, "expected one or two references");
  double s[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
  for (std::size_t r = 0; r < refs.size(); ++r)
    for (std::size_t k = 0; k < 2; ++k) s[r][k] = si_snr(streams[k], refs[r]);
  AssignmentScore out;
  if (refs.size() == 1) {
    const std::size_t k = s[0][1] > s[0][0] ? 1 : 0;
    out.stream = {k};
    out.si_snr_db = {s[0][k]};
    out.mean_db = s[0][k];
    out.identity_mean_db = s[0][0];
    return out;
  }
  const double id = s[0][0] + s[1][1], sw = s[0][1] + s[1][0];
  if (sw > id) {
    out.stream = {1, 0};
    out.si_snr_db = {s[0][1], s[1][0]};
  } else {
    out.stream = {0, 1};
    out.si_snr_db = {s[0][0], s[1][1]};
  }
  out.mean_db = std::max(id, sw) / 2.0;
  out.identity_mean_db = id / 2.0;
  return out;
}

double duplication_leakage(const std::array<AudioClip, 2>& streams,
                           const std::vector<Interval>& intervals) {
  require(!intervals.empty(), "duplication leakage needs at least one interval");
  require(streams[0].size() == streams[1].size(), "streams differ in length");
  double e[2] = {0.0, 0.0};
  for (const auto& [b, end] : intervals) {
    require(b < end && end <= streams[0].size(), "interval outside the session");
    for (int k = 0; k < 2; ++k)
      for (std::size_t i = b; i < end; ++i) e[k] += streams[k].samples[i] * streams[k].samples[i];
  }
  const double lo = std::min(e[0], e[1]), hi = std::max(e[0], e[1]);
  if (hi == 0.0) return -kMetricCapDb;
  return clamp_db(lo / hi);
}

CountingMetrics counting_metrics(const std::vector<bool>& decisions,
                                 const std::vector<bool>& labels) {
  require(decisions.size() == labels.size(), "decision and label series differ in length");
  CountingMetrics m;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i])
      decisions[i] ? ++m.true_multi : ++m.false_single;
    else
      decisions[i] ? ++m.false_multi : ++m.true_single;
  }
  const std::size_t multi = m.true_multi + m.false_single;
  const std::size_t single = m.true_single + m.false_multi;
  if (!labels.empty())
    m.accuracy = static_cast<double>(m.true_multi + m.true_single) /
                 static_cast<double>(labels.size());
  if (single > 0) m.false_multi_rate = static_cast<double>(m.false_multi) / single;
  if (multi > 0) m.false_single_rate = static_cast<double>(m.false_single) / multi;
  return m;
}

}  // namespace acss
