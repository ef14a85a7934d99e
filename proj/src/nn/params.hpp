// Copyright 2026 The adhoc-css Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace acss::nn {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic>;

// One gradient matrix per parameter, in parameter order.
using GradientSet = std::vector<Mat>;

// Named tensors in insertion order with matching gradient buffers. The
// version counter changes whenever values are replaced wholesale or
// updated by an optimizer, which lets activation caches detect staleness.
class ModelParameters {
 public:
  std::size_t add(std::string name, Mat init);

  std::size_t size() const { return values_.size(); }
  std::size_t index(std::string_view name) const;
  bool contains(std::string_view name) const;
  const std::string& name(std::size_t i) const { return names_[i]; }

  const Mat& value(std::size_t i) const { return values_[i]; }
  Mat& mutable_value(std::size_t i) { return values_[i]; }
  const std::vector<Mat>& values() const { return values_; }

  GradientSet& grads() { return grads_; }
  const GradientSet& grads() const { return grads_; }
  void zero_grad();
  GradientSet zeros_like() const;

  std::uint64_t version() const { return version_; }
  void bump_version() { ++version_; }

  std::size_t num_elements() const;
  bool all_finite() const;

 private:
  std::vector<std::string> names_;
  std::vector<Mat> values_;
  GradientSet grads_;
  std::unordered_map<std::string, std::size_t> lookup_;
  std::uint64_t version_ = 0;
};

void accumulate(GradientSet& into, const GradientSet& from, double scale = 1.0);
void scale(GradientSet& g, double s);
double squared_norm(const GradientSet& g);

// U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
Mat uniform_fan_in(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in,
                   std::mt19937_64& rng);

}  // namespace acss::nn
