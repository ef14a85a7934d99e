// Copyright 2026 The adhoc-css Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "nn/params.hpp"

#include <cmath>

#include "common.hpp"

namespace acss::nn {

std::size_t ModelParameters::add(std::string name, Mat init) {
  require(!lookup_.contains(name), "duplicate parameter name: " + name);
  const std::size_t i = values_.size();
  lookup_.emplace(name, i);
  names_.push_back(std::move(name));
  grads_.push_back(Mat::Zero(init.rows(), init.cols()));
  values_.push_back(std::move(init));
  return i;
}

std::size_t ModelParameters::index(std::string_view name) const {
  auto it = lookup_.find(std::string(name));
  require(it != lookup_.end(), "unknown parameter: " + std::string(name));
  return it->second;
}

bool ModelParameters::contains(std::string_view name) const {
  return lookup_.contains(std::string(name));
}

void ModelParameters::zero_grad() {
  for (auto& g : grads_) g.setZero();
}

GradientSet ModelParameters::zeros_like() const {
  GradientSet g;
  g.reserve(values_.size());
  for (const auto& v : values_) g.push_back(Mat::Zero(v.rows(), v.cols()));
  return g;
}

std::size_t ModelParameters::num_elements() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += static_cast<std::size_t>(v.size());
  return n;
}

bool ModelParameters::all_finite() const {
  for (const auto& v : values_)
    if (!v.allFinite()) return false;
  return true;
}

void accumulate(GradientSet& into, const GradientSet& from, double s) {
  require(into.size() == from.size(), "gradient set size mismatch");
  for (std::size_t i = 0; i < into.size(); ++i) into[i] += s * from[i];
}

void scale(GradientSet& g, double s) {
  for (auto& m : g) m *= s;
}

double squared_norm(const GradientSet& g) {
  double n = 0.0;
  for (const auto& m : g) n += m.squaredNorm();
  return n;
}

Mat uniform_fan_in(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in,
                   std::mt19937_64& rng) {
  const double a = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> u(-a, a);
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

}  // namespace acss::nn
