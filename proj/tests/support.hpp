// Copyright 2026 The adhoc-css Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "audio.hpp"
#include "dsp.hpp"

namespace acss::testing {

inline std::vector<double> random_signal(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> x(n);
  for (double& v : x) v = g(rng);
  return x;
}

inline RealGrid random_grid(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed,
                            double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  RealGrid g(rows, cols);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = u(rng);
  return g;
}

inline std::vector<double> tone(std::size_t n, double freq, int rate = kDefaultSampleRate,
                                double amp = 0.5, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i)
    x[i] = amp * std::sin(2.0 * 3.14159265358979323846 * freq * i / rate + phase);
  return x;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b,
                           std::size_t begin = 0, std::size_t end = std::string::npos) {
  end = std::min({end, a.size(), b.size()});
  double m = 0.0;
  for (std::size_t i = begin; i < end; ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("acss_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace acss::testing
