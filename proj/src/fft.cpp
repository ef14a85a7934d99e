// Copyright 2026 The adhoc-css Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "fft.hpp"

#include <algorithm>
#include <unsupported/Eigen/FFT>

#include "common.hpp"

namespace acss {

namespace {

// Eigen's FFT object caches twiddle plans and is not thread-safe.
Eigen::FFT<double>& engine() {
  thread_local Eigen::FFT<double> fft = [] {
    Eigen::FFT<double> f;
    f.SetFlag(Eigen::FFT<double>::HalfSpectrum);
    return f;
  }();
  return fft;
}

}  // namespace

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::vector<cdouble> rfft(std::span<const double> x, std::size_t n) {
  require(n >= 2 && n % 2 == 0, "rfft length must be even and >= 2");
  std::vector<double> buf(n, 0.0);
  std::copy_n(x.begin(), std::min(n, x.size()), buf.begin());
  std::vector<cdouble> out;
  engine().fwd(out, buf);
  out.resize(n / 2 + 1);
  return out;
}

std::vector<double> irfft(std::span<const cdouble> spectrum, std::size_t n) {
  require(n >= 2 && n % 2 == 0, "irfft length must be even and >= 2");
  require(spectrum.size() == n / 2 + 1, "irfft spectrum size mismatch");
  std::vector<cdouble> in(spectrum.begin(), spectrum.end());
  std::vector<double> out;
  engine().inv(out, in, static_cast<Eigen::Index>(n));
  out.resize(n);
  return out;
}

std::vector<double> fft_convolve(std::span<const double> a,
                                 std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  const std::size_t len = a.size() + b.size() - 1;
  const std::size_t n = std::max<std::size_t>(2, next_pow2(len));
  auto fa = rfft(a, n);
  auto fb = rfft(b, n);
  for (std::size_t k = 0; k < fa.size(); ++k) fa[k] *= fb[k];
  auto y = irfft(fa, n);
  y.resize(len);
  return y;
}

std::vector<double> cross_correlate(std::span<const double> ref,
                                    std::span<const double> other,
                                    std::size_t max_lag) {
  // r[lag] = sum_n ref[n] other[n + lag] is the convolution of reversed ref
  // with other, evaluated at index (|ref| - 1) + lag.
  const std::size_t len = ref.size() + other.size() - 1;
  const std::size_t n = std::max<std::size_t>(2, next_pow2(len));
  std::vector<double> rev(ref.rbegin(), ref.rend());
  auto fa = rfft(rev, n);
  auto fb = rfft(other, n);
  for (std::size_t k = 0; k < fa.size(); ++k) fa[k] *= fb[k];
  auto full = irfft(fa, n);
  std::vector<double> r(2 * max_lag + 1, 0.0);
  const auto zero = static_cast<std::ptrdiff_t>(ref.size()) - 1;
  for (std::size_t k = 0; k < r.size(); ++k) {
    std::ptrdiff_t idx = zero + static_cast<std::ptrdiff_t>(k) -
                         static_cast<std::ptrdiff_t>(max_lag);
    if (idx >= 0 && idx < static_cast<std::ptrdiff_t>(len)) r[k] = full[idx];
  }
  return r;
}

}  // namespace acss
