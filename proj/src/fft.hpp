// Copyright 2026 The adhoc-css Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace acss {

using cdouble = std::complex<double>;

// Real-input FFT of length n (input zero-padded or truncated to n).
// Returns the n/2 + 1 non-negative frequency bins.
std::vector<cdouble> rfft(std::span<const double> x, std::size_t n);

// Inverse of rfft; output length n, scaled by 1/n.
std::vector<double> irfft(std::span<const cdouble> spectrum, std::size_t n);

std::size_t next_pow2(std::size_t n);

// Full linear convolution, length |a| + |b| - 1.
std::vector<double> fft_convolve(std::span<const double> a,
                                 std::span<const double> b);

// r[k] = sum_n ref[n] * other[n + lag] for lag = k - max_lag,
// lag in [-max_lag, max_lag].
std::vector<double> cross_correlate(std::span<const double> ref,
                                    std::span<const double> other,
                                    std::size_t max_lag);

}  // namespace acss
