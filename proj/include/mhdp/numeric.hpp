// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

namespace mhdp {

inline double log_gamma(double x) {
#if defined(__GLIBC__)
  int sign = 0;
  return ::lgamma_r(x, &sign);  // lgamma() writes the global signgam.
#else
  return std::lgamma(x);
#endif
}

inline double log_sum_exp(std::span<const double> xs) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double x : xs) hi = std::max(hi, x);
  if (!std::isfinite(hi)) return hi;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - hi);
  return hi + std::log(s);
}

// log prod_{i=0}^{n-1} (a + i * step), a > 0, step >= 0.
inline double log_rising(double a, double step, long n) {
  if (n <= 0) return 0.0;
  if (step == 0.0) return static_cast<double>(n) * std::log(a);
  if (n <= 16) {
    double p = 1.0;
    for (long i = 0; i < n; ++i) p *= a + static_cast<double>(i) * step;
    return std::log(p);
  }
  const double b = a / step;
  return static_cast<double>(n) * std::log(step) + log_gamma(b + n) -
         log_gamma(b);
}

// log of n! / prod_i counts[i]!.
template <class Int>
double log_multinomial_coefficient(std::span<const Int> counts) {
  long n = 0;
  double s = 0.0;
  for (Int c : counts) {
    n += static_cast<long>(c);
    s -= log_gamma(static_cast<double>(c) + 1.0);
  }
  return s + log_gamma(static_cast<double>(n) + 1.0);
}

// Scales in place to sum to one; returns the original sum.
inline double normalize(std::span<double> p) {
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  if (total > 0.0) {
    for (double& x : p) x /= total;
  }
  return total;
}

// Mean and sample standard deviation.
struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
  std::size_t n = 0;
};

inline MeanSd mean_sd(std::span<const double> xs) {
  MeanSd r;
  r.n = xs.size();
  if (xs.empty()) return r;
  double s = 0.0;
  for (double x : xs) s += x;
  r.mean = s / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double v = 0.0;
    for (double x : xs) v += (x - r.mean) * (x - r.mean);
    r.sd = std::sqrt(v / static_cast<double>(xs.size() - 1));
  }
  return r;
}

}  // namespace mhdp
