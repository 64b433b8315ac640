#pragma once

// Deterministic Monte Carlo reductions.  Per-path results are collected into
// an array indexed by path id and reduced with a fixed-shape pairwise sum, so
// the totals are bit-identical for any worker count and any completion order.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace stpde {

/// Pairwise (cascade) summation with a fixed recursion shape.
inline double pairwise_sum(const double* x, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

inline double pairwise_sum(const std::vector<double>& x) {
  return pairwise_sum(x.data(), x.size());
}

struct SampleStats {
  std::size_t count = 0;
  double mean = 0.0;
  double stderr_mean = 0.0;  ///< sqrt(sample variance / count)
};

/// Two-pass mean and standard error of the mean (sample variance with the
/// n-1 divisor; zero standard error when fewer than two samples).
inline SampleStats sample_stats(const std::vector<double>& x) {
  SampleStats s;
  s.count = x.size();
  if (x.empty()) return s;
  s.mean = pairwise_sum(x) / static_cast<double>(x.size());
  if (x.size() < 2) return s;
  std::vector<double> dev(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - s.mean;
    dev[i] = d * d;
  }
  const double var =
      pairwise_sum(dev) / static_cast<double>(x.size() - 1);
  s.stderr_mean = std::sqrt(var / static_cast<double>(x.size()));
  return s;
}

}  // namespace stpde
