// Scaled modified Bessel functions (implementation).
//
// Copyright (c) 2026 The stpde authors
// SPDX-License-Identifier: MIT

#include "stpde/bessel.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace stpde {

namespace {

constexpr double kSeriesCut = 20.0;  // below: power series, above: recurrence
constexpr double kRescaleAt = 1e280;
constexpr double kRescaleBy = 1e-280;

// exp(-r) * sum_k (r/2)^{n+2k} / (k! (n+k)!), summed in log space for the
// leading term so large n cannot overflow the intermediate.
double series_scaled(long n, double r) {
  if (r == 0.0) return n == 0 ? 1.0 : 0.0;
  const double log_t0 =
      static_cast<double>(n) * std::log(0.5 * r) - std::lgamma(n + 1.0) - r;
  if (log_t0 < -745.0) return 0.0;  // below double underflow
  double term = std::exp(log_t0);
  double sum = term;
  const double q = 0.25 * r * r;
  for (long k = 1; k < 400; ++k) {
    term *= q / (static_cast<double>(k) * static_cast<double>(n + k));
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return sum;
}

// Backward (Miller) recurrence for all scaled orders 0..nmax at once.
// Start above both the order range and the Gaussian decay scale of
// exp(-r) I_k(r) ~ exp(-k^2 / 2r), so the contamination of the trial start
// is below 1e-16 relative; normalize by I_0 + 2 sum_k I_k = e^r, which in
// scaled form reads  b_0 + 2 sum_{k>=1} b_k = 1.
std::vector<double> recurrence_row(long nmax, double r) {
  const double m_sq =
      static_cast<double>(nmax) * static_cast<double>(nmax) + 40.0 * r;
  const long M = static_cast<long>(std::ceil(std::sqrt(m_sq))) + 20;

  std::vector<double> row(static_cast<std::size_t>(nmax) + 1, 0.0);
  double p_up = 0.0;    // trial value at order k+1
  double p_cur = 1e-30; // trial value at order k
  double sum = 0.0;     // accumulates p_0 + 2 sum_{k>=1} p_k
  for (long k = M; k >= 0; --k) {
    if (k <= nmax) row[static_cast<std::size_t>(k)] = p_cur;
    sum += (k == 0) ? p_cur : 2.0 * p_cur;
    if (k > 0) {
      const double p_down = p_up + (2.0 * static_cast<double>(k) / r) * p_cur;
      p_up = p_cur;
      p_cur = p_down;
      if (p_cur > kRescaleAt) {
        p_cur *= kRescaleBy;
        p_up *= kRescaleBy;
        sum *= kRescaleBy;
        for (double& v : row) v *= kRescaleBy;
      }
    }
  }
  const double inv = 1.0 / sum;
  for (double& v : row) v *= inv;
  return row;
}

}  // namespace

double scaled_bessel_i(long n, double r) {
  if (!(r >= 0.0))
    throw std::invalid_argument("scaled_bessel_i: r must be >= 0");
  n = std::labs(n);  // I_{-n} = I_n
  if (r == 0.0) return n == 0 ? 1.0 : 0.0;
  if (r <= kSeriesCut) return series_scaled(n, r);
  // Far above the Gaussian decay scale the value underflows; skip the
  // recurrence (row allocation up to n would be wasted work).
  if (static_cast<double>(n) * static_cast<double>(n) > 2.0 * r * 800.0)
    return 0.0;
  return recurrence_row(n, r)[static_cast<std::size_t>(n)];
}

std::vector<double> scaled_bessel_i_row(long nmax, double r) {
  if (nmax < 0)
    throw std::invalid_argument("scaled_bessel_i_row: nmax must be >= 0");
  if (!(r >= 0.0))
    throw std::invalid_argument("scaled_bessel_i_row: r must be >= 0");
  if (r == 0.0) {
    std::vector<double> row(static_cast<std::size_t>(nmax) + 1, 0.0);
    row[0] = 1.0;
    return row;
  }
  if (r <= kSeriesCut) {
    std::vector<double> row(static_cast<std::size_t>(nmax) + 1, 0.0);
    for (long n = 0; n <= nmax; ++n)
      row[static_cast<std::size_t>(n)] = series_scaled(n, r);
    return row;
  }
  return recurrence_row(nmax, r);
}

std::vector<double> scaled_bessel_i_row_periodic(double r, long n_entries,
                                                 long period) {
  if (n_entries < 1)
    throw std::invalid_argument(
        "scaled_bessel_i_row_periodic: n_entries must be >= 1");
  if (period < 2)
    throw std::invalid_argument(
        "scaled_bessel_i_row_periodic: period must be >= 2");
  if (!(r >= 0.0))
    throw std::invalid_argument(
        "scaled_bessel_i_row_periodic: r must be >= 0");
  // Image shells out to 8 sqrt(r): the scaled row decays like
  // exp(-n^2 / 2r) / sqrt(2 pi r), so the first neglected image is below
  // 1e-14 of the peak.
  const long n_img =
      static_cast<long>(std::ceil(8.0 * std::sqrt(r) / period)) + 1;
  const long nmax = n_img * period + n_entries;
  if (nmax > 10000000)
    throw std::invalid_argument(
        "scaled_bessel_i_row_periodic: r too large for this period");
  const std::vector<double> raw = scaled_bessel_i_row(nmax, r);
  std::vector<double> out(static_cast<std::size_t>(n_entries));
  for (long q = 0; q < n_entries; ++q) {
    double s = raw[static_cast<std::size_t>(q)];
    for (long m = 1; m <= n_img; ++m) {
      s += raw[static_cast<std::size_t>(std::labs(m * period - q))];
      s += raw[static_cast<std::size_t>(m * period + q)];
    }
    out[static_cast<std::size_t>(q)] = s;
  }
  return out;
}

}  // namespace stpde
