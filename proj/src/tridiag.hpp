// Internal factored tridiagonal solver with an optional cyclic (periodic
// wrap-around) correction via a rank-one Woodbury update. Not installed;
// shared by the implicit time steppers.
//
// Copyright (c) 2026 The stpde authors
// SPDX-License-Identifier: MIT

#ifndef STPDE_SRC_TRIDIAG_HPP
#define STPDE_SRC_TRIDIAG_HPP

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace stpde::internal {

/// Solves A x = b for a fixed tridiagonal A across many right-hand sides.
/// Fill sub/dia/sup (sub[0] and sup[n-1] ignored) plus the two wrap-around
/// corners, call factor() once, then solve() per right-hand side.
class TriBand {
 public:
  std::vector<double> sub, dia, sup;
  double corner_top = 0.0;  ///< A(0, n-1)
  double corner_bot = 0.0;  ///< A(n-1, 0)

  void factor() {
    const std::size_t n = dia.size();
    if (n < 2 || sub.size() != n || sup.size() != n)
      throw std::invalid_argument("TriBand: bands must share size >= 2");
    cyclic_ = corner_top != 0.0 || corner_bot != 0.0;
    if (cyclic_) {
      if (n < 3)
        throw std::invalid_argument("TriBand: cyclic form needs n >= 3");
      gamma_ = -dia[0];
      vn_ = corner_top / gamma_;
      dia[0] -= gamma_;
      dia[n - 1] -= corner_bot * vn_;
    }
    cp_.assign(n, 0.0);
    inv_.assign(n, 0.0);
    inv_[0] = 1.0 / dia[0];
    cp_[0] = sup[0] * inv_[0];
    for (std::size_t i = 1; i < n; ++i) {
      inv_[i] = 1.0 / (dia[i] - sub[i] * cp_[i - 1]);
      cp_[i] = sup[i] * inv_[i];
    }
    if (cyclic_) {
      std::vector<double> u(n, 0.0);
      u[0] = gamma_;
      u[n - 1] = corner_bot;
      z_.resize(n);
      plain_solve(u.data(), z_.data());
      denom_ = 1.0 + z_[0] + vn_ * z_[n - 1];
    }
  }

  /// In-place solve: x holds the right-hand side on entry, the solution on
  /// exit.  The pointer form expects dia.size() contiguous values.
  void solve(double* x) const {
    const std::size_t n = dia.size();
    work_.resize(n);
    plain_solve(x, work_.data());
    if (cyclic_) {
      const double fac = (work_[0] + vn_ * work_[n - 1]) / denom_;
      for (std::size_t i = 0; i < n; ++i) work_[i] -= fac * z_[i];
    }
    std::copy(work_.begin(), work_.end(), x);
  }

  void solve(std::vector<double>& x) const { solve(x.data()); }

 private:
  void plain_solve(const double* rhs, double* x) const {
    const std::size_t n = dia.size();
    x[0] = rhs[0] * inv_[0];
    for (std::size_t i = 1; i < n; ++i)
      x[i] = (rhs[i] - sub[i] * x[i - 1]) * inv_[i];
    for (std::size_t i = n - 1; i-- > 0;) x[i] -= cp_[i] * x[i + 1];
  }

  std::vector<double> cp_, inv_, z_;
  double gamma_ = 0.0, vn_ = 0.0, denom_ = 1.0;
  bool cyclic_ = false;
  mutable std::vector<double> work_;
};

}  // namespace stpde::internal

#endif  // STPDE_SRC_TRIDIAG_HPP
