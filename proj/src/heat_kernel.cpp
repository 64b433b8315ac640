// Constant-coefficient lattice heat kernel (implementation).
//
// Copyright (c) 2026 The stpde authors
// SPDX-License-Identifier: MIT

#include "stpde/heat_kernel.hpp"

#include <cmath>
#include <stdexcept>

#include "stpde/bessel.hpp"

namespace stpde {

void DiffusionDiag::validate() const {
  if (dim < 1 || dim > kMaxDim)
    throw std::invalid_argument("DiffusionDiag: dim out of range");
  for (int j = 0; j < dim; ++j)
    if (!(c[j] > 0.0) || !std::isfinite(c[j]))
      throw std::invalid_argument(
          "DiffusionDiag: coefficients must be positive and finite");
}

double DiffusionDiag::sum() const {
  double s = 0.0;
  for (int j = 0; j < dim; ++j) s += c[j];
  return s;
}

double DiffusionDiag::max() const {
  double s = 0.0;
  for (int j = 0; j < dim; ++j) s = std::max(s, c[j]);
  return s;
}

GridFunction dirac_profile(const GridSpec& spec) {
  GridFunction out(spec);
  MultiIndex zero{};
  out.at(zero) = 1.0 / spec.cell_volume();
  return out;
}

GridFunction kernel_closed(const GridSpec& spec, const DiffusionDiag& c,
                           double t) {
  spec.validate();
  c.validate();
  if (c.dim != spec.dim)
    throw std::invalid_argument("kernel_closed: dimension mismatch");
  if (!(t >= 0.0) || !std::isfinite(t))
    throw std::invalid_argument("kernel_closed: t must be >= 0 and finite");
  if (t == 0.0) return dirac_profile(spec);

  // per-axis scaled Bessel rows at r_j = 2 c_j t / dx^2; on periodic boxes
  // the profile is folded over lattice images so it matches the matrix
  // exponential of the wrapped generator exactly
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(spec.dim));
  for (int j = 0; j < spec.dim; ++j) {
    const double r = 2.0 * c.c[j] * t / (spec.dx * spec.dx);
    rows[static_cast<std::size_t>(j)] =
        spec.boundary == Boundary::Periodic
            ? scaled_bessel_i_row_periodic(r, spec.radius + 1,
                                           spec.points_per_axis())
            : scaled_bessel_i_row(spec.radius, r);
  }
  GridFunction out(spec);
  const double amp = 1.0 / spec.cell_volume();
  for_each_cell(spec, [&](std::size_t i, const MultiIndex& alpha) {
    double v = amp;
    for (int j = 0; j < spec.dim; ++j)
      v *= rows[static_cast<std::size_t>(j)]
               [static_cast<std::size_t>(std::abs(alpha[j]))];
    out[i] = v;
  });
  return out;
}

namespace {

// L f = sum_j c_j D+_j D-_j f with the spec's boundary rule.
GridFunction apply_constant_generator(const DiffusionDiag& c,
                                      const GridFunction& f) {
  GridFunction out(f.spec());
  const double inv2 = 1.0 / (f.spec().dx * f.spec().dx);
  for (int j = 0; j < f.spec().dim; ++j) {
    const double w = c.c[j] * inv2;
    for_each_cell(f.spec(), [&](std::size_t i, const MultiIndex& alpha) {
      const double p = f.neighbor(i, alpha[j], j, +1);
      const double m = f.neighbor(i, alpha[j], j, -1);
      out[i] += w * (p - 2.0 * f[i] + m);
    });
  }
  return out;
}

}  // namespace

int required_series_terms(const GridSpec& spec, const DiffusionDiag& c,
                          double t, double tol) {
  spec.validate();
  c.validate();
  if (!(t >= 0.0)) throw std::invalid_argument("required_series_terms: t < 0");
  if (!(tol > 0.0))
    throw std::invalid_argument("required_series_terms: tol must be > 0");
  // Shifted series: exp(tL) = e^{-theta} exp(t(L + lambda I)) with
  // theta = lambda t and lambda = 2 sum_j c_j / dx^2 (half the operator
  // norm 4 sum c_j / dx^2 of L; the shifted operator has norm lambda and
  // non-negative entries). Tail after n terms:
  //   e^{-theta} sum_{k>n} theta^k / k!
  //     <= e^{-theta} (theta^{n+1}/(n+1)!) * 1 / (1 - theta/(n+2)),
  // evaluated in log space.
  const double theta = 2.0 * c.sum() * t / (spec.dx * spec.dx);
  if (theta == 0.0) return 1;
  const double log_tol = std::log(tol);
  const double log_theta = std::log(theta);
  for (int n = 1; n < 100000000; ++n) {
    if (static_cast<double>(n) + 2.0 <= theta) continue;  // bound needs n+2 > theta
    const double log_head =
        -theta + (n + 1.0) * log_theta - std::lgamma(n + 2.0);
    const double log_geom = -std::log1p(-theta / (n + 2.0));
    if (log_head + log_geom < log_tol) return n;
  }
  throw std::runtime_error("required_series_terms: no order satisfies tol");
}

GridFunction kernel_series(const GridSpec& spec, const DiffusionDiag& c,
                           double t, int n_terms) {
  spec.validate();
  c.validate();
  if (c.dim != spec.dim)
    throw std::invalid_argument("kernel_series: dimension mismatch");
  if (!(t >= 0.0) || !std::isfinite(t))
    throw std::invalid_argument("kernel_series: t must be >= 0 and finite");
  if (t == 0.0) return dirac_profile(spec);
  if (n_terms < 0) n_terms = required_series_terms(spec, c, t);

  const double lambda = 2.0 * c.sum() / (spec.dx * spec.dx);
  // term_k = (t^k / k!) (L + lambda I)^k delta; all entries >= 0, so the
  // summation has no cancellation. Track a running log scale to keep the
  // accumulator in range (the final result carries e^{-lambda t}).
  GridFunction term = dirac_profile(spec);
  GridFunction acc = term;
  double log_scale = 0.0;
  for (int k = 1; k <= n_terms; ++k) {
    GridFunction lterm = apply_constant_generator(c, term);
    const double w = t / static_cast<double>(k);
    for (std::size_t i = 0; i < term.size(); ++i)
      term[i] = w * (lterm[i] + lambda * term[i]);
    acc += term;
    const double m = acc.max_abs();
    if (m > 1e250) {
      const double down = 1e-250;
      acc *= down;
      term *= down;
      log_scale += std::log(1e250);
    }
  }
  const double factor = std::exp(-lambda * t + log_scale);
  acc *= factor;
  return acc;
}

int suggested_radius(const DiffusionDiag& c, double dx, double t, double tol) {
  c.validate();
  if (!(dx > 0.0) || !(t >= 0.0) || !(tol > 0.0))
    throw std::invalid_argument("suggested_radius: bad arguments");
  const double r = 2.0 * c.max() * t / (dx * dx);
  if (r == 0.0) return 1;
  // per-axis tail mass beyond N is ~ erfc(N / sqrt(2 r)); invert by bisection
  double lo = 0.0, hi = 20.0;
  const double target = tol / static_cast<double>(c.dim);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (std::erfc(mid) > target)
      lo = mid;
    else
      hi = mid;
  }
  return static_cast<int>(std::ceil(hi * std::sqrt(2.0 * r))) + 8;
}

Kernel2 translation_kernel(const GridFunction& profile) {
  Kernel2 out(profile.spec());
  for_each_cell(profile.spec(), [&](std::size_t a, const MultiIndex& alpha) {
    for_each_cell(profile.spec(), [&](std::size_t b, const MultiIndex& beta) {
      MultiIndex diff{};
      for (int j = 0; j < profile.spec().dim; ++j)
        diff[j] = alpha[j] - beta[j];
      out(a, b) = profile.value(diff);
    });
  });
  return out;
}

DecayFit decay_exponent_fit(const GridSpec& spec, const DiffusionDiag& c,
                            int axis, int m, double p, double t_min,
                            double t_max, int n_points) {
  spec.validate();
  c.validate();
  if (axis < 0 || axis >= spec.dim)
    throw std::invalid_argument("decay_exponent_fit: axis out of range");
  if (m < 0) throw std::invalid_argument("decay_exponent_fit: m must be >= 0");
  if (!(t_min > 0.0) || !(t_max / t_min >= 100.0))
    throw std::invalid_argument(
        "decay_exponent_fit: t grid must span at least two decades");
  if (n_points < 3)
    throw std::invalid_argument("decay_exponent_fit: need >= 3 points");
  if (spec.radius < suggested_radius(c, spec.dx, t_max, 1e-12))
    throw std::invalid_argument(
        "decay_exponent_fit: lattice too small for the requested t_max "
        "(neglected tail above 1e-12)");
  const double p_conj = std::isinf(p) ? 1.0 : p / (p - 1.0);

  DecayFit fit;
  fit.t_values.reserve(static_cast<std::size_t>(n_points));
  fit.norms.reserve(static_cast<std::size_t>(n_points));
  const double ratio = std::pow(t_max / t_min, 1.0 / (n_points - 1));
  for (int k = 0; k < n_points; ++k) {
    const double t = t_min * std::pow(ratio, k);
    GridFunction a = kernel_closed(spec, c, t);
    for (int q = 0; q < m; ++q) a = forward_diff(a, axis);
    fit.t_values.push_back(t);
    fit.norms.push_back(lp_norm(a, p_conj));
  }

  // least squares in log-log coordinates
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int k = 0; k < n_points; ++k) {
    const double x = std::log(fit.t_values[static_cast<std::size_t>(k)]);
    const double y = std::log(fit.norms[static_cast<std::size_t>(k)]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(n_points);
  fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double intercept = (sy - fit.slope * sx) / n;
  for (int k = 0; k < n_points; ++k) {
    const double x = std::log(fit.t_values[static_cast<std::size_t>(k)]);
    const double y = std::log(fit.norms[static_cast<std::size_t>(k)]);
    fit.max_fit_residual = std::max(fit.max_fit_residual,
                                    std::abs(y - (fit.slope * x + intercept)));
  }
  return fit;
}

GridFunction duhamel_const(const GridSpec& spec, const DiffusionDiag& c,
                           const GridFunction& psi0,
                           const std::vector<GridFunction>& f_frames,
                           double h, int n_steps, TimeQuad quad) {
  spec.validate();
  c.validate();
  if (!(h > 0.0) || n_steps < 1)
    throw std::invalid_argument("duhamel_const: need h > 0 and n_steps >= 1");
  if (!(psi0.spec() == spec))
    throw std::invalid_argument("duhamel_const: psi0 spec mismatch");
  if (!f_frames.empty() &&
      f_frames.size() != static_cast<std::size_t>(n_steps) + 1)
    throw std::invalid_argument(
        "duhamel_const: source needs n_steps + 1 frames (t = 0 .. n h)");

  const double T = h * n_steps;
  GridFunction out = convolve(kernel_closed(spec, c, T), psi0);
  if (f_frames.empty()) return out;

  for (int k = 0; k <= n_steps; ++k) {
    const double s = h * k;
    double w;
    if (quad == TimeQuad::LeftRect)
      w = (k < n_steps) ? h : 0.0;
    else
      w = (k == 0 || k == n_steps) ? 0.5 * h : h;
    if (w == 0.0) continue;
    GridFunction contrib =
        convolve(kernel_closed(spec, c, T - s),
                 f_frames[static_cast<std::size_t>(k)]);
    contrib *= w;
    out += contrib;
  }
  return out;
}

}  // namespace stpde
