// Variable-coefficient kernel by the parametrix construction
// (implementation).
//
// Copyright (c) 2026 The stpde authors
// SPDX-License-Identifier: MIT

#include "stpde/parametrix.hpp"

#include <cmath>
#include <stdexcept>

#include "stpde/bessel.hpp"
#include "stpde/heat_kernel.hpp"

namespace stpde {

VariableCoefficients VariableCoefficients::build(
    const GridSpec& spec, std::vector<GridFunction> comps) {
  spec.validate();
  if (static_cast<int>(comps.size()) != spec.dim)
    throw std::invalid_argument(
        "VariableCoefficients: need one coefficient field per axis");
  VariableCoefficients vc;
  vc.spec = spec;
  vc.c = std::move(comps);
  vc.eps_min = std::numeric_limits<double>::infinity();
  for (const GridFunction& cj : vc.c) {
    if (!(cj.spec() == spec))
      throw std::invalid_argument("VariableCoefficients: spec mismatch");
    for (std::size_t i = 0; i < cj.size(); ++i)
      vc.eps_min = std::min(vc.eps_min, cj[i]);
  }
  for (const GridFunction& cj : vc.c)
    for (int axis = 0; axis < spec.dim; ++axis)
      vc.lipschitz_bound =
          std::max(vc.lipschitz_bound, forward_diff(cj, axis).max_abs());
  vc.validate();
  return vc;
}

void VariableCoefficients::validate() const {
  spec.validate();
  if (static_cast<int>(c.size()) != spec.dim)
    throw std::invalid_argument("VariableCoefficients: component count");
  if (!(eps_min > 0.0))
    throw std::invalid_argument(
        "VariableCoefficients: coefficients must be uniformly positive");
}

double VariableCoefficients::max_coeff() const {
  double m = 0.0;
  for (const GridFunction& cj : c) m = std::max(m, cj.max_abs());
  return m;
}

double TimeKernel::step() const {
  if (times.size() < 2)
    throw std::invalid_argument("TimeKernel: need at least two mesh points");
  const double h = times[1] - times[0];
  for (std::size_t k = 1; k + 1 < times.size(); ++k)
    if (std::abs((times[k + 1] - times[k]) - h) > 1e-12 * std::abs(h))
      throw std::invalid_argument("TimeKernel: mesh is not uniform");
  return h;
}

const Kernel2& TimeKernel::at_time(double t) const {
  for (std::size_t k = 0; k < times.size(); ++k)
    if (std::abs(times[k] - t) <= 1e-10 * std::max(1.0, std::abs(t)))
      return frames[k];
  throw std::invalid_argument("TimeKernel: t is not a mesh point");
}

void TimeKernel::validate() const {
  if (times.size() != frames.size())
    throw std::invalid_argument("TimeKernel: times/frames size mismatch");
  (void)step();
}

namespace {

// Distance class of an axis offset on the periodic ring Z_P, P = 2N+1:
// the result lies in 0..N.
int ring_distance(int off, int period) {
  int o = off % period;
  if (o < 0) o += period;
  return std::min(o, period - o);
}

// Shared builder for the frozen kernel and the correction kernel: both need
// per-column scaled Bessel rows at r_j = c_j(beta) t / dx^2 (the frozen
// diffusion is c(beta)/2, and r = 2 (c/2) t / dx^2). Offsets along an axis
// reach 2N+1 because the second difference looks one cell beyond the box.
// Under periodic boundaries the row is folded over the images
// a_per(o) = sum_m a(o + m P) so the kernel matches the ring generator.
void build_frozen_pair(const VariableCoefficients& vc, double t, Kernel2* F,
                       Kernel2* K) {
  const GridSpec& spec = vc.spec;
  const int d = spec.dim;
  const double dx = spec.dx;
  const double amp = 1.0 / spec.cell_volume();
  const bool periodic = spec.boundary == Boundary::Periodic;
  const int period = spec.points_per_axis();
  const long nmax_box = 2L * spec.radius + 1;

  std::vector<std::vector<double>> rows(static_cast<std::size_t>(d));
  std::vector<MultiIndex> cell_index(spec.cell_count());
  for_each_cell(spec, [&](std::size_t i, const MultiIndex& alpha) {
    cell_index[i] = alpha;
  });

  for (std::size_t b = 0; b < spec.cell_count(); ++b) {
    const MultiIndex& beta = cell_index[b];
    for (int j = 0; j < d; ++j) {
      const double r = vc.c[static_cast<std::size_t>(j)][b] * t / (dx * dx);
      rows[static_cast<std::size_t>(j)] =
          periodic ? scaled_bessel_i_row_periodic(r, spec.radius + 2, period)
                   : scaled_bessel_i_row(nmax_box, r);
    }

    // row lookup by raw axis offset (folding handled above)
    const auto row_at = [&](int j, int off) {
      const std::vector<double>& row = rows[static_cast<std::size_t>(j)];
      const int q = periodic ? ring_distance(off, period) : std::abs(off);
      return row[static_cast<std::size_t>(q)];
    };

    for (std::size_t a = 0; a < spec.cell_count(); ++a) {
      const MultiIndex& alpha = cell_index[a];
      double prod = amp;
      for (int j = 0; j < d; ++j) prod *= row_at(j, alpha[j] - beta[j]);
      if (F != nullptr) (*F)(a, b) = prod;
      if (K != nullptr) {
        double acc = 0.0;
        for (int j = 0; j < d; ++j) {
          const double dc = vc.c[static_cast<std::size_t>(j)][a] -
                            vc.c[static_cast<std::size_t>(j)][b];
          if (dc == 0.0) continue;
          const int off = alpha[j] - beta[j];
          double leave_one_out = amp;
          for (int l = 0; l < d; ++l)
            if (l != j) leave_one_out *= row_at(l, alpha[l] - beta[l]);
          const double d2 = (row_at(j, off + 1) - 2.0 * row_at(j, off) +
                             row_at(j, off - 1)) /
                            (dx * dx);
          acc += 0.5 * dc * leave_one_out * d2;
        }
        (*K)(a, b) = acc;
      }
    }
  }
}

Kernel2 zero_kernel(const GridSpec& spec) { return Kernel2(spec); }

}  // namespace

Kernel2 frozen_kernel(const VariableCoefficients& coeffs, double t) {
  coeffs.validate();
  if (!(t >= 0.0) || !std::isfinite(t))
    throw std::invalid_argument("frozen_kernel: t must be >= 0 and finite");
  Kernel2 F(coeffs.spec);
  if (t == 0.0) {
    const double amp = 1.0 / coeffs.spec.cell_volume();
    for (std::size_t i = 0; i < coeffs.spec.cell_count(); ++i) F(i, i) = amp;
    return F;
  }
  build_frozen_pair(coeffs, t, &F, nullptr);
  return F;
}

Kernel2 assemble_correction(const VariableCoefficients& coeffs, double t) {
  coeffs.validate();
  if (!(t > 0.0) || !std::isfinite(t))
    throw std::invalid_argument(
        "assemble_correction: t must be > 0 (the t -> 0 limit is provided "
        "by correction_zero_limit)");
  Kernel2 K(coeffs.spec);
  build_frozen_pair(coeffs, t, nullptr, &K);
  return K;
}

Kernel2 correction_zero_limit(const VariableCoefficients& coeffs) {
  coeffs.validate();
  const GridSpec& spec = coeffs.spec;
  Kernel2 K(spec);
  const double w =
      0.5 / (spec.cell_volume() * spec.dx * spec.dx);  // 1/(2 dx^{d+2})
  GridFunction helper(spec);
  for_each_cell(spec, [&](std::size_t a, const MultiIndex& alpha) {
    for (int j = 0; j < spec.dim; ++j) {
      for (int s = -1; s <= 1; s += 2) {
        // beta = alpha - s e_j, honoring the exterior rule
        const std::size_t b = helper.neighbor_index(a, alpha[j], j, -s);
        if (b == GridFunction::npos) continue;
        K(a, b) = (coeffs.c[static_cast<std::size_t>(j)][a] -
                   coeffs.c[static_cast<std::size_t>(j)][b]) *
                  w;
      }
    }
  });
  return K;
}

TimeKernel assemble_correction_mesh(const VariableCoefficients& coeffs,
                                    double T, int n_frames) {
  if (!(T > 0.0) || n_frames < 2)
    throw std::invalid_argument(
        "assemble_correction_mesh: need T > 0, n_frames >= 2");
  const double h = T / n_frames;
  TimeKernel tk;
  tk.times.reserve(static_cast<std::size_t>(n_frames));
  tk.frames.reserve(static_cast<std::size_t>(n_frames));
  for (int k = 1; k <= n_frames; ++k) {
    tk.times.push_back(h * k);
    tk.frames.push_back(assemble_correction(coeffs, h * k));
  }
  return tk;
}

double time_mixed_norm(const TimeKernel& tk, double p_alpha, double q_beta,
                       TimeQuad quad, const Kernel2* zero) {
  const double h = tk.step();
  const bool has_zero_node = tk.times.front() == 0.0;
  if (quad == TimeQuad::Trapezoid && !has_zero_node && zero == nullptr)
    throw std::invalid_argument(
        "time_mixed_norm: trapezoid rule needs the t = 0 frame");

  std::vector<double> g;
  g.reserve(tk.frames.size() + 1);
  if (!has_zero_node)
    g.push_back(zero != nullptr
                    ? mixed_norm(*zero, p_alpha, q_beta, MixedOrder::AlphaOuter)
                    : 0.0);
  for (const Kernel2& f : tk.frames)
    g.push_back(mixed_norm(f, p_alpha, q_beta, MixedOrder::AlphaOuter));

  const std::size_t n = g.size();  // nodes t = 0 .. T (first may stand in)
  double acc = 0.0;
  if (quad == TimeQuad::LeftRect) {
    // left endpoints 0 .. T-h; if the t = 0 frame is unavailable the [0, h)
    // sliver is dropped (mesh-starts-at-h convention)
    std::size_t k0 = (!has_zero_node && zero == nullptr) ? 1 : 0;
    for (std::size_t k = k0; k + 1 < n; ++k) acc += g[k];
    return acc * h;
  }
  for (std::size_t k = 0; k < n; ++k)
    acc += (k == 0 || k + 1 == n) ? 0.5 * g[k] : g[k];
  return acc * h;
}

NeumannResult neumann_phi(const VariableCoefficients& coeffs,
                          const TimeKernel& correction, const Kernel2& k_zero,
                          double p, double tol, int m_max, TimeQuad quad) {
  coeffs.validate();
  if (!(p > coeffs.spec.dim))
    throw std::invalid_argument("neumann_phi: requires p > dim");
  if (!(tol > 0.0) || m_max < 1)
    throw std::invalid_argument("neumann_phi: bad tol or m_max");
  const double p_conj = std::isinf(p) ? 1.0 : p / (p - 1.0);
  const double h = correction.step();

  NeumannResult res;
  res.phi.times = correction.times;
  res.phi.frames = correction.frames;  // m = 1 term
  res.m_used = 1;

  double prev_norm = time_mixed_norm(correction, kInf, p_conj, quad, &k_zero);
  res.last_increment = prev_norm;
  if (prev_norm < tol) {
    res.converged = true;
    res.contraction_ratio = 0.0;
    return res;
  }

  TimeKernel cur;
  cur.times = correction.times;
  cur.frames = correction.frames;
  Kernel2 cur_zero = k_zero;
  const Kernel2 none = zero_kernel(coeffs.spec);

  for (int m = 2; m <= m_max; ++m) {
    TimeKernel next;
    next.times = correction.times;
    next.frames = convolve2_time(correction.frames, cur.frames, h, quad,
                                 &k_zero, &cur_zero);
    const Kernel2* next_zero = &none;  // K^(m) vanishes at t = 0 for m >= 2
    const double norm = time_mixed_norm(next, kInf, p_conj, quad, next_zero);
    res.contraction_ratio = norm / prev_norm;
    res.m_used = m;
    res.last_increment = norm;
    for (std::size_t k = 0; k < res.phi.frames.size(); ++k)
      res.phi.frames[k].matrix() += next.frames[k].matrix();
    if (norm < tol) {
      res.converged = true;
      return res;
    }
    if (res.contraction_ratio >= 1.0 && m >= 4)
      throw std::runtime_error(
          "neumann_phi: series is not contracting; split the time interval "
          "(see choose_t0)");
    cur = std::move(next);
    cur_zero = none;
    prev_norm = norm;
  }
  throw std::runtime_error(
      "neumann_phi: increment above tol after m_max terms; split the time "
      "interval (see choose_t0)");
}

double choose_t0(const VariableCoefficients& coeffs, double t_hint,
                 int n_frames, TimeQuad quad, double* out_factor) {
  if (!(t_hint > 0.0))
    throw std::invalid_argument("choose_t0: t_hint must be > 0");
  const Kernel2 k_zero = correction_zero_limit(coeffs);
  double T = t_hint;
  for (int it = 0; it < 40; ++it) {
    TimeKernel K = assemble_correction_mesh(coeffs, T, n_frames);
    const double factor = time_mixed_norm(K, kInf, 1.0, quad, &k_zero);
    if (factor < 0.5) {
      if (out_factor != nullptr) *out_factor = factor;
      return T;
    }
    T *= 0.5;
  }
  throw std::runtime_error("choose_t0: no contracting interval found");
}

TimeKernel assemble_gamma(const VariableCoefficients& coeffs, double T,
                          int n_frames, double p, double tol, TimeQuad quad,
                          NeumannResult* info) {
  coeffs.validate();
  if (!(T > 0.0) || n_frames < 2)
    throw std::invalid_argument("assemble_gamma: need T > 0, n_frames >= 2");
  const double h = T / n_frames;

  const Kernel2 k_zero = correction_zero_limit(coeffs);
  TimeKernel K = assemble_correction_mesh(coeffs, T, n_frames);
  NeumannResult neumann =
      neumann_phi(coeffs, K, k_zero, p, tol, /*m_max=*/64, quad);
  K.frames.clear();  // free before the frozen frames go live

  // frozen kernel on the same mesh, plus its Dirac frame at t = 0
  std::vector<Kernel2> F;
  F.reserve(static_cast<std::size_t>(n_frames));
  for (int k = 1; k <= n_frames; ++k)
    F.push_back(frozen_kernel(coeffs, h * k));
  const Kernel2 F0 = frozen_kernel(coeffs, 0.0);

  // When the coefficients are (numerically) constant the whole series is
  // below tolerance after its first term; skip the F ** Phi pass, whose
  // contribution is bounded by ||F|| ||Phi|| and therefore negligible.
  const bool phi_negligible = neumann.converged && neumann.m_used == 1 &&
                              neumann.last_increment <= std::min(tol, 1e-10);
  std::vector<Kernel2> corr;
  if (!phi_negligible)
    corr = convolve2_time(F, neumann.phi.frames, h, quad, &F0, &k_zero);

  TimeKernel gamma;
  gamma.times.reserve(static_cast<std::size_t>(n_frames) + 1);
  gamma.frames.reserve(static_cast<std::size_t>(n_frames) + 1);
  gamma.times.push_back(0.0);
  gamma.frames.push_back(F0);
  for (int k = 1; k <= n_frames; ++k) {
    gamma.times.push_back(h * k);
    Kernel2 frame = std::move(F[static_cast<std::size_t>(k - 1)]);
    if (!phi_negligible)
      frame.matrix() += corr[static_cast<std::size_t>(k - 1)].matrix();
    gamma.frames.push_back(std::move(frame));
  }
  if (info != nullptr) *info = std::move(neumann);
  return gamma;
}

Kernel2 propagate_gamma(const TimeKernel& gamma_base, int k, double t) {
  if (k < 0) throw std::invalid_argument("propagate_gamma: k must be >= 0");
  Kernel2 out = gamma_base.at_time(t);
  const Kernel2& full = gamma_base.frames.back();
  for (int i = 0; i < k; ++i) out = convolve2(out, full);
  return out;
}

Kernel2 apply_generator_rows(const VariableCoefficients& coeffs,
                             const Kernel2& K) {
  const GridSpec& spec = coeffs.spec;
  if (!(K.spec() == spec))
    throw std::invalid_argument("apply_generator_rows: spec mismatch");
  Kernel2 out(spec);
  GridFunction helper(spec);
  const double inv2 = 1.0 / (spec.dx * spec.dx);
  const Eigen::Index n = static_cast<Eigen::Index>(spec.cell_count());
  for_each_cell(spec, [&](std::size_t a, const MultiIndex& alpha) {
    for (int j = 0; j < spec.dim; ++j) {
      const double w = 0.5 * coeffs.c[static_cast<std::size_t>(j)][a] * inv2;
      const std::size_t up_row = helper.neighbor_index(a, alpha[j], j, +1);
      const std::size_t dn_row = helper.neighbor_index(a, alpha[j], j, -1);
      for (Eigen::Index b = 0; b < n; ++b) {
        const double center = K(a, static_cast<std::size_t>(b));
        const double up = up_row == GridFunction::npos
                              ? 0.0
                              : K(up_row, static_cast<std::size_t>(b));
        const double dn = dn_row == GridFunction::npos
                              ? 0.0
                              : K(dn_row, static_cast<std::size_t>(b));
        out(a, static_cast<std::size_t>(b)) += w * (up - 2.0 * center + dn);
      }
    }
  });
  return out;
}

double gamma_ode_residual(const VariableCoefficients& coeffs,
                          const TimeKernel& gamma, std::size_t i) {
  if (i == 0 || i + 1 >= gamma.frames.size())
    throw std::invalid_argument("gamma_ode_residual: need an interior frame");
  const double h = gamma.step();
  Kernel2 gen = apply_generator_rows(coeffs, gamma.frames[i]);
  double worst = 0.0;
  const auto& up = gamma.frames[i + 1].matrix();
  const auto& dn = gamma.frames[i - 1].matrix();
  const auto& g = gen.matrix();
  for (Eigen::Index r = 0; r < up.rows(); ++r)
    for (Eigen::Index c = 0; c < up.cols(); ++c) {
      const double res = (up(r, c) - dn(r, c)) / (2.0 * h) - g(r, c);
      worst = std::max(worst, std::abs(res));
    }
  return worst;
}

std::vector<GridFunction> duhamel_variable(
    const TimeKernel& gamma, const GridFunction& psi0,
    const std::vector<GridFunction>& f_frames, TimeQuad quad) {
  gamma.validate();
  if (gamma.times.front() != 0.0)
    throw std::invalid_argument(
        "duhamel_variable: gamma mesh must include t = 0");
  if (!f_frames.empty() && f_frames.size() != gamma.times.size())
    throw std::invalid_argument(
        "duhamel_variable: source needs one frame per mesh time");
  const double h = gamma.step();
  const std::size_t n = gamma.times.size();

  std::vector<GridFunction> psi;
  psi.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    GridFunction v = kernel_apply(gamma.frames[i], psi0);
    if (!f_frames.empty()) {
      for (std::size_t k = 0; k <= i; ++k) {
        double w;
        if (quad == TimeQuad::LeftRect)
          w = (k < i) ? h : 0.0;
        else
          w = (k == 0 || k == i) ? 0.5 * h : h;
        if (w == 0.0 || i == 0) continue;
        GridFunction contrib = kernel_apply(gamma.frames[i - k], f_frames[k]);
        contrib *= w;
        v += contrib;
      }
    }
    psi.push_back(std::move(v));
  }
  return psi;
}

void validate_duhamel_exponents(double p, double q, int dim) {
  if (!(p > static_cast<double>(dim)))
    throw std::invalid_argument(
        "duhamel exponents: require p > dim (spatial integrability)");
  const double qterm = std::isinf(q) ? 0.0 : 2.0 / q;
  if (!(qterm + static_cast<double>(dim) / p < 1.0))
    throw std::invalid_argument(
        "duhamel exponents: require 2/q + dim/p < 1 (this implies the "
        "weaker variable-coefficient condition 1/q + dim/2p < 1)");
}

}  // namespace stpde
