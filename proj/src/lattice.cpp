// Discrete calculus on the truncated lattice (implementation).
//
// Copyright (c) 2026 The stpde authors
// SPDX-License-Identifier: MIT

#include "stpde/lattice.hpp"

#include <cmath>
#include <stdexcept>

namespace stpde {

namespace {

void check_axis(const GridSpec& spec, int axis) {
  if (axis < 0 || axis >= spec.dim)
    throw std::invalid_argument("lattice op: axis out of range");
}

void check_same_spec(const GridSpec& a, const GridSpec& b, const char* what) {
  if (!(a == b))
    throw std::invalid_argument(std::string(what) + ": mismatched grid specs");
}

// Applies fn(i, center, plus, minus) over all cells, where plus/minus are the
// boundary-aware neighbor values along `axis`.
template <typename Fn>
void stencil3(const GridFunction& f, int axis, Fn&& fn) {
  for_each_cell(f.spec(), [&](std::size_t i, const MultiIndex& alpha) {
    const double c = f[i];
    const double p = f.neighbor(i, alpha[axis], axis, +1);
    const double m = f.neighbor(i, alpha[axis], axis, -1);
    fn(i, c, p, m);
  });
}

}  // namespace

GridFunction forward_diff(const GridFunction& f, int axis) {
  check_axis(f.spec(), axis);
  GridFunction out(f.spec());
  const double inv = 1.0 / f.spec().dx;
  stencil3(f, axis, [&](std::size_t i, double c, double p, double) {
    out[i] = (p - c) * inv;
  });
  return out;
}

GridFunction backward_diff(const GridFunction& f, int axis) {
  check_axis(f.spec(), axis);
  GridFunction out(f.spec());
  const double inv = 1.0 / f.spec().dx;
  stencil3(f, axis, [&](std::size_t i, double c, double, double m) {
    out[i] = (c - m) * inv;
  });
  return out;
}

GridFunction central_diff(const GridFunction& f, int axis) {
  check_axis(f.spec(), axis);
  GridFunction out(f.spec());
  const double inv = 0.5 / f.spec().dx;
  stencil3(f, axis, [&](std::size_t i, double, double p, double m) {
    out[i] = (p - m) * inv;
  });
  return out;
}

GridFunction average_plus(const GridFunction& f, int axis) {
  check_axis(f.spec(), axis);
  GridFunction out(f.spec());
  stencil3(f, axis, [&](std::size_t i, double c, double p, double) {
    out[i] = 0.5 * (p + c);
  });
  return out;
}

GridFunction average_minus(const GridFunction& f, int axis) {
  check_axis(f.spec(), axis);
  GridFunction out(f.spec());
  stencil3(f, axis, [&](std::size_t i, double c, double, double m) {
    out[i] = 0.5 * (m + c);
  });
  return out;
}

GridFunction upwind_apply(const VectorGridFunction& V, const GridFunction& f) {
  check_same_spec(V.spec(), f.spec(), "upwind_apply");
  GridFunction out(f.spec());
  const double inv = 1.0 / f.spec().dx;
  for (int j = 0; j < f.spec().dim; ++j) {
    const GridFunction& Vj = V.comp(j);
    for_each_cell(f.spec(), [&](std::size_t i, const MultiIndex& alpha) {
      const double v = Vj[i];
      const double vp = std::max(v, 0.0);
      const double vm = std::max(-v, 0.0);
      const double c = f[i];
      const double fw = (f.neighbor(i, alpha[j], j, +1) - c) * inv;
      const double bw = (c - f.neighbor(i, alpha[j], j, -1)) * inv;
      out[i] += vp * bw - vm * fw;
    });
  }
  return out;
}

GridFunction dual_upwind_apply(const VectorGridFunction& V,
                               const GridFunction& g) {
  check_same_spec(V.spec(), g.spec(), "dual_upwind_apply");
  GridFunction out(g.spec());
  const double inv = 1.0 / g.spec().dx;
  for (int j = 0; j < g.spec().dim; ++j) {
    const GridFunction& Vj = V.comp(j);
    for_each_cell(g.spec(), [&](std::size_t i, const MultiIndex& alpha) {
      const double v = Vj[i];
      const double vjp = Vj.neighbor(i, alpha[j], j, +1);
      const double vjm = Vj.neighbor(i, alpha[j], j, -1);
      const double gp = g.neighbor(i, alpha[j], j, +1);
      const double gm = g.neighbor(i, alpha[j], j, -1);
      // forward_j(V^+ g) - backward_j(V^- g)
      out[i] += (std::max(vjp, 0.0) * gp - std::max(v, 0.0) * g[i]) * inv -
                (std::max(-v, 0.0) * g[i] - std::max(-vjm, 0.0) * gm) * inv;
    });
  }
  return out;
}

GridFunction dual_upwind_one(const VectorGridFunction& V) {
  GridFunction one(V.spec());
  one.fill(1.0);
  return dual_upwind_apply(V, one);
}

double lp_norm(const GridFunction& f, double p) {
  if (std::isinf(p)) return f.max_abs();
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1");
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    s += std::pow(std::abs(f[i]), p);
  return std::pow(f.spec().cell_volume() * s, 1.0 / p);
}

namespace {

// Discrete L^q of a contiguous strided slice.
double slice_norm(const Kernel2::Matrix& m, Eigen::Index fixed, bool row_fixed,
                  double q, double vol) {
  const Eigen::Index n = row_fixed ? m.cols() : m.rows();
  if (std::isinf(q)) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < n; ++k)
      s = std::max(s, std::abs(row_fixed ? m(fixed, k) : m(k, fixed)));
    return s;
  }
  double s = 0.0;
  for (Eigen::Index k = 0; k < n; ++k)
    s += std::pow(std::abs(row_fixed ? m(fixed, k) : m(k, fixed)), q);
  return std::pow(vol * s, 1.0 / q);
}

}  // namespace

double mixed_norm(const Kernel2& K, double p_outer, double q_inner,
                  MixedOrder order) {
  if (!std::isinf(p_outer) && !(p_outer >= 1.0))
    throw std::invalid_argument("mixed_norm: p must be >= 1");
  if (!std::isinf(q_inner) && !(q_inner >= 1.0))
    throw std::invalid_argument("mixed_norm: q must be >= 1");
  const double vol = K.spec().cell_volume();
  const bool alpha_outer = (order == MixedOrder::AlphaOuter);
  const Eigen::Index n_outer =
      alpha_outer ? K.matrix().rows() : K.matrix().cols();
  if (std::isinf(p_outer)) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < n_outer; ++k)
      s = std::max(s, slice_norm(K.matrix(), k, alpha_outer, q_inner, vol));
    return s;
  }
  double s = 0.0;
  for (Eigen::Index k = 0; k < n_outer; ++k)
    s += std::pow(slice_norm(K.matrix(), k, alpha_outer, q_inner, vol),
                  p_outer);
  return std::pow(vol * s, 1.0 / p_outer);
}

GridFunction convolve(const GridFunction& f, const GridFunction& g) {
  check_same_spec(f.spec(), g.spec(), "convolve");
  GridFunction out(f.spec());
  const double vol = f.spec().cell_volume();
  for_each_cell(f.spec(), [&](std::size_t i, const MultiIndex& alpha) {
    double s = 0.0;
    for_each_cell(g.spec(), [&](std::size_t k, const MultiIndex& eta) {
      MultiIndex diff{};
      for (int j = 0; j < f.spec().dim; ++j) diff[j] = alpha[j] - eta[j];
      s += f.value(diff) * g[k];
    });
    out[i] = s * vol;
  });
  return out;
}

Kernel2 convolve2(const Kernel2& F, const Kernel2& G) {
  check_same_spec(F.spec(), G.spec(), "convolve2");
  Kernel2 out(F.spec());
  out.matrix().noalias() = F.matrix() * G.matrix();
  out.matrix() *= F.spec().cell_volume();
  return out;
}

GridFunction kernel_apply(const Kernel2& K, const GridFunction& g) {
  check_same_spec(K.spec(), g.spec(), "kernel_apply");
  GridFunction out(g.spec());
  Eigen::Map<const Eigen::VectorXd> gv(g.data(),
                                       static_cast<Eigen::Index>(g.size()));
  Eigen::Map<Eigen::VectorXd> ov(out.data(),
                                 static_cast<Eigen::Index>(out.size()));
  ov.noalias() = K.matrix() * gv;
  ov *= K.spec().cell_volume();
  return out;
}

std::vector<Kernel2> convolve2_time(const std::vector<Kernel2>& frames_f,
                                    const std::vector<Kernel2>& frames_g,
                                    double h, TimeQuad quad,
                                    const Kernel2* zero_f,
                                    const Kernel2* zero_g) {
  if (frames_f.size() != frames_g.size())
    throw std::invalid_argument("convolve2_time: frame counts differ");
  if (frames_f.empty())
    throw std::invalid_argument("convolve2_time: empty mesh");
  if (!(h > 0.0)) throw std::invalid_argument("convolve2_time: h must be > 0");
  if (quad == TimeQuad::Trapezoid && (zero_f == nullptr || zero_g == nullptr))
    throw std::invalid_argument(
        "convolve2_time: trapezoid rule needs both t -> 0 endpoint frames");
  const GridSpec& spec = frames_f.front().spec();
  const std::size_t n = frames_f.size();
  const double vol = spec.cell_volume();

  std::vector<Kernel2> out;
  out.reserve(n);
  for (std::size_t i = 1; i <= n; ++i) {
    Kernel2 acc(spec);
    // interior nodes s = h .. (i-1) h; frame index k-1 holds t = k h
    for (std::size_t k = 1; k < i; ++k)
      acc.matrix().noalias() +=
          frames_f[i - k - 1].matrix() * frames_g[k - 1].matrix();
    acc.matrix() *= h;
    if (quad == TimeQuad::LeftRect) {
      // left endpoint s = 0 contributes F(t_i) G(0) h when G(0) is known
      if (zero_g != nullptr)
        acc.matrix().noalias() +=
            h * (frames_f[i - 1].matrix() * zero_g->matrix());
    } else {
      acc.matrix().noalias() +=
          (0.5 * h) * (frames_f[i - 1].matrix() * zero_g->matrix());
      acc.matrix().noalias() +=
          (0.5 * h) * (zero_f->matrix() * frames_g[i - 1].matrix());
    }
    acc.matrix() *= vol;
    out.push_back(std::move(acc));
  }
  return out;
}

double CalculusReport::worst_relative() const {
  double w = 0.0;
  for (std::size_t k = 0; k < residual.size(); ++k)
    w = std::max(w, residual[k] / std::max(scale[k], 1e-300));
  return w;
}

CalculusReport calculus_identity_suite(const GridFunction& f,
                                       const GridFunction& g,
                                       const VectorGridFunction& V) {
  check_same_spec(f.spec(), g.spec(), "calculus_identity_suite");
  check_same_spec(f.spec(), V.spec(), "calculus_identity_suite");
  const GridSpec& spec = f.spec();
  const double dx = spec.dx;
  const double vol = spec.cell_volume();
  CalculusReport rep;

  // (0) one-sided product rule:
  //     forward(fg) = f(.+e) forward(g) + g forward(f)
  {
    GridFunction fg(spec);
    for (std::size_t i = 0; i < f.size(); ++i) fg[i] = f[i] * g[i];
    for (int j = 0; j < spec.dim; ++j) {
      GridFunction lhs = forward_diff(fg, j);
      GridFunction df = forward_diff(f, j);
      GridFunction dg = forward_diff(g, j);
      for_each_cell(spec, [&](std::size_t i, const MultiIndex& alpha) {
        const double fp = f.neighbor(i, alpha[j], j, +1);
        const double rhs = fp * dg[i] + g[i] * df[i];
        rep.residual[0] = std::max(rep.residual[0], std::abs(lhs[i] - rhs));
        rep.scale[0] = std::max({rep.scale[0], std::abs(lhs[i]),
                                 std::abs(fp * dg[i]), std::abs(g[i] * df[i])});
      });
    }
  }

  // (1) product rule for the dual upwind operator:
  //     D'_V(g) = g D'_V(1)
  //               + sum_j [ V^+(.+e_j)(g(.+e_j)-g) + V^-(.-e_j)(g(.-e_j)-g) ]/dx
  {
    GridFunction lhs = dual_upwind_apply(V, g);
    GridFunction div = dual_upwind_one(V);
    GridFunction rhs(spec);
    for (std::size_t i = 0; i < g.size(); ++i) rhs[i] = g[i] * div[i];
    for (int j = 0; j < spec.dim; ++j) {
      const GridFunction& Vj = V.comp(j);
      for_each_cell(spec, [&](std::size_t i, const MultiIndex& alpha) {
        const double vp = std::max(Vj.neighbor(i, alpha[j], j, +1), 0.0);
        const double vm = std::max(-Vj.neighbor(i, alpha[j], j, -1), 0.0);
        const double gp = g.neighbor(i, alpha[j], j, +1);
        const double gm = g.neighbor(i, alpha[j], j, -1);
        rhs[i] += (vp * (gp - g[i]) + vm * (gm - g[i])) / dx;
      });
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
      rep.residual[1] = std::max(rep.residual[1], std::abs(lhs[i] - rhs[i]));
      rep.scale[1] =
          std::max({rep.scale[1], std::abs(lhs[i]), std::abs(rhs[i])});
    }
  }

  // (2) differences of convolutions commute:
  //     forward(f * g) = forward(f) * g = f * forward(g)
  {
    GridFunction conv = convolve(f, g);
    for (int j = 0; j < spec.dim; ++j) {
      GridFunction a = forward_diff(conv, j);
      GridFunction b = convolve(forward_diff(f, j), g);
      GridFunction c = convolve(f, forward_diff(g, j));
      for (std::size_t i = 0; i < conv.size(); ++i) {
        const double r =
            std::max(std::abs(a[i] - b[i]), std::abs(a[i] - c[i]));
        rep.residual[2] = std::max(rep.residual[2], r);
        rep.scale[2] = std::max({rep.scale[2], std::abs(a[i]), std::abs(b[i]),
                                 std::abs(c[i])});
      }
    }
  }

  // (3) summation by parts: dx^d sum f forward(g) = -dx^d sum g backward(f)
  {
    for (int j = 0; j < spec.dim; ++j) {
      GridFunction dg = forward_diff(g, j);
      GridFunction df = backward_diff(f, j);
      double a = 0.0, b = 0.0, mag = 0.0;
      for (std::size_t i = 0; i < f.size(); ++i) {
        a += f[i] * dg[i];
        b += g[i] * df[i];
        mag += std::abs(f[i] * dg[i]);
      }
      rep.residual[3] = std::max(rep.residual[3], vol * std::abs(a + b));
      rep.scale[3] = std::max(rep.scale[3], vol * mag);
    }
  }

  // (4) summation by parts for the upwind pair:
  //     dx^d sum g D_V f = -dx^d sum f D'_V g
  {
    GridFunction Df = upwind_apply(V, f);
    GridFunction Dg = dual_upwind_apply(V, g);
    double a = 0.0, b = 0.0, mag = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      a += g[i] * Df[i];
      b += f[i] * Dg[i];
      mag += std::abs(g[i] * Df[i]);
    }
    rep.residual[4] = vol * std::abs(a + b);
    rep.scale[4] = std::max(vol * mag, 1e-300);
  }

  // (5) second-order chain rule, beta(u) = u^2 (exact):
  //     2 f backward(forward(f)) - backward(forward(f^2))
  //       + |forward(f)|^2 + |backward(f)|^2 = 0  per axis
  {
    GridFunction f2(spec);
    for (std::size_t i = 0; i < f.size(); ++i) f2[i] = f[i] * f[i];
    for (int j = 0; j < spec.dim; ++j) {
      GridFunction lap_f = backward_diff(forward_diff(f, j), j);
      GridFunction lap_f2 = backward_diff(forward_diff(f2, j), j);
      GridFunction dfp = forward_diff(f, j);
      GridFunction dfm = backward_diff(f, j);
      for (std::size_t i = 0; i < f.size(); ++i) {
        const double lhs = 2.0 * f[i] * lap_f[i] - lap_f2[i];
        const double rhs = -(dfp[i] * dfp[i] + dfm[i] * dfm[i]);
        rep.residual[5] = std::max(rep.residual[5], std::abs(lhs - rhs));
        rep.scale[5] =
            std::max({rep.scale[5], std::abs(lhs), std::abs(rhs),
                      std::abs(2.0 * f[i] * lap_f[i]), std::abs(lap_f2[i])});
      }
    }
  }

  // (6) upwind chain rule, beta(u) = u^2 (exact):
  //     2 f D_V f - D_V(f^2)
  //       = sum_j [ V^+ |backward(f)|^2 + V^- |forward(f)|^2 ] dx
  {
    GridFunction f2(spec);
    for (std::size_t i = 0; i < f.size(); ++i) f2[i] = f[i] * f[i];
    GridFunction Df = upwind_apply(V, f);
    GridFunction Df2 = upwind_apply(V, f2);
    GridFunction rhs(spec);
    for (int j = 0; j < spec.dim; ++j) {
      const GridFunction& Vj = V.comp(j);
      GridFunction dfp = forward_diff(f, j);
      GridFunction dfm = backward_diff(f, j);
      for (std::size_t i = 0; i < f.size(); ++i) {
        rhs[i] += (std::max(Vj[i], 0.0) * dfm[i] * dfm[i] +
                   std::max(-Vj[i], 0.0) * dfp[i] * dfp[i]) *
                  dx;
      }
    }
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double lhs = 2.0 * f[i] * Df[i] - Df2[i];
      rep.residual[6] = std::max(rep.residual[6], std::abs(lhs - rhs[i]));
      rep.scale[6] = std::max({rep.scale[6], std::abs(2.0 * f[i] * Df[i]),
                               std::abs(Df2[i]), std::abs(rhs[i])});
    }
  }

  return rep;
}

}  // namespace stpde
