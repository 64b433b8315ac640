// Discrete calculus on the truncated lattice: one-sided/central differences,
// neighbor averages, upwind operators and their duals, discrete L^p and
// mixed norms, spatial and two-index convolutions, and the exact-identity
// residual suite used by the property tests.
//
// Copyright (c) 2026 The stpde authors
// SPDX-License-Identifier: MIT

#ifndef STPDE_LATTICE_HPP
#define STPDE_LATTICE_HPP

#include <array>
#include <limits>
#include <vector>

#include "stpde/grid.hpp"

namespace stpde {

/// Time-quadrature rule for time-dependent kernel convolutions.
enum class TimeQuad : std::uint8_t {
  LeftRect,   ///< left-rectangle rule (first order)
  Trapezoid,  ///< trapezoid rule (second order; needs endpoint frames)
};

// ------------------------------------------------------------------------
// difference and averaging operators (axis j, mesh width dx)
// ------------------------------------------------------------------------

/// Forward difference  (f(alpha + e_j) - f(alpha)) / dx.
GridFunction forward_diff(const GridFunction& f, int axis);
/// Backward difference  (f(alpha) - f(alpha - e_j)) / dx.
GridFunction backward_diff(const GridFunction& f, int axis);
/// Central difference  (f(alpha + e_j) - f(alpha - e_j)) / (2 dx).
GridFunction central_diff(const GridFunction& f, int axis);
/// Forward neighbor average  (f(alpha + e_j) + f(alpha)) / 2.
GridFunction average_plus(const GridFunction& f, int axis);
/// Backward neighbor average  (f(alpha - e_j) + f(alpha)) / 2.
GridFunction average_minus(const GridFunction& f, int axis);

/// Upwind transport  D_V f = sum_j [ V_j^+ backward_j f - V_j^- forward_j f ]
/// with V^{+} = max(V,0), V^{-} = max(-V,0).
GridFunction upwind_apply(const VectorGridFunction& V, const GridFunction& f);

/// Dual (adjoint) upwind operator
///   D'_V g = sum_j [ forward_j(V_j^+ g) - backward_j(V_j^- g) ],
/// the negative adjoint of D_V under the discrete inner product.
GridFunction dual_upwind_apply(const VectorGridFunction& V,
                               const GridFunction& g);

/// D'_V applied to the constant 1: the discrete divergence surrogate that
/// plays the role of div V in the stability estimates.
GridFunction dual_upwind_one(const VectorGridFunction& V);

// ------------------------------------------------------------------------
// norms
// ------------------------------------------------------------------------

/// Discrete L^p norm (dx^d sum |f|^p)^(1/p); p = infinity gives the plain
/// sup without the dx factor. Requires p >= 1.
double lp_norm(const GridFunction& f, double p);

/// Which kernel index the outer norm runs over.
enum class MixedOrder : std::uint8_t {
  AlphaOuter,  ///< outer norm over rows alpha, inner over columns beta
  BetaOuter,   ///< outer norm over columns beta, inner over rows alpha
};

/// Mixed norm of a two-index kernel: inner discrete L^q over the inner
/// index, then outer discrete L^p over the outer index.
double mixed_norm(const Kernel2& K, double p_outer, double q_inner,
                  MixedOrder order = MixedOrder::AlphaOuter);

/// Infinity constant used to request sup norms.
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ------------------------------------------------------------------------
// convolutions
// ------------------------------------------------------------------------

/// Spatial convolution of grid functions,
///   (f * g)(alpha) = dx^d sum_eta f(alpha - eta) g(eta),
/// with boundary-aware lookup of f at shifted indices.
GridFunction convolve(const GridFunction& f, const GridFunction& g);

/// Two-index kernel composition
///   (F o G)_{alpha,beta} = dx^d sum_eta F_{alpha,eta} G_{eta,beta}.
Kernel2 convolve2(const Kernel2& F, const Kernel2& G);

/// Apply a two-index kernel to a field:  (K g)(alpha) = dx^d sum_beta
/// K_{alpha,beta} g(beta).
GridFunction kernel_apply(const Kernel2& K, const GridFunction& g);

/// Time-space composition on a shared uniform time mesh,
///   (F ** G)(t_i) = int_0^{t_i} F(t_i - s) o G(s) ds,
/// evaluated with the requested quadrature. `frames_*` hold values on the
/// mesh t_k = k h for k = 1..n; `zero_*` supply the (finite) t -> 0 limits
/// needed by the trapezoid endpoints and may be null for LeftRect. Returns
/// one frame per k = 1..n.
std::vector<Kernel2> convolve2_time(const std::vector<Kernel2>& frames_f,
                                    const std::vector<Kernel2>& frames_g,
                                    double h, TimeQuad quad,
                                    const Kernel2* zero_f = nullptr,
                                    const Kernel2* zero_g = nullptr);

// ------------------------------------------------------------------------
// exact-identity suite
// ------------------------------------------------------------------------

/// Max-residual report for the seven discrete-calculus identities:
///   0: one-sided product rule
///   1: product rule for the dual upwind operator
///   2: differences of convolutions commute
///   3: summation by parts for one-sided differences
///   4: summation by parts for the upwind pair (D_V, D'_V)
///   5: second-order chain rule for beta(u) = u^2 (exact commutator form)
///   6: upwind chain rule for beta(u) = u^2 (exact remainder form)
/// Each residual is the max abs deviation; `scale` is the magnitude of the
/// identity's terms, for relative comparison.
struct CalculusReport {
  std::array<double, 7> residual{};
  std::array<double, 7> scale{};
  /// max over identities of residual[i] / max(scale[i], tiny)
  double worst_relative() const;
};

/// Evaluates all seven identities on a common spec. Fixtures should be
/// compactly supported away from the box edge (ZeroExterior) or periodic.
CalculusReport calculus_identity_suite(const GridFunction& f,
                                       const GridFunction& g,
                                       const VectorGridFunction& V);

}  // namespace stpde

#endif  // STPDE_LATTICE_HPP
