// Variable-coefficient lattice heat kernel by the parametrix (frozen
// coefficient) construction:
//
//   generator        A f = (1/2) sum_j c_j(alpha) D+_j D-_j f
//   frozen kernel    F_{alpha,beta}(t) = a^{c(beta)/2}(alpha - beta, t)
//   correction       K_{alpha,beta}(t) = (1/2) sum_j (c_j(alpha)-c_j(beta))
//                                         [D+_j D-_j]_alpha F_{.,beta}(t)
//   Neumann series   Phi = sum_{m>=1} K^(m),  K^(m) = K ** K^(m-1)
//   fundamental kern Gamma = F + F ** Phi
//   propagation      Gamma(k T0 + t) = Gamma(t) o Gamma(T0)^k
//
// with ** the time-space composition and o the spatial composition.
//
// Copyright (c) 2026 The stpde authors
// SPDX-License-Identifier: MIT

#ifndef STPDE_PARAMETRIX_HPP
#define STPDE_PARAMETRIX_HPP

#include <vector>

#include "stpde/grid.hpp"
#include "stpde/lattice.hpp"

namespace stpde {

/// Spatially varying diagonal diffusion coefficients, one field per axis,
/// uniformly positive.
struct VariableCoefficients {
  GridSpec spec;
  std::vector<GridFunction> c;  ///< c_j(alpha) > 0, j = 0..dim-1
  double eps_min = 0.0;         ///< min over j, alpha of c_j(alpha)
  double lipschitz_bound = 0.0; ///< max over j, axes of |D+ c_j|

  /// Builds the derived bounds and validates positivity.
  static VariableCoefficients build(const GridSpec& spec,
                                    std::vector<GridFunction> comps);
  void validate() const;
  double max_coeff() const;
};

/// Uniform-mesh time-dependent two-index kernel. For fundamental-solution
/// kernels (Gamma, frozen F) the mesh includes t = 0 with a Dirac frame;
/// correction-type kernels start at t = h and keep their finite t -> 0
/// limit out-of-band (see correction_zero_limit).
struct TimeKernel {
  std::vector<double> times;
  std::vector<Kernel2> frames;

  double step() const;  ///< uniform mesh width (validates uniformity)
  const Kernel2& at_time(double t) const;  ///< frame lookup (exact mesh hit)
  void validate() const;
};

/// Frozen-coefficient kernel F(t): column beta is the closed-form
/// constant-coefficient kernel with diffusion c(beta)/2 centered at beta
/// (the 1/2 matches the generator A above). t = 0 gives the Dirac kernel.
Kernel2 frozen_kernel(const VariableCoefficients& coeffs, double t);

/// Correction kernel K(t) for t > 0 (throws on t = 0: treated separately
/// because the profile factor is singular there in the continuum scaling;
/// the finite lattice limit is correction_zero_limit). Diagonal is exactly 0.
Kernel2 assemble_correction(const VariableCoefficients& coeffs, double t);

/// Entrywise limit of K(t) as t -> 0+ at fixed dx: nonzero only at
/// alpha - beta = +- e_j where it equals (c_j(alpha)-c_j(beta))/(2 dx^{d+2}).
Kernel2 correction_zero_limit(const VariableCoefficients& coeffs);

/// K on the uniform mesh h, 2h, .., T = n_frames * h.
TimeKernel assemble_correction_mesh(const VariableCoefficients& coeffs,
                                    double T, int n_frames);

/// L^1-in-time of the mixed spatial norm (outer alpha, inner beta) over a
/// kernel mesh, with the requested quadrature; `zero` supplies the t = 0
/// frame when the mesh starts at h (may be null for LeftRect).
double time_mixed_norm(const TimeKernel& tk, double p_alpha, double q_beta,
                       TimeQuad quad, const Kernel2* zero = nullptr);

/// Neumann-series tail sum Phi = sum_{m>=1} K^(m).
struct NeumannResult {
  TimeKernel phi;               ///< mesh h..T; the t -> 0 limit of Phi is K's
  int m_used = 0;               ///< highest order included
  double contraction_ratio = 0; ///< last observed ||K^(m+1)|| / ||K^(m)||
  double last_increment = 0;    ///< norm of the last included increment
  bool converged = false;
};

/// Sums the series until the L^1_t L^infty_alpha L^{p'}_beta increment
/// drops below tol (p' conjugate to p; requires p > dim). Throws
/// std::runtime_error if the series fails to contract within m_max terms —
/// callers should then split the time interval (see choose_t0).
NeumannResult neumann_phi(const VariableCoefficients& coeffs,
                          const TimeKernel& correction, const Kernel2& k_zero,
                          double p, double tol, int m_max, TimeQuad quad);

/// Largest dyadic fraction T of t_hint with measured contraction factor
/// ||K||_{L^1_t L^infty_alpha L^1_beta} < 1/2; out_factor receives the
/// measured factor.
double choose_t0(const VariableCoefficients& coeffs, double t_hint,
                 int n_frames, TimeQuad quad, double* out_factor = nullptr);

/// Assembles Gamma = F + F ** Phi on the mesh {0, h, .., T}; frame 0 is the
/// Dirac kernel. `info` (optional) receives the Neumann diagnostics.
TimeKernel assemble_gamma(const VariableCoefficients& coeffs, double T,
                          int n_frames, double p, double tol, TimeQuad quad,
                          NeumannResult* info = nullptr);

/// Gamma(k T0 + t) by left-fold spatial composition of single-interval
/// kernels: Gamma(t) o Gamma(T0) o .. o Gamma(T0). t must be a mesh point
/// of gamma_base; k = 0 returns the single-interval frame.
Kernel2 propagate_gamma(const TimeKernel& gamma_base, int k, double t);

/// Applies the variable-coefficient generator A (rows/alpha index) to a
/// two-index kernel, with the spec's boundary rule.
Kernel2 apply_generator_rows(const VariableCoefficients& coeffs,
                             const Kernel2& K);

/// Centered-in-time ODE residual of an assembled Gamma mesh at interior
/// frame i:  max | (Gamma_{i+1} - Gamma_{i-1}) / 2h - A Gamma_i |.
double gamma_ode_residual(const VariableCoefficients& coeffs,
                          const TimeKernel& gamma, std::size_t i);

/// Duhamel formula for  d psi/dt = A psi + f,  psi(0) = psi0, on Gamma's
/// mesh; f_frames holds the source at every mesh time (may be empty).
/// Returns psi at every mesh time.
std::vector<GridFunction> duhamel_variable(
    const TimeKernel& gamma, const GridFunction& psi0,
    const std::vector<GridFunction>& f_frames, TimeQuad quad);

/// Integrability guard for rough-source Duhamel arguments: requires
/// p > dim and 2/q + dim/p < 1 (the stricter of the two admissible
/// exponent conditions; q = infinity is allowed). Throws otherwise.
void validate_duhamel_exponents(double p, double q, int dim);

}  // namespace stpde

#endif  // STPDE_PARAMETRIX_HPP
