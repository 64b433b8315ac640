// The stochastic transport scheme: coefficient assembly, upwind drift,
// central-difference noise, Euler-Maruyama stepping, and the pointwise
// energy diagnostics behind the L^2 bound.
//
// Copyright (c) 2026 The stpde authors
// SPDX-License-Identifier: MIT

#ifndef STPDE_SDE_HPP
#define STPDE_SDE_HPP

#include <cstdint>
#include <vector>

#include "stpde/grid.hpp"
#include "stpde/lattice.hpp"
#include "stpde/parametrix.hpp"
#include "stpde/quadrature.hpp"
#include "stpde/rng.hpp"

namespace stpde {

/// Cell-averaged velocity and noise amplitude together with the derived
/// diagonal noise matrix
///   S_j = sqrt( sigma * H_j ),   H_j = harmonic mean of box_+ sigma and
///                                      box_- sigma,
/// and the adjoint-problem data c_j = sigma * box_+ sigma, Z = -D'_V(1).
struct SchemeCoefficients {
  GridSpec spec;
  VectorGridFunction V;
  GridFunction sigma;
  std::vector<GridFunction> S;  ///< noise diagonal, one field per axis
  std::vector<GridFunction> c;  ///< dual diffusion coefficients
  GridFunction Z;               ///< dual reaction field
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  double v_max = 0.0;  ///< sup over axes and cells of |V_j|

  /// Throws std::invalid_argument if sigma or any S fails strict positivity
  /// or the fields disagree on the grid.
  void validate() const;

  /// Packages the c_j fields for the propagator/dual modules.
  VariableCoefficients dual_coefficients() const;
};

/// Coefficient fields plus the projected initial datum.
struct SchemeBuild {
  SchemeCoefficients coeffs;
  GridFunction u0;
};

/// Projects continuous data (cell averages via Gauss quadrature) and derives
/// S, c, Z. Rejects sigma <= 0 anywhere on the box.
SchemeBuild build_coefficients(const std::vector<ScalarField>& v_cont,
                               const ScalarField& sigma_cont,
                               const ScalarField& u0_cont,
                               const GridSpec& spec);

/// Advection discretization used inside the drift.
enum class DriftForm {
  Upwind,         ///< sign-split one-sided differences (default)
  LaxFriedrichs,  ///< central difference plus mu dx/2 artificial viscosity
};

/// Deterministic part of one step:
///   -D_V u + (1/2) sigma sum_j grad_+ (box_- sigma grad_- u).
/// The Lax-Friedrichs form replaces D_V u by
///   V . grad_0 u - (mu dx / 2) grad_+ . grad_- u  with mu = sup |V|.
GridFunction drift(const SchemeCoefficients& coeffs, const GridFunction& u,
                   DriftForm form = DriftForm::Upwind);

/// Martingale integrands, one field per Wiener component:
///   component j = -S_j grad_0^j u.
std::vector<GridFunction> diffusion(const SchemeCoefficients& coeffs,
                                    const GridFunction& u);

/// State of one simulated path.
struct PathState {
  GridFunction u;
  long step = 0;
  bool diverged = false;  ///< a non-finite value appeared; u is frozen
};

/// One Euler-Maruyama update u += drift dt + sum_j diffusion_j dW_j.
/// dW carries one increment per axis. A non-finite result flags the state
/// diverged and freezes u at its last finite value.
void em_step(PathState& state, const SchemeCoefficients& coeffs, double dt,
             const Point& dW, DriftForm form = DriftForm::Upwind);

/// Per-step record of a path's discrete L^2 norm.
struct PathTrace {
  std::vector<double> times;
  std::vector<double> l2_norm;
};

/// Integrates one path from u0 over [0, T]; dt is shrunk to divide T
/// evenly. Increments come from the counter-based driver, addressed by
/// (seed, path_id, step, component). Divergence aborts the remaining steps
/// and is reported in the returned state.
PathState simulate_path(const SchemeCoefficients& coeffs,
                        const GridFunction& u0, double T, double dt,
                        std::uint64_t seed, std::uint64_t path_id,
                        DriftForm form = DriftForm::Upwind,
                        PathTrace* trace = nullptr);

/// Largest explicit step satisfying both recorded mesh conditions
///   dt <= dx^2 / (2 d sup sigma^2)  and  dt <= dx / (2 d sup |V|)
/// (the advective bound is skipped when V = 0).
double max_stable_dt(const SchemeCoefficients& coeffs);

/// Pointwise noise-vs-dissipation balance
///   E^sigma = sum_j [ S_j^2 (grad_0 u)^2
///                     - (sigma/2)(box_+ sigma (grad_+ u)^2
///                                 + box_- sigma (grad_- u)^2) ],
/// which the harmonic-mean construction keeps <= 0.
GridFunction energy_error_sigma(const SchemeCoefficients& coeffs,
                                const GridFunction& u);

/// Pointwise upwind chain-rule defect D_V(u^2) - 2 u D_V u, a negative
/// quadratic form in the one-sided differences.
GridFunction energy_error_upwind(const VectorGridFunction& V,
                                 const GridFunction& u);

}  // namespace stpde

#endif  // STPDE_SDE_HPP
