// Backward variable-coefficient reaction-diffusion solver: the adjoint
// problem whose uniform bounds drive the stability estimates. The equation
// is integrated once in forward time; the t -> T - t change of variables is
// applied only at this interface.
//
// Copyright (c) 2026 The stpde authors
// SPDX-License-Identifier: MIT

#ifndef STPDE_DUAL_HPP
#define STPDE_DUAL_HPP

#include <array>
#include <vector>

#include "stpde/grid.hpp"
#include "stpde/lattice.hpp"
#include "stpde/parametrix.hpp"

namespace stpde {

/// Terminal-value problem
///   d phi / dt = -(1/2) sum_j c_j(alpha) grad_+ grad_- phi + Z phi,
///   phi(T) = terminal,
/// solved backward from t = T to t = 0. On periodic boxes constants are
/// preserved exactly when Z = 0; a ZeroExterior box behaves like an
/// absorbing boundary instead.
struct DualProblem {
  VariableCoefficients coeffs;  ///< diffusion coefficients c_j (> 0)
  GridFunction reaction;        ///< zeroth-order coefficient Z
  GridFunction terminal;        ///< phi(T)
  double horizon = 0.0;         ///< T > 0
  double p = 2.0;               ///< integrability exponent for Z, p > dim

  /// Convenience builder with terminal data identically 1.
  static DualProblem build(VariableCoefficients coeffs, GridFunction reaction,
                           double horizon, double p);

  /// Throws std::invalid_argument on malformed data (spec mismatch,
  /// non-finite Z, p <= dim, T <= 0).
  void validate() const;
};

/// Time stepper for solve_dual_ode.
enum class DualStepper {
  ImplicitEuler,  ///< unconditionally stable; default
  ExplicitEuler,  ///< requires dt <= dx^2 / (2 d max c)
};

/// Time-sampled solution phi(t) on an ascending mesh of backward times
/// (times.front() = 0, times.back() = T).
struct DualSolution {
  std::vector<double> times;
  std::vector<GridFunction> phi;

  /// Frame at a mesh time (1e-9 relative tolerance); throws if absent.
  const GridFunction& at_time(double t) const;
};

/// Largest explicit-Euler step, dx^2 / (2 d max_j sup c_j).
double explicit_dt_bound(const DualProblem& problem);

/// Integrates the backward ODE system with the requested stepper. dt is
/// shrunk to the nearest value dividing the horizon evenly; every
/// store_every-th frame (plus both endpoints) is kept. The implicit branch
/// solves one linear system per step: tridiagonal elimination in d = 1
/// (cyclic variant on periodic boxes), a sparse factorization reused across
/// steps in d >= 2. The explicit branch rejects dt above the stability
/// bound, reporting the computed threshold.
DualSolution solve_dual_ode(const DualProblem& problem, double dt,
                            DualStepper stepper = DualStepper::ImplicitEuler,
                            int store_every = 1);

/// Iteration record for solve_dual_duhamel.
struct PicardReport {
  int subintervals = 1;
  std::vector<int> iterations;        ///< fixed-point sweeps per subinterval
  std::vector<double> contraction;    ///< a-priori factor per subinterval
  std::vector<double> final_delta;    ///< last sup-norm increment
};

/// Solves the same problem through the propagator: phi(T - s) = psi(s) with
///   psi(s) = Gamma(s) terminal - int_0^s Gamma(s - r) [Z psi(r)] dr,
/// iterated to a fixed point. gamma must be assembled for problem.coeffs on
/// [0, T]; the horizon is split into equal subintervals until the
/// contraction factor  ||Z||_{L^p} ||Gamma||_{L^1_t L^inf_alpha L^{p'}_beta}
/// drops below 1 on each piece (the solver aims for a factor < 0.5 and
/// rejects the problem if no admissible split exists).
DualSolution solve_dual_duhamel(const DualProblem& problem,
                                const TimeKernel& gamma, double tol,
                                TimeQuad quad = TimeQuad::Trapezoid,
                                PicardReport* report = nullptr);

/// Scan of a time-sampled solution: extrema and one-sided gradient bounds.
struct DualDiagnostics {
  double min_value = 0.0;  ///< min over all frames and cells
  double sup_norm = 0.0;   ///< sup |phi|
  std::array<double, kMaxDim> sup_grad_forward{};
  std::array<double, kMaxDim> sup_grad_backward{};

  /// Largest one-sided difference quotient over directions and signs.
  double sup_grad(int dim) const;
};

DualDiagnostics dual_diagnostics(const DualSolution& solution);

}  // namespace stpde

#endif  // STPDE_DUAL_HPP
