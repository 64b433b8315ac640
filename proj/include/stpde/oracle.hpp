#pragma once

// Deterministic reference integrator for the expectation dynamics of the
// stochastic scheme.  Taking expectations of one Euler-Maruyama step kills
// the martingale part, so the mean field m = E[u] obeys the method-of-lines
// ODE  dm/dt = -D_V m + (sigma/2) sum_j grad_+^j(avg_-^j sigma grad_-^j m),
// i.e. exactly the drift operator of the scheme.  The expected squared field
// obeys the same advection-diffusion operator with squared initial data, so
// one integrator serves both roles; callers pick the initial condition.
//
// The integrator is implicit Euler with the system matrix factored once
// (tridiagonal in one dimension, sparse LU otherwise), which keeps it stable
// on the fine reference grids where an explicit step would be wasteful.

#include <cstddef>

#include "stpde/grid.hpp"
#include "stpde/sde.hpp"

namespace stpde {

/// Discrete pairing <f, g> = dx^d sum_alpha f_alpha g_alpha.
double pairing(const GridFunction& f, const GridFunction& g);

/// Integrate dm/dt = drift(m) from m0 to time T with implicit Euler steps of
/// size at most dt (the last step is shortened to land on T exactly).
/// Passing dt <= 0 selects the default step dx^2, the rule used for all
/// reference comparisons.  Throws std::invalid_argument on a non-positive
/// horizon or mismatched specs.
GridFunction mean_energy_oracle(const SchemeCoefficients& coeffs,
                                const GridFunction& m0, double T,
                                double dt = 0.0);

}  // namespace stpde
