// Built-in velocity/noise/initial-data fixtures used by the studies and
// tests: a smooth sine-based field (oracle-friendly), a rough power-law
// field whose divergence is unbounded but p-integrable, and a
// constant-coefficient field with closed-form behavior.
//
// Copyright (c) 2026 The stpde authors
// SPDX-License-Identifier: MIT

#ifndef STPDE_FIXTURES_HPP
#define STPDE_FIXTURES_HPP

#include <string>
#include <vector>

#include "stpde/quadrature.hpp"

namespace stpde {

/// Continuous problem data evaluated on demand. All fields are globally
/// defined; velocities vanish outside |x_j| < taper_end so periodic wrap
/// and truncation behave identically.
struct Fixture {
  std::string name;
  int dim = 1;
  std::vector<ScalarField> velocity;  ///< one component per axis
  ScalarField sigma;
  ScalarField u0;
  ScalarField test_function;  ///< smooth, compactly supported pairing weight
  ScalarField div_velocity;   ///< analytic divergence; null when unbounded
  bool has_divergence = false;

  double default_half_width = 0.0;  ///< box size L the fixture was tuned for
  double default_p = 2.0;           ///< integrability exponent for Z
  double default_horizon = 0.5;
};

/// Returns the named fixture ("smooth", "rough", or "const") in dimension
/// dim; throws std::invalid_argument for unknown names or unsupported dims.
Fixture make_fixture(const std::string& name, int dim);

/// Names accepted by make_fixture.
std::vector<std::string> fixture_names();

/// C^2 cutoff: 1 on [0, start], 0 beyond end, quintic smoothstep between.
double smooth_cutoff(double r, double start, double end);
/// Derivative of smooth_cutoff with respect to r.
double smooth_cutoff_derivative(double r, double start, double end);

}  // namespace stpde

#endif  // STPDE_FIXTURES_HPP
