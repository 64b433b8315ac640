// Cell-average projection of continuum functions onto the lattice, via
// tensorized Gauss-Legendre quadrature.
//
// Copyright (c) 2026 The stpde authors
// SPDX-License-Identifier: MIT

#ifndef STPDE_QUADRATURE_HPP
#define STPDE_QUADRATURE_HPP

#include <functional>

#include "stpde/grid.hpp"

namespace stpde {

/// Scalar continuum function R^d -> R (entries of the point beyond the
/// grid dimension are zero).
using ScalarField = std::function<double(const Point&)>;

/// Gauss-Legendre nodes/weights on [-1, 1] for 1..8 points.
/// Throws std::invalid_argument outside that range.
void gauss_legendre(int n_points, const double** nodes, const double** weights);

/// Projects f onto the lattice by per-cell averages
///   (P f)(alpha) = dx^{-d} int_{C_alpha} f(x) dx,
/// where the integral is evaluated with a tensorized `order`-point
/// Gauss-Legendre rule (default 3, exact through degree 5 per axis).
/// Throws std::runtime_error if f produces a non-finite value.
GridFunction project(const GridSpec& spec, const ScalarField& f, int order = 3);

/// Projects each component of a vector field.
VectorGridFunction project_vector(const GridSpec& spec,
                                  const std::vector<ScalarField>& comps,
                                  int order = 3);

}  // namespace stpde

#endif  // STPDE_QUADRATURE_HPP
