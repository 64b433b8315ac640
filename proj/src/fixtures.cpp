// Built-in fixtures (implementation).
//
// Copyright (c) 2026 The stpde authors
// SPDX-License-Identifier: MIT

#include "stpde/fixtures.hpp"

#include <cmath>
#include <stdexcept>

#include "stpde/grid.hpp"

namespace stpde {

double smooth_cutoff(double r, double start, double end) {
  if (r <= start) return 1.0;
  if (r >= end) return 0.0;
  const double y = (end - r) / (end - start);
  return y * y * y * (10.0 + y * (-15.0 + 6.0 * y));
}

double smooth_cutoff_derivative(double r, double start, double end) {
  if (r <= start || r >= end) return 0.0;
  const double w = end - start;
  const double y = (end - r) / w;
  const double sy = 30.0 * y * y * (1.0 - y) * (1.0 - y);
  return -sy / w;
}

namespace {

ScalarField gaussian_bump(double width, int dim) {
  return [width, dim](const Point& x) {
    double q = 0.0;
    for (int j = 0; j < dim; ++j) q += x[j] * x[j];
    return std::exp(-q / (2.0 * width * width));
  };
}

// C^infinity bump supported on the cube |x_j| < radius
ScalarField pairing_bump(double radius, int dim) {
  return [radius, dim](const Point& x) {
    double v = 1.0;
    for (int j = 0; j < dim; ++j) {
      const double y = x[j] / radius;
      if (std::abs(y) >= 1.0) return 0.0;
      v *= std::exp(1.0 - 1.0 / (1.0 - y * y));
    }
    return v;
  };
}

Fixture make_smooth(int dim) {
  Fixture f;
  f.name = "smooth";
  f.dim = dim;
  const double cut_start = 2.4, cut_end = 2.8;
  for (int j = 0; j < dim; ++j) {
    f.velocity.push_back([j, dim, cut_start, cut_end](const Point& x) {
      double v = 0.5 * std::sin(x[j]);
      for (int l = 0; l < dim; ++l)
        v *= smooth_cutoff(std::abs(x[l]), cut_start, cut_end);
      return v;
    });
  }
  f.sigma = [dim](const Point& x) {
    double v = 0.1;
    for (int j = 0; j < dim; ++j) v *= std::cos(x[j]);
    return 1.0 + v;
  };
  f.u0 = gaussian_bump(0.5, dim);
  f.test_function = pairing_bump(1.2, dim);
  f.div_velocity = [dim, cut_start, cut_end](const Point& x) {
    double cuts[kMaxDim];
    for (int l = 0; l < dim; ++l)
      cuts[l] = smooth_cutoff(std::abs(x[l]), cut_start, cut_end);
    double acc = 0.0;
    for (int j = 0; j < dim; ++j) {
      double rest = 1.0;
      for (int l = 0; l < dim; ++l)
        if (l != j) rest *= cuts[l];
      const double sign_j = x[j] < 0.0 ? -1.0 : 1.0;
      const double dcut =
          smooth_cutoff_derivative(std::abs(x[j]), cut_start, cut_end) * sign_j;
      acc += rest * 0.5 * (std::cos(x[j]) * cuts[j] + std::sin(x[j]) * dcut);
    }
    return acc;
  };
  f.has_divergence = true;
  f.default_half_width = 3.2;
  f.default_p = 4.0;
  f.default_horizon = 0.5;
  return f;
}

Fixture make_rough(int dim) {
  if (dim != 1)
    throw std::invalid_argument(
        "fixture 'rough' is one-dimensional (power-law divergence blow-up "
        "at the origin)");
  Fixture f;
  f.name = "rough";
  f.dim = 1;
  const double a = 0.6, cut_start = 1.2, cut_end = 1.4;
  f.velocity.push_back([a, cut_start, cut_end](const Point& x) {
    const double r = std::abs(x[0]);
    const double sign = x[0] < 0.0 ? -1.0 : 1.0;
    return sign * std::pow(std::min(r, 1.0), a) *
           smooth_cutoff(r, cut_start, cut_end);
  });
  f.sigma = [](const Point&) { return 1.0; };
  // Odd profile with a node at the origin. The divergence of V blows up at
  // x = 0, and every coarse-mesh artifact of that singularity is weighted by
  // the datum's mass there; a node suppresses those terms (noise repopulates
  // the origin only quadratically in time) while the datum still overlaps the
  // singular region, so the energy growth it drives remains genuine. The
  // moderate width keeps the gradient — hence the upwind dissipation deficit —
  // small relative to the Monte Carlo resolution of the stability ladder.
  f.u0 = [](const Point& x) {
    const double w = 1.5;
    return (x[0] / w) * std::exp(-x[0] * x[0] / (2.0 * w * w));
  };
  f.test_function = pairing_bump(1.0, 1);
  f.div_velocity = nullptr;  // ~ a |x|^{a-1}, unbounded near 0
  f.has_divergence = false;
  f.default_half_width = 1.6;
  f.default_p = 2.0;
  f.default_horizon = 0.25;
  return f;
}

Fixture make_const(int dim) {
  Fixture f;
  f.name = "const";
  f.dim = dim;
  for (int j = 0; j < dim; ++j)
    f.velocity.push_back([](const Point&) { return 0.0; });
  f.sigma = [](const Point&) { return 1.0; };
  f.u0 = gaussian_bump(0.5, dim);
  f.test_function = pairing_bump(1.2, dim);
  f.div_velocity = [](const Point&) { return 0.0; };
  f.has_divergence = true;
  f.default_half_width = 3.2;
  f.default_p = 4.0;
  f.default_horizon = 0.5;
  return f;
}

}  // namespace

Fixture make_fixture(const std::string& name, int dim) {
  if (dim < 1 || dim > kMaxDim)
    throw std::invalid_argument("make_fixture: dim out of range");
  if (name == "smooth") return make_smooth(dim);
  if (name == "rough") return make_rough(dim);
  if (name == "const") return make_const(dim);
  throw std::invalid_argument("make_fixture: unknown fixture '" + name +
                              "' (expected smooth, rough, or const)");
}

std::vector<std::string> fixture_names() { return {"smooth", "rough", "const"}; }

}  // namespace stpde
