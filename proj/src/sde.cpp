// Stochastic transport scheme (implementation).
//
// Copyright (c) 2026 The stpde authors
// SPDX-License-Identifier: MIT

#include "stpde/sde.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace stpde {

void SchemeCoefficients::validate() const {
  spec.validate();
  if (!(V.spec() == spec) || !(sigma.spec() == spec) || !(Z.spec() == spec))
    throw std::invalid_argument("SchemeCoefficients: field/spec mismatch");
  if (static_cast<int>(S.size()) != spec.dim ||
      static_cast<int>(c.size()) != spec.dim)
    throw std::invalid_argument("SchemeCoefficients: per-axis field count");
  if (!(sigma_min > 0.0))
    throw std::invalid_argument(
        "SchemeCoefficients: sigma must be uniformly positive");
  for (const GridFunction& s : S)
    for (std::size_t i = 0; i < s.size(); ++i)
      if (!(s[i] > 0.0) || !std::isfinite(s[i]))
        throw std::invalid_argument(
            "SchemeCoefficients: S must be strictly positive and finite");
}

VariableCoefficients SchemeCoefficients::dual_coefficients() const {
  return VariableCoefficients::build(spec, c);
}

SchemeBuild build_coefficients(const std::vector<ScalarField>& v_cont,
                               const ScalarField& sigma_cont,
                               const ScalarField& u0_cont,
                               const GridSpec& spec) {
  spec.validate();
  if (static_cast<int>(v_cont.size()) != spec.dim)
    throw std::invalid_argument(
        "build_coefficients: need one velocity component per axis");

  SchemeBuild out;
  SchemeCoefficients& k = out.coeffs;
  k.spec = spec;
  k.V = project_vector(spec, v_cont);
  k.sigma = project(spec, sigma_cont);
  out.u0 = project(spec, u0_cont);

  k.sigma_min = std::numeric_limits<double>::infinity();
  k.sigma_max = 0.0;
  for (std::size_t i = 0; i < k.sigma.size(); ++i) {
    k.sigma_min = std::min(k.sigma_min, k.sigma[i]);
    k.sigma_max = std::max(k.sigma_max, k.sigma[i]);
  }
  if (!(k.sigma_min > 0.0))
    throw std::invalid_argument(
        "build_coefficients: sigma must stay positive on the box");
  k.v_max = 0.0;
  for (int j = 0; j < spec.dim; ++j)
    k.v_max = std::max(k.v_max, k.V.comp(j).max_abs());

  k.S.assign(static_cast<std::size_t>(spec.dim), GridFunction(spec));
  k.c.assign(static_cast<std::size_t>(spec.dim), GridFunction(spec));
  for (int j = 0; j < spec.dim; ++j) {
    const GridFunction bp = average_plus(k.sigma, j);
    const GridFunction bm = average_minus(k.sigma, j);
    GridFunction& S = k.S[static_cast<std::size_t>(j)];
    GridFunction& c = k.c[static_cast<std::size_t>(j)];
    for (std::size_t i = 0; i < S.size(); ++i) {
      const double harmonic = 2.0 * bp[i] * bm[i] / (bp[i] + bm[i]);
      S[i] = std::sqrt(k.sigma[i] * harmonic);
      c[i] = k.sigma[i] * bp[i];
    }
  }

  k.Z = dual_upwind_one(k.V);
  k.Z *= -1.0;

  k.validate();
  return out;
}

GridFunction drift(const SchemeCoefficients& coeffs, const GridFunction& u,
                   DriftForm form) {
  const GridSpec& spec = coeffs.spec;
  if (!(u.spec() == spec))
    throw std::invalid_argument("drift: spec mismatch");

  GridFunction out(spec);
  if (form == DriftForm::Upwind) {
    out = upwind_apply(coeffs.V, u);
    out *= -1.0;
  } else {
    for (int j = 0; j < spec.dim; ++j) {
      const GridFunction g0 = central_diff(u, j);
      GridFunction lap = forward_diff(backward_diff(u, j), j);
      for (std::size_t i = 0; i < out.size(); ++i)
        out[i] -= coeffs.V.comp(j)[i] * g0[i] -
                  0.5 * coeffs.v_max * spec.dx * lap[i];
    }
  }
  for (int j = 0; j < spec.dim; ++j) {
    GridFunction w = backward_diff(u, j);
    const GridFunction bm = average_minus(coeffs.sigma, j);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] *= bm[i];
    const GridFunction flux = forward_diff(w, j);
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] += 0.5 * coeffs.sigma[i] * flux[i];
  }
  return out;
}

std::vector<GridFunction> diffusion(const SchemeCoefficients& coeffs,
                                    const GridFunction& u) {
  const GridSpec& spec = coeffs.spec;
  if (!(u.spec() == spec))
    throw std::invalid_argument("diffusion: spec mismatch");
  std::vector<GridFunction> comps;
  comps.reserve(static_cast<std::size_t>(spec.dim));
  for (int j = 0; j < spec.dim; ++j) {
    GridFunction g = central_diff(u, j);
    for (std::size_t i = 0; i < g.size(); ++i)
      g[i] *= -coeffs.S[static_cast<std::size_t>(j)][i];
    comps.push_back(std::move(g));
  }
  return comps;
}

namespace {

// One fused Euler-Maruyama sweep; returns false when a non-finite value
// appears (out is then unusable).
bool fused_step(const SchemeCoefficients& k, const GridFunction& u, double dt,
                const Point& dW, DriftForm form, GridFunction& out) {
  const GridSpec& spec = k.spec;
  const double inv_dx = 1.0 / spec.dx;
  bool finite = true;
  for_each_cell(spec, [&](std::size_t i, const MultiIndex& alpha) {
    const double uc = u[i];
    const double sc = k.sigma[i];
    double acc = uc;
    for (int j = 0; j < spec.dim; ++j) {
      const double up = u.neighbor(i, alpha[j], j, +1);
      const double dn = u.neighbor(i, alpha[j], j, -1);
      const double sp = k.sigma.neighbor(i, alpha[j], j, +1);
      const double sm = k.sigma.neighbor(i, alpha[j], j, -1);
      const double bp = 0.5 * (sp + sc);
      const double bm = 0.5 * (sm + sc);
      const double gp = (up - uc) * inv_dx;
      const double gm = (uc - dn) * inv_dx;
      // derived fields (box_- sigma grad_- u, grad_- u) live on the box and
      // read as zero one cell past it, matching the modular operators
      const bool up_in = spec.boundary == Boundary::Periodic ||
                         alpha[j] < spec.radius;

      double adv;
      const double v = k.V.comp(j)[i];
      if (form == DriftForm::Upwind) {
        adv = (v > 0.0 ? v * gm : 0.0) + (v < 0.0 ? v * gp : 0.0);
      } else {
        adv = 0.5 * v * (gp + gm) -
              0.5 * k.v_max * spec.dx * ((up_in ? gp : 0.0) - gm) * inv_dx;
      }
      const double visc =
          0.5 * sc * ((up_in ? bp * gp : 0.0) - bm * gm) * inv_dx;
      const double noise = -k.S[static_cast<std::size_t>(j)][i] * 0.5 *
                           (up - dn) * inv_dx;
      acc += dt * (visc - adv) + dW[static_cast<std::size_t>(j)] * noise;
    }
    out[i] = acc;
    finite = finite && std::isfinite(acc);
  });
  return finite;
}

}  // namespace

void em_step(PathState& state, const SchemeCoefficients& coeffs, double dt,
             const Point& dW, DriftForm form) {
  if (state.diverged) return;
  if (!(state.u.spec() == coeffs.spec))
    throw std::invalid_argument("em_step: spec mismatch");
  GridFunction next(coeffs.spec);
  if (!fused_step(coeffs, state.u, dt, dW, form, next)) {
    state.diverged = true;
    return;
  }
  state.u = std::move(next);
  ++state.step;
}

PathState simulate_path(const SchemeCoefficients& coeffs,
                        const GridFunction& u0, double T, double dt,
                        std::uint64_t seed, std::uint64_t path_id,
                        DriftForm form, PathTrace* trace) {
  coeffs.validate();
  if (!(u0.spec() == coeffs.spec))
    throw std::invalid_argument("simulate_path: spec mismatch");
  if (!(T > 0.0) || !(dt > 0.0))
    throw std::invalid_argument("simulate_path: need T > 0 and dt > 0");

  const long n_steps = std::max(1L, std::lround(std::ceil(T / dt - 1e-9)));
  const double h = T / static_cast<double>(n_steps);
  const BrownianDriver driver{seed, coeffs.spec.dim, h};

  PathState state;
  state.u = u0;
  GridFunction buf(coeffs.spec);

  if (trace != nullptr) {
    trace->times.clear();
    trace->l2_norm.clear();
    trace->times.push_back(0.0);
    trace->l2_norm.push_back(lp_norm(u0, 2.0));
  }

  for (long step = 0; step < n_steps; ++step) {
    Point dW{};
    for (int j = 0; j < coeffs.spec.dim; ++j)
      dW[static_cast<std::size_t>(j)] = driver.increment(
          path_id, static_cast<std::uint32_t>(step),
          static_cast<std::uint32_t>(j));
    if (!fused_step(coeffs, state.u, h, dW, form, buf)) {
      state.diverged = true;
      break;
    }
    std::swap(state.u, buf);
    state.step = step + 1;
    if (trace != nullptr) {
      trace->times.push_back(h * static_cast<double>(step + 1));
      trace->l2_norm.push_back(lp_norm(state.u, 2.0));
    }
  }
  return state;
}

double max_stable_dt(const SchemeCoefficients& coeffs) {
  const GridSpec& spec = coeffs.spec;
  const double d = static_cast<double>(spec.dim);
  double bound = spec.dx * spec.dx /
                 (2.0 * d * coeffs.sigma_max * coeffs.sigma_max);
  if (coeffs.v_max > 0.0)
    bound = std::min(bound, spec.dx / (2.0 * d * coeffs.v_max));
  return bound;
}

GridFunction energy_error_sigma(const SchemeCoefficients& coeffs,
                                const GridFunction& u) {
  const GridSpec& spec = coeffs.spec;
  if (!(u.spec() == spec))
    throw std::invalid_argument("energy_error_sigma: spec mismatch");
  GridFunction out(spec);
  const double inv_dx = 1.0 / spec.dx;
  for_each_cell(spec, [&](std::size_t i, const MultiIndex& alpha) {
    const double sc = coeffs.sigma[i];
    double acc = 0.0;
    for (int j = 0; j < spec.dim; ++j) {
      const double up = u.neighbor(i, alpha[j], j, +1);
      const double dn = u.neighbor(i, alpha[j], j, -1);
      const double sp = coeffs.sigma.neighbor(i, alpha[j], j, +1);
      const double sm = coeffs.sigma.neighbor(i, alpha[j], j, -1);
      const double bp = 0.5 * (sp + sc);
      const double bm = 0.5 * (sm + sc);
      const double gp = (up - u[i]) * inv_dx;
      const double gm = (u[i] - dn) * inv_dx;
      const double g0 = 0.5 * (up - dn) * inv_dx;
      const double s = coeffs.S[static_cast<std::size_t>(j)][i];
      acc += s * s * g0 * g0 - 0.5 * sc * (bp * gp * gp + bm * gm * gm);
    }
    out[i] = acc;
  });
  return out;
}

GridFunction energy_error_upwind(const VectorGridFunction& V,
                                 const GridFunction& u) {
  if (!(u.spec() == V.spec()))
    throw std::invalid_argument("energy_error_upwind: spec mismatch");
  GridFunction usq(u.spec());
  for (std::size_t i = 0; i < u.size(); ++i) usq[i] = u[i] * u[i];
  GridFunction out = upwind_apply(V, usq);
  const GridFunction du = upwind_apply(V, u);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= 2.0 * u[i] * du[i];
  return out;
}

}  // namespace stpde
