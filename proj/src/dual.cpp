// Backward reaction-diffusion solver (implementation).
//
// Copyright (c) 2026 The stpde authors
// SPDX-License-Identifier: MIT

#include "stpde/dual.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <stdexcept>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "tridiag.hpp"

namespace stpde {

DualProblem DualProblem::build(VariableCoefficients coeffs,
                               GridFunction reaction, double horizon,
                               double p) {
  DualProblem pr;
  pr.terminal = GridFunction(coeffs.spec);
  pr.terminal.fill(1.0);
  pr.coeffs = std::move(coeffs);
  pr.reaction = std::move(reaction);
  pr.horizon = horizon;
  pr.p = p;
  pr.validate();
  return pr;
}

void DualProblem::validate() const {
  coeffs.validate();
  if (!(reaction.spec() == coeffs.spec) || !(terminal.spec() == coeffs.spec))
    throw std::invalid_argument("DualProblem: field/spec mismatch");
  if (!reaction.all_finite() || !terminal.all_finite())
    throw std::invalid_argument("DualProblem: non-finite field data");
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw std::invalid_argument("DualProblem: horizon must be positive");
  if (!(p > static_cast<double>(coeffs.spec.dim)))
    throw std::invalid_argument("DualProblem: requires p > dim");
}

const GridFunction& DualSolution::at_time(double t) const {
  for (std::size_t k = 0; k < times.size(); ++k)
    if (std::abs(times[k] - t) <= 1e-9 * std::max(1.0, std::abs(t)))
      return phi[k];
  throw std::invalid_argument("DualSolution: t is not a stored mesh time");
}

double explicit_dt_bound(const DualProblem& problem) {
  const GridSpec& spec = problem.coeffs.spec;
  const double cmax = problem.coeffs.max_coeff();
  return spec.dx * spec.dx / (2.0 * spec.dim * cmax);
}

namespace {

// forward-time right-hand side  (1/2) sum_j c_j grad_+ grad_- psi - Z psi
void apply_dual_rhs(const DualProblem& pr, const GridFunction& psi,
                    GridFunction& out) {
  const GridSpec& spec = pr.coeffs.spec;
  const double inv2 = 1.0 / (spec.dx * spec.dx);
  for_each_cell(spec, [&](std::size_t i, const MultiIndex& alpha) {
    double acc = -pr.reaction[i] * psi[i];
    for (int j = 0; j < spec.dim; ++j) {
      const double lap = psi.neighbor(i, alpha[j], j, +1) - 2.0 * psi[i] +
                         psi.neighbor(i, alpha[j], j, -1);
      acc += 0.5 * pr.coeffs.c[static_cast<std::size_t>(j)][i] * lap * inv2;
    }
    out[i] = acc;
  });
}

// One implicit-Euler step  (I - dt (A - Z)) psi_next = psi  with the linear
// solve strategy fixed by dimension and boundary rule.
class ImplicitStepper {
 public:
  ImplicitStepper(const DualProblem& pr, double dt) : pr_(pr) {
    const GridSpec& spec = pr.coeffs.spec;
    const std::size_t n = spec.cell_count();
    if (spec.dim == 1) {
      build_tridiag(pr, dt, n);
    } else {
      build_sparse(pr, dt, n);
    }
  }

  void step(std::vector<double>& psi) {
    if (pr_.coeffs.spec.dim == 1) {
      tri_.solve(psi);
    } else {
      Eigen::Map<const Eigen::VectorXd> b(psi.data(),
                                          static_cast<Eigen::Index>(psi.size()));
      Eigen::VectorXd x = lu_.solve(b);
      std::copy(x.data(), x.data() + x.size(), psi.begin());
    }
  }

 private:
  void build_tridiag(const DualProblem& pr, double dt, std::size_t n) {
    const GridSpec& spec = pr.coeffs.spec;
    const double inv2 = dt / (2.0 * spec.dx * spec.dx);
    tri_.sub.assign(n, 0.0);
    tri_.dia.assign(n, 0.0);
    tri_.sup.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double c = pr.coeffs.c[0][i];
      tri_.dia[i] = 1.0 + dt * pr.reaction[i] + 2.0 * c * inv2;
      if (i > 0) tri_.sub[i] = -c * inv2;
      if (i + 1 < n) tri_.sup[i] = -c * inv2;
    }
    if (spec.boundary == Boundary::Periodic) {
      tri_.corner_top = -pr.coeffs.c[0][0] * inv2;
      tri_.corner_bot = -pr.coeffs.c[0][n - 1] * inv2;
    }
    tri_.factor();
  }

  void build_sparse(const DualProblem& pr, double dt, std::size_t n) {
    const GridSpec& spec = pr.coeffs.spec;
    const double inv2 = dt / (2.0 * spec.dx * spec.dx);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(n * static_cast<std::size_t>(2 * spec.dim + 1));
    GridFunction helper(spec);
    for_each_cell(spec, [&](std::size_t i, const MultiIndex& alpha) {
      double dia = 1.0 + dt * pr.reaction[i];
      for (int j = 0; j < spec.dim; ++j) {
        const double w = pr.coeffs.c[static_cast<std::size_t>(j)][i] * inv2;
        dia += 2.0 * w;
        for (int s = -1; s <= 1; s += 2) {
          const std::size_t nb = helper.neighbor_index(i, alpha[j], j, s);
          if (nb == GridFunction::npos) continue;
          trip.emplace_back(static_cast<int>(i), static_cast<int>(nb), -w);
        }
      }
      trip.emplace_back(static_cast<int>(i), static_cast<int>(i), dia);
    });
    Eigen::SparseMatrix<double> m(static_cast<Eigen::Index>(n),
                                  static_cast<Eigen::Index>(n));
    m.setFromTriplets(trip.begin(), trip.end());
    lu_.compute(m);
    if (lu_.info() != Eigen::Success)
      throw std::runtime_error("solve_dual_ode: sparse factorization failed");
  }

  const DualProblem& pr_;
  internal::TriBand tri_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
};

}  // namespace

DualSolution solve_dual_ode(const DualProblem& problem, double dt,
                            DualStepper stepper, int store_every) {
  problem.validate();
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw std::invalid_argument("solve_dual_ode: dt must be positive");
  if (store_every < 1)
    throw std::invalid_argument("solve_dual_ode: store_every must be >= 1");
  const double T = problem.horizon;
  const long n_steps = std::max(1L, std::lround(std::ceil(T / dt - 1e-9)));
  const double h = T / static_cast<double>(n_steps);

  if (stepper == DualStepper::ExplicitEuler) {
    const double bound = explicit_dt_bound(problem);
    if (h > bound * (1.0 + 1e-12)) {
      char msg[160];
      std::snprintf(msg, sizeof msg,
                    "solve_dual_ode: explicit step %.6g exceeds the "
                    "stability bound %.6g = dx^2 / (2 d max c)",
                    h, bound);
      throw std::invalid_argument(msg);
    }
  }

  const GridSpec& spec = problem.coeffs.spec;
  const std::size_t n = spec.cell_count();

  std::vector<double> psi(n);
  for (std::size_t i = 0; i < n; ++i) psi[i] = problem.terminal[i];

  // forward-time frames at stored steps; converted to backward time below
  std::vector<double> s_times;
  std::vector<std::vector<double>> frames;
  s_times.push_back(0.0);
  frames.push_back(psi);

  GridFunction cur(spec), rhs(spec);
  ImplicitStepper* implicit = nullptr;
  std::unique_ptr<ImplicitStepper> implicit_holder;
  if (stepper == DualStepper::ImplicitEuler) {
    implicit_holder = std::make_unique<ImplicitStepper>(problem, h);
    implicit = implicit_holder.get();
  }

  for (long k = 1; k <= n_steps; ++k) {
    if (implicit != nullptr) {
      implicit->step(psi);
    } else {
      std::copy(psi.begin(), psi.end(), cur.data());
      apply_dual_rhs(problem, cur, rhs);
      for (std::size_t i = 0; i < n; ++i) psi[i] += h * rhs[i];
    }
    if (k % store_every == 0 || k == n_steps) {
      s_times.push_back(h * static_cast<double>(k));
      frames.push_back(psi);
    }
  }

  DualSolution sol;
  const std::size_t m = frames.size();
  sol.times.resize(m);
  sol.phi.reserve(m);
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t src = m - 1 - k;
    sol.times[k] = T - s_times[src];
    GridFunction f(spec);
    std::copy(frames[src].begin(), frames[src].end(), f.data());
    sol.phi.push_back(std::move(f));
  }
  sol.times.front() = 0.0;  // clear T - T rounding
  return sol;
}

namespace {

// quadrature of per-frame norms over the first m steps of a uniform mesh
double integrate_prefix(const std::vector<double>& g, std::size_t m, double h,
                        TimeQuad quad) {
  double acc = 0.0;
  if (quad == TimeQuad::LeftRect) {
    for (std::size_t k = 0; k < m; ++k) acc += g[k];
    return acc * h;
  }
  for (std::size_t k = 0; k <= m; ++k)
    acc += (k == 0 || k == m) ? 0.5 * g[k] : g[k];
  return acc * h;
}

}  // namespace

DualSolution solve_dual_duhamel(const DualProblem& problem,
                                const TimeKernel& gamma, double tol,
                                TimeQuad quad, PicardReport* report) {
  problem.validate();
  gamma.validate();
  if (!(tol > 0.0))
    throw std::invalid_argument("solve_dual_duhamel: tol must be positive");
  if (gamma.times.front() != 0.0)
    throw std::invalid_argument(
        "solve_dual_duhamel: propagator mesh must include t = 0");
  const double T = problem.horizon;
  if (std::abs(gamma.times.back() - T) > 1e-9 * std::max(1.0, T))
    throw std::invalid_argument(
        "solve_dual_duhamel: propagator horizon does not match the problem");
  const GridSpec& spec = problem.coeffs.spec;
  if (!(gamma.frames.front().spec() == spec))
    throw std::invalid_argument("solve_dual_duhamel: spec mismatch");

  const std::size_t n = gamma.frames.size() - 1;
  const double h = gamma.step();
  const double p = problem.p;
  const double p_conj = std::isinf(p) ? 1.0 : p / (p - 1.0);
  const double z_norm = lp_norm(problem.reaction, p);

  std::vector<double> g(n + 1);
  for (std::size_t k = 0; k <= n; ++k)
    g[k] = mixed_norm(gamma.frames[k], kInf, p_conj, MixedOrder::AlphaOuter);

  // split the horizon until the a-priori factor has clear headroom
  std::size_t splits = 0;
  double factor = 0.0;
  bool found = false;
  for (std::size_t K = 1; K <= n; ++K) {
    if (n % K != 0) continue;
    const std::size_t m = n / K;
    factor = z_norm * integrate_prefix(g, m, h, quad);
    if (factor < 0.5 || (K == n && factor < 1.0)) {
      splits = K;
      found = true;
      break;
    }
  }
  if (!found)
    throw std::runtime_error(
        "solve_dual_duhamel: no subinterval split achieves the contraction "
        "condition; shorten the horizon or refine the propagator mesh");

  const std::size_t m = n / splits;
  if (report != nullptr) {
    report->subintervals = static_cast<int>(splits);
    report->iterations.clear();
    report->contraction.clear();
    report->final_delta.clear();
  }

  GridFunction start = problem.terminal;
  std::vector<GridFunction> psi_global;
  psi_global.reserve(n + 1);
  psi_global.push_back(start);

  std::vector<GridFunction> base, cur, next, source;
  for (std::size_t j = 0; j < splits; ++j) {
    base.clear();
    base.reserve(m + 1);
    for (std::size_t i = 0; i <= m; ++i)
      base.push_back(kernel_apply(gamma.frames[i], start));
    cur = base;
    next.assign(m + 1, GridFunction(spec));
    source.assign(m + 1, GridFunction(spec));

    int iters = 0;
    double delta = 0.0;
    for (int sweep = 1;; ++sweep) {
      for (std::size_t k = 0; k <= m; ++k)
        for (std::size_t i = 0; i < spec.cell_count(); ++i)
          source[k][i] = problem.reaction[i] * cur[k][i];
      delta = 0.0;
      for (std::size_t i = 0; i <= m; ++i) {
        GridFunction v = base[i];
        for (std::size_t k = 0; k <= i && i > 0; ++k) {
          double w;
          if (quad == TimeQuad::LeftRect)
            w = (k < i) ? h : 0.0;
          else
            w = (k == 0 || k == i) ? 0.5 * h : h;
          if (w == 0.0) continue;
          GridFunction contrib = kernel_apply(gamma.frames[i - k], source[k]);
          contrib *= -w;
          v += contrib;
        }
        GridFunction diff = v;
        diff -= cur[i];
        delta = std::max(delta, diff.max_abs());
        next[i] = std::move(v);
      }
      cur.swap(next);
      iters = sweep;
      if (delta < tol) break;
      if (sweep >= 300)
        throw std::runtime_error(
            "solve_dual_duhamel: fixed point did not converge");
    }

    if (report != nullptr) {
      report->iterations.push_back(iters);
      report->contraction.push_back(factor);
      report->final_delta.push_back(delta);
    }
    for (std::size_t i = 1; i <= m; ++i) psi_global.push_back(cur[i]);
    start = cur[m];
  }

  DualSolution sol;
  sol.times = gamma.times;
  sol.phi.reserve(n + 1);
  for (std::size_t k = 0; k <= n; ++k)
    sol.phi.push_back(std::move(psi_global[n - k]));
  return sol;
}

DualDiagnostics dual_diagnostics(const DualSolution& solution) {
  if (solution.phi.empty())
    throw std::invalid_argument("dual_diagnostics: empty solution");
  const GridSpec& spec = solution.phi.front().spec();
  DualDiagnostics diag;
  diag.min_value = std::numeric_limits<double>::infinity();
  for (const GridFunction& f : solution.phi) {
    diag.sup_norm = std::max(diag.sup_norm, f.max_abs());
    for (std::size_t i = 0; i < f.size(); ++i)
      diag.min_value = std::min(diag.min_value, f[i]);
    for (int j = 0; j < spec.dim; ++j) {
      diag.sup_grad_forward[j] =
          std::max(diag.sup_grad_forward[j], forward_diff(f, j).max_abs());
      diag.sup_grad_backward[j] =
          std::max(diag.sup_grad_backward[j], backward_diff(f, j).max_abs());
    }
  }
  return diag;
}

double DualDiagnostics::sup_grad(int dim) const {
  double m = 0.0;
  for (int j = 0; j < dim; ++j)
    m = std::max({m, sup_grad_forward[j], sup_grad_backward[j]});
  return m;
}

}  // namespace stpde

