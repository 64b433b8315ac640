#include "stpde/oracle.hpp"

#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "stpde/lattice.hpp"
#include "tridiag.hpp"

namespace stpde {

double pairing(const GridFunction& f, const GridFunction& g) {
  if (f.spec().dim != g.spec().dim || f.size() != g.size())
    throw std::invalid_argument("pairing: mismatched grids");
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += f[i] * g[i];
  return f.spec().cell_volume() * s;
}

namespace {

// Row weights of the drift operator A at cell i, axis j:
//   neighbor -1:  vp/dx + sigma*avg_- sigma / (2 dx^2)
//   neighbor +1:  vm/dx + sigma*avg_+ sigma / (2 dx^2)
//   diagonal   : -(vp+vm)/dx - sigma*(avg_+ + avg_-) sigma / (2 dx^2)
// with vp = max(V_j, 0), vm = max(-V_j, 0).  The implicit matrix is
// I - dt A: unit row sums on periodic grids and nonpositive off-diagonal
// entries, so constants are reproduced exactly and the solve is an
// M-matrix system.
class MeanFieldStepper {
 public:
  MeanFieldStepper(const SchemeCoefficients& coeffs, double dt)
      : spec_(coeffs.spec), dt_(dt) {
    const std::size_t n = spec_.cell_count();
    sig_plus_.reserve(static_cast<std::size_t>(spec_.dim));
    sig_minus_.reserve(static_cast<std::size_t>(spec_.dim));
    for (int j = 0; j < spec_.dim; ++j) {
      sig_plus_.push_back(average_plus(coeffs.sigma, j));
      sig_minus_.push_back(average_minus(coeffs.sigma, j));
    }
    if (spec_.dim == 1) {
      build_tridiag(coeffs, n);
    } else {
      build_sparse(coeffs, n);
    }
  }

  // Rebuild for a different step size (used for the final shortened step).
  void refactor(const SchemeCoefficients& coeffs, double dt) {
    dt_ = dt;
    const std::size_t n = spec_.cell_count();
    if (spec_.dim == 1) {
      build_tridiag(coeffs, n);
    } else {
      build_sparse(coeffs, n);
    }
  }

  void step(double* m) {
    if (spec_.dim == 1) {
      tri_.solve(m);
    } else {
      const Eigen::Index n = static_cast<Eigen::Index>(spec_.cell_count());
      Eigen::Map<const Eigen::VectorXd> b(m, n);
      Eigen::VectorXd x = lu_.solve(b);
      std::copy(x.data(), x.data() + x.size(), m);
    }
  }

 private:
  // Off-diagonal weight toward neighbor `shift` along axis j, times -dt.
  double coupling(const SchemeCoefficients& coeffs, std::size_t i, int j,
                  int shift) const {
    const double inv_dx = 1.0 / spec_.dx;
    const double inv2 = 1.0 / (2.0 * spec_.dx * spec_.dx);
    const double v = coeffs.V.comp(j)[i];
    const double sig = coeffs.sigma[i];
    const std::size_t ju = static_cast<std::size_t>(j);
    if (shift < 0)
      return -dt_ * (std::max(v, 0.0) * inv_dx + sig * sig_minus_[ju][i] * inv2);
    return -dt_ * (std::max(-v, 0.0) * inv_dx + sig * sig_plus_[ju][i] * inv2);
  }

  void build_tridiag(const SchemeCoefficients& coeffs, std::size_t n) {
    tri_.sub.assign(n, 0.0);
    tri_.dia.assign(n, 0.0);
    tri_.sup.assign(n, 0.0);
    tri_.corner_top = 0.0;
    tri_.corner_bot = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double lo = coupling(coeffs, i, 0, -1);
      const double hi = coupling(coeffs, i, 0, +1);
      tri_.dia[i] = 1.0 - lo - hi;
      if (i > 0) tri_.sub[i] = lo;
      if (i + 1 < n) tri_.sup[i] = hi;
      if (spec_.boundary == Boundary::Periodic) {
        if (i == 0) tri_.corner_top = lo;
        if (i + 1 == n) tri_.corner_bot = hi;
      }
    }
    tri_.factor();
  }

  void build_sparse(const SchemeCoefficients& coeffs, std::size_t n) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(n * static_cast<std::size_t>(2 * spec_.dim + 1));
    GridFunction helper(spec_);
    for_each_cell(spec_, [&](std::size_t i, const MultiIndex& alpha) {
      double dia = 1.0;
      for (int j = 0; j < spec_.dim; ++j) {
        for (int s = -1; s <= 1; s += 2) {
          const double w = coupling(coeffs, i, j, s);
          dia -= w;
          const std::size_t nb = helper.neighbor_index(i, alpha[j], j, s);
          if (nb == GridFunction::npos) continue;
          trip.emplace_back(static_cast<int>(i), static_cast<int>(nb), w);
        }
      }
      trip.emplace_back(static_cast<int>(i), static_cast<int>(i), dia);
    });
    Eigen::SparseMatrix<double> mat(static_cast<Eigen::Index>(n),
                                    static_cast<Eigen::Index>(n));
    mat.setFromTriplets(trip.begin(), trip.end());
    lu_.compute(mat);
    if (lu_.info() != Eigen::Success)
      throw std::runtime_error("mean_energy_oracle: factorization failed");
  }

  GridSpec spec_;
  double dt_;
  std::vector<GridFunction> sig_plus_, sig_minus_;
  internal::TriBand tri_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
};

}  // namespace

GridFunction mean_energy_oracle(const SchemeCoefficients& coeffs,
                                const GridFunction& m0, double T, double dt) {
  coeffs.validate();
  if (m0.size() != coeffs.spec.cell_count())
    throw std::invalid_argument("mean_energy_oracle: initial data mismatch");
  if (!(T > 0.0) || !std::isfinite(T))
    throw std::invalid_argument("mean_energy_oracle: horizon must be positive");
  if (dt <= 0.0) dt = coeffs.spec.dx * coeffs.spec.dx;
  dt = std::min(dt, T);

  // Desk-scale budget: reject runs whose cell-step count forecasts hours.
  const double work =
      static_cast<double>(coeffs.spec.cell_count()) * std::ceil(T / dt);
  if (work > 4e9)
    throw std::invalid_argument(
        "mean_energy_oracle: estimated " + std::to_string(work) +
        " cell-steps exceeds the 4e9 budget; coarsen dx or raise dt");

  const long n_full = static_cast<long>(std::floor(T / dt + 1e-12));
  const double rem = T - static_cast<double>(n_full) * dt;

  GridFunction m = m0;
  MeanFieldStepper stepper(coeffs, dt);
  for (long k = 0; k < n_full; ++k) stepper.step(m.data());
  if (rem > 1e-12 * T) {
    stepper.refactor(coeffs, rem);
    stepper.step(m.data());
  }
  if (!m.all_finite())
    throw std::runtime_error("mean_energy_oracle: non-finite state");
  return m;
}

}  // namespace stpde
