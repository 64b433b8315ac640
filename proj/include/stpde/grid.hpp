// Truncated-lattice containers: grid specification, scalar/vector fields,
// and dense two-index kernels.
//
// Copyright (c) 2026 The stpde authors
// SPDX-License-Identifier: MIT

#ifndef STPDE_GRID_HPP
#define STPDE_GRID_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace stpde {

/// Hard cap on the spatial dimension. Everything is written for runtime d,
/// but fixed-size index arrays keep the hot loops allocation-free.
inline constexpr int kMaxDim = 4;

/// Multi-index alpha in {-N..N}^d (entries beyond dim are ignored).
using MultiIndex = std::array<int, kMaxDim>;

/// Physical point x in R^d (entries beyond dim are ignored).
using Point = std::array<double, kMaxDim>;

/// Exterior rule applied when an index leaves the box {-N..N}^d.
enum class Boundary : std::uint8_t {
  ZeroExterior,  ///< lookups outside the box read 0 (compact-support work)
  Periodic,      ///< indices wrap modulo the box period 2N+1
};

/// Geometry of the truncated lattice: cells C_alpha centered at
/// x_alpha = alpha * dx with side length dx, alpha in {-N..N}^d.
struct GridSpec {
  int dim = 1;          ///< spatial dimension d >= 1
  int radius = 1;       ///< N >= 1; indices run over {-N..N} per axis
  double dx = 1.0;      ///< mesh width > 0
  Boundary boundary = Boundary::ZeroExterior;

  /// Points per axis, 2N+1.
  int points_per_axis() const { return 2 * radius + 1; }
  /// Total number of cells, (2N+1)^d.
  std::size_t cell_count() const;
  /// Cell volume dx^d.
  double cell_volume() const;
  /// Half-width of the covered box, (N + 1/2) * dx.
  double half_width() const { return (radius + 0.5) * dx; }
  /// Cell center coordinate along one axis.
  double coord(int alpha_j) const { return alpha_j * dx; }

  /// Throws std::invalid_argument on malformed parameters.
  void validate() const;

  bool operator==(const GridSpec&) const = default;
};

/// Scalar field on the truncated lattice. Storage is dense row-major with
/// axis 0 slowest, i.e. linear index  sum_j (alpha_j + N) * stride_j  with
/// stride_{d-1} = 1.
class GridFunction {
 public:
  GridFunction() = default;
  explicit GridFunction(const GridSpec& spec);

  const GridSpec& spec() const { return spec_; }
  std::size_t size() const { return data_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  /// Linear index of an in-box multi-index (no boundary handling).
  std::size_t linear_index(const MultiIndex& alpha) const;
  /// Multi-index of a linear index.
  MultiIndex multi_index(std::size_t i) const;
  /// Stride of axis j in the linear layout.
  std::size_t stride(int axis) const { return strides_[axis]; }

  /// In-box accessors (alpha must lie in {-N..N}^d).
  double at(const MultiIndex& alpha) const { return data_[linear_index(alpha)]; }
  double& at(const MultiIndex& alpha) { return data_[linear_index(alpha)]; }

  /// Boundary-aware lookup: applies the spec's exterior rule when alpha
  /// leaves the box.
  double value(MultiIndex alpha) const;

  /// Neighbor lookup alpha + shift * e_axis given the cell's linear index
  /// and its coordinate along `axis`; hot-loop friendly (shift is +-1).
  double neighbor(std::size_t i, int alpha_axis, int axis, int shift) const;

  /// Sentinel returned by neighbor_index when the neighbor falls outside a
  /// ZeroExterior box.
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  /// Linear index of alpha + shift * e_axis, or npos when the neighbor is
  /// exterior under ZeroExterior (periodic specs always wrap to a cell).
  std::size_t neighbor_index(std::size_t i, int alpha_axis, int axis,
                             int shift) const;

  void fill(double v);
  /// max_i |f_i|
  double max_abs() const;
  /// true iff every entry is finite
  bool all_finite() const;

  GridFunction& operator+=(const GridFunction& other);
  GridFunction& operator-=(const GridFunction& other);
  GridFunction& operator*=(double s);

 private:
  GridSpec spec_;
  std::array<std::size_t, kMaxDim> strides_{};
  std::vector<double> data_;
};

/// Vector field on the lattice: one scalar component per axis.
class VectorGridFunction {
 public:
  VectorGridFunction() = default;
  explicit VectorGridFunction(const GridSpec& spec);

  const GridSpec& spec() const { return spec_; }
  int components() const { return spec_.dim; }
  GridFunction& comp(int j) { return comps_[j]; }
  const GridFunction& comp(int j) const { return comps_[j]; }

 private:
  GridSpec spec_;
  std::vector<GridFunction> comps_;
};

/// Dense two-index kernel F_{alpha,beta}: rows are the field index alpha,
/// columns the source index beta. Desk-scale only; construction enforces a
/// cell-count cap so the (2N+1)^d x (2N+1)^d matrix stays in memory.
class Kernel2 {
 public:
  using Matrix =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  Kernel2() = default;
  explicit Kernel2(const GridSpec& spec);

  const GridSpec& spec() const { return spec_; }
  std::size_t n() const { return static_cast<std::size_t>(m_.rows()); }
  Matrix& matrix() { return m_; }
  const Matrix& matrix() const { return m_; }

  double operator()(std::size_t a, std::size_t b) const { return m_(a, b); }
  double& operator()(std::size_t a, std::size_t b) { return m_(a, b); }

  /// Largest cell count for which dense two-index storage is allowed.
  static constexpr std::size_t kMaxCells = 6561;

 private:
  GridSpec spec_;
  Matrix m_;
};

/// Calls fn(i, alpha) for every cell in row-major order.
template <typename Fn>
void for_each_cell(const GridSpec& spec, Fn&& fn) {
  MultiIndex alpha{};
  for (int j = 0; j < spec.dim; ++j) alpha[j] = -spec.radius;
  const std::size_t total = spec.cell_count();
  for (std::size_t i = 0; i < total; ++i) {
    fn(i, alpha);
    // odometer increment, last axis fastest
    for (int j = spec.dim - 1; j >= 0; --j) {
      if (++alpha[j] <= spec.radius) break;
      alpha[j] = -spec.radius;
    }
  }
}

/// Writes a debug CSV dump "alpha_1..alpha_d, x_1..x_d, value" to `path`.
void dump_csv(const GridFunction& f, const std::string& path);

}  // namespace stpde

#endif  // STPDE_GRID_HPP
