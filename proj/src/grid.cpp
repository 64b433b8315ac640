// Truncated-lattice containers (implementation).
//
// Copyright (c) 2026 The stpde authors
// SPDX-License-Identifier: MIT

#include "stpde/grid.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace stpde {

std::size_t GridSpec::cell_count() const {
  std::size_t n = 1;
  for (int j = 0; j < dim; ++j) n *= static_cast<std::size_t>(points_per_axis());
  return n;
}

double GridSpec::cell_volume() const {
  double v = 1.0;
  for (int j = 0; j < dim; ++j) v *= dx;
  return v;
}

void GridSpec::validate() const {
  if (dim < 1 || dim > kMaxDim)
    throw std::invalid_argument("GridSpec: dim must be in [1, " +
                                std::to_string(kMaxDim) + "]");
  if (radius < 1) throw std::invalid_argument("GridSpec: radius must be >= 1");
  if (!(dx > 0.0) || !std::isfinite(dx))
    throw std::invalid_argument("GridSpec: dx must be positive and finite");
}

GridFunction::GridFunction(const GridSpec& spec) : spec_(spec) {
  spec_.validate();
  std::size_t stride = 1;
  for (int j = spec_.dim - 1; j >= 0; --j) {
    strides_[j] = stride;
    stride *= static_cast<std::size_t>(spec_.points_per_axis());
  }
  data_.assign(spec_.cell_count(), 0.0);
}

std::size_t GridFunction::linear_index(const MultiIndex& alpha) const {
  std::size_t i = 0;
  for (int j = 0; j < spec_.dim; ++j)
    i += static_cast<std::size_t>(alpha[j] + spec_.radius) * strides_[j];
  return i;
}

MultiIndex GridFunction::multi_index(std::size_t i) const {
  MultiIndex alpha{};
  const int n = spec_.points_per_axis();
  for (int j = spec_.dim - 1; j >= 0; --j) {
    alpha[j] = static_cast<int>(i % static_cast<std::size_t>(n)) - spec_.radius;
    i /= static_cast<std::size_t>(n);
  }
  return alpha;
}

double GridFunction::value(MultiIndex alpha) const {
  const int N = spec_.radius;
  const int period = spec_.points_per_axis();
  for (int j = 0; j < spec_.dim; ++j) {
    if (alpha[j] < -N || alpha[j] > N) {
      if (spec_.boundary == Boundary::ZeroExterior) return 0.0;
      int a = (alpha[j] + N) % period;
      if (a < 0) a += period;
      alpha[j] = a - N;
    }
  }
  return data_[linear_index(alpha)];
}

double GridFunction::neighbor(std::size_t i, int alpha_axis, int axis,
                              int shift) const {
  const int N = spec_.radius;
  const int target = alpha_axis + shift;
  if (target >= -N && target <= N)
    return data_[i + static_cast<std::size_t>(shift) * strides_[axis]];
  if (spec_.boundary == Boundary::ZeroExterior) return 0.0;
  // periodic wrap: jump to the opposite edge of this axis
  const std::ptrdiff_t wrap =
      -static_cast<std::ptrdiff_t>(shift) * (spec_.points_per_axis() - 1);
  return data_[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i) +
                                        wrap * static_cast<std::ptrdiff_t>(
                                                   strides_[axis]))];
}

std::size_t GridFunction::neighbor_index(std::size_t i, int alpha_axis,
                                         int axis, int shift) const {
  const int N = spec_.radius;
  const int target = alpha_axis + shift;
  if (target >= -N && target <= N)
    return static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i) +
                                    static_cast<std::ptrdiff_t>(shift) *
                                        static_cast<std::ptrdiff_t>(
                                            strides_[axis]));
  if (spec_.boundary == Boundary::ZeroExterior) return npos;
  const std::ptrdiff_t wrap =
      -static_cast<std::ptrdiff_t>(shift) * (spec_.points_per_axis() - 1);
  return static_cast<std::size_t>(
      static_cast<std::ptrdiff_t>(i) +
      wrap * static_cast<std::ptrdiff_t>(strides_[axis]));
}

void GridFunction::fill(double v) { data_.assign(data_.size(), v); }

double GridFunction::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

bool GridFunction::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

GridFunction& GridFunction::operator+=(const GridFunction& other) {
  if (!(other.spec_ == spec_))
    throw std::invalid_argument("GridFunction: mismatched specs in +=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

GridFunction& GridFunction::operator-=(const GridFunction& other) {
  if (!(other.spec_ == spec_))
    throw std::invalid_argument("GridFunction: mismatched specs in -=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

GridFunction& GridFunction::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

VectorGridFunction::VectorGridFunction(const GridSpec& spec) : spec_(spec) {
  spec_.validate();
  comps_.assign(static_cast<std::size_t>(spec_.dim), GridFunction(spec_));
}

Kernel2::Kernel2(const GridSpec& spec) : spec_(spec) {
  spec_.validate();
  const std::size_t n = spec_.cell_count();
  if (n > kMaxCells)
    throw std::invalid_argument(
        "Kernel2: dense two-index storage capped at " +
        std::to_string(kMaxCells) + " cells, got " + std::to_string(n));
  m_.setZero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
}

void dump_csv(const GridFunction& f, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("dump_csv: cannot open " + path);
  const int d = f.spec().dim;
  for (int j = 0; j < d; ++j) out << "alpha_" << (j + 1) << ",";
  for (int j = 0; j < d; ++j) out << "x_" << (j + 1) << ",";
  out << "value\n";
  char buf[64];
  for_each_cell(f.spec(), [&](std::size_t i, const MultiIndex& alpha) {
    for (int j = 0; j < d; ++j) out << alpha[j] << ",";
    for (int j = 0; j < d; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", f.spec().coord(alpha[j]));
      out << buf << ",";
    }
    std::snprintf(buf, sizeof buf, "%.17g", f[i]);
    out << buf << "\n";
  });
}

}  // namespace stpde
