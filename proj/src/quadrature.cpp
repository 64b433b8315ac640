// Cell-average projection (implementation).
//
// Copyright (c) 2026 The stpde authors
// SPDX-License-Identifier: MIT

#include "stpde/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace stpde {

namespace {

// Gauss-Legendre abscissae/weights on [-1, 1], n = 1..8.
const double kNodes1[] = {0.0};
const double kWeights1[] = {2.0};

const double kNodes2[] = {-0.5773502691896257645091488, 0.5773502691896257645091488};
const double kWeights2[] = {1.0, 1.0};

const double kNodes3[] = {-0.7745966692414833770358531, 0.0,
                          0.7745966692414833770358531};
const double kWeights3[] = {0.5555555555555555555555556, 0.8888888888888888888888889,
                            0.5555555555555555555555556};

const double kNodes4[] = {-0.8611363115940525752239465, -0.3399810435848562648026658,
                          0.3399810435848562648026658, 0.8611363115940525752239465};
const double kWeights4[] = {0.3478548451374538573730639, 0.6521451548625461426269361,
                            0.6521451548625461426269361, 0.3478548451374538573730639};

const double kNodes5[] = {-0.9061798459386639927976269, -0.5384693101056830910363144,
                          0.0, 0.5384693101056830910363144,
                          0.9061798459386639927976269};
const double kWeights5[] = {0.2369268850561890875142640, 0.4786286704993664680412915,
                            0.5688888888888888888888889, 0.4786286704993664680412915,
                            0.2369268850561890875142640};

const double kNodes6[] = {-0.9324695142031520278123016, -0.6612093864662645136613996,
                          -0.2386191860831969086305017, 0.2386191860831969086305017,
                          0.6612093864662645136613996, 0.9324695142031520278123016};
const double kWeights6[] = {0.1713244923791703450402961, 0.3607615730481386075698335,
                            0.4679139345726910473898703, 0.4679139345726910473898703,
                            0.3607615730481386075698335, 0.1713244923791703450402961};

const double kNodes7[] = {-0.9491079123427585245261897, -0.7415311855993944398638648,
                          -0.4058451513773971669066064, 0.0,
                          0.4058451513773971669066064, 0.7415311855993944398638648,
                          0.9491079123427585245261897};
const double kWeights7[] = {0.1294849661688696932706114, 0.2797053914892766679014678,
                            0.3818300505051189449503698, 0.4179591836734693877551020,
                            0.3818300505051189449503698, 0.2797053914892766679014678,
                            0.1294849661688696932706114};

const double kNodes8[] = {-0.9602898564975362316835609, -0.7966664774136267395915539,
                          -0.5255324099163289858177390, -0.1834346424956498049394761,
                          0.1834346424956498049394761, 0.5255324099163289858177390,
                          0.7966664774136267395915539, 0.9602898564975362316835609};
const double kWeights8[] = {0.1012285362903762591525314, 0.2223810344533744705443560,
                            0.3137066458778872873379622, 0.3626837833783619829651504,
                            0.3626837833783619829651504, 0.3137066458778872873379622,
                            0.2223810344533744705443560, 0.1012285362903762591525314};

const double* kNodeTable[] = {kNodes1, kNodes2, kNodes3, kNodes4,
                              kNodes5, kNodes6, kNodes7, kNodes8};
const double* kWeightTable[] = {kWeights1, kWeights2, kWeights3, kWeights4,
                                kWeights5, kWeights6, kWeights7, kWeights8};

}  // namespace

void gauss_legendre(int n_points, const double** nodes,
                    const double** weights) {
  if (n_points < 1 || n_points > 8)
    throw std::invalid_argument("gauss_legendre: supported orders are 1..8");
  *nodes = kNodeTable[n_points - 1];
  *weights = kWeightTable[n_points - 1];
}

GridFunction project(const GridSpec& spec, const ScalarField& f, int order) {
  spec.validate();
  const double* nodes;
  const double* weights;
  gauss_legendre(order, &nodes, &weights);

  GridFunction out(spec);
  const int d = spec.dim;
  const double half = 0.5 * spec.dx;

  // tensor-product rule; weights are normalized so they average (sum of
  // w/2 over one axis is 1), which makes the projection a cell mean
  std::array<int, kMaxDim> q{};
  for_each_cell(spec, [&](std::size_t i, const MultiIndex& alpha) {
    double acc = 0.0;
    q.fill(0);
    while (true) {
      double w = 1.0;
      Point x{};
      for (int j = 0; j < d; ++j) {
        w *= 0.5 * weights[q[j]];
        x[j] = spec.coord(alpha[j]) + half * nodes[q[j]];
      }
      const double v = f(x);
      if (!std::isfinite(v))
        throw std::runtime_error("project: integrand returned non-finite value");
      acc += w * v;
      int j = d - 1;
      for (; j >= 0; --j) {
        if (++q[j] < order) break;
        q[j] = 0;
      }
      if (j < 0) break;
    }
    out[i] = acc;
  });
  return out;
}

VectorGridFunction project_vector(const GridSpec& spec,
                                  const std::vector<ScalarField>& comps,
                                  int order) {
  if (static_cast<int>(comps.size()) != spec.dim)
    throw std::invalid_argument("project_vector: need one component per axis");
  VectorGridFunction out(spec);
  for (int j = 0; j < spec.dim; ++j)
    out.comp(j) = project(spec, comps[static_cast<std::size_t>(j)], order);
  return out;
}

}  // namespace stpde
