#pragma once

#include <array>
#include <vector>

namespace nsshape::fem {

/// Point on the reference triangle in barycentric form with a weight
/// normalized so that the weights sum to 1 (multiply by |K| to integrate).
struct QuadPoint {
  std::array<double, 3> bary;
  double weight;
};

using TriangleRule = std::vector<QuadPoint>;

/// 7-point symmetric Gauss rule, exact for degree 5.
const TriangleRule& gauss7();

/// Collapsed (Duffy) Gauss-Legendre rule with n*n points, exact for degree 2n-2.
TriangleRule collapsed_gauss(int n);

/// Gauss-Legendre nodes and weights on [0, 1].
struct LineRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

LineRule gauss_legendre(int n);

/// 3-point Gauss rule on [0, 1] used for boundary-edge integrals.
const LineRule& edge_gauss3();

}  // namespace nsshape::fem
