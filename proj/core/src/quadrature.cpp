#include "nsshape/quadrature.hpp"

#include <cmath>
#include <numbers>

namespace nsshape::fem {

const TriangleRule& gauss7() {
  static const TriangleRule rule = [] {
    const double s15 = std::sqrt(15.0);
    const double a1 = (6.0 - s15) / 21.0, w1 = (155.0 - s15) / 1200.0;
    const double a2 = (6.0 + s15) / 21.0, w2 = (155.0 + s15) / 1200.0;
    TriangleRule r;
    r.push_back({{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, 9.0 / 40.0});
    for (int k = 0; k < 3; ++k) {
      std::array<double, 3> b{a1, a1, a1};
      b[k] = 1.0 - 2.0 * a1;
      r.push_back({b, w1});
    }
    for (int k = 0; k < 3; ++k) {
      std::array<double, 3> b{a2, a2, a2};
      b[k] = 1.0 - 2.0 * a2;
      r.push_back({b, w2});
    }
    return r;
  }();
  return rule;
}

LineRule gauss_legendre(int n) {
  LineRule r;
  r.nodes.resize(static_cast<std::size_t>(n));
  r.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    r.nodes[static_cast<std::size_t>(i)] = 0.5 * (1.0 - x);
    r.weights[static_cast<std::size_t>(i)] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

const LineRule& edge_gauss3() {
  static const LineRule rule = gauss_legendre(3);
  return rule;
}

TriangleRule collapsed_gauss(int n) {
  // (u, v) in [0,1]^2 -> (xi, eta) = (u, v (1 - u)), Jacobian (1 - u).
  const LineRule g = gauss_legendre(n);
  TriangleRule r;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double u = g.nodes[i], v = g.nodes[j];
      const double xi = u, eta = v * (1.0 - u);
      r.push_back({{1.0 - xi - eta, xi, eta}, 2.0 * g.weights[i] * g.weights[j] * (1.0 - u)});
    }
  return r;
}

}  // namespace nsshape::fem
