// Hausdorff distance between polylines viewed as continuous curves.
//
// For one segment [p, q] of A, f(x) = dist(x, B) is a minimum of functions
// that are each convex along the segment, so for any sub-interval and any
// segment s of B, max(dist(p', s), dist(q', s)) bounds f from above on it.
// Branch and bound on that bound gives the supremum to an absolute tolerance.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "nsshape/geometry.hpp"

namespace nsshape::geom {
namespace {

struct Segments {
  std::vector<Vec2> a, b;
};

Segments segments_of(const Polyline& p) {
  Segments s;
  if (p.points.size() == 1) {
    s.a.push_back(p.points[0]);
    s.b.push_back(p.points[0]);
    return s;
  }
  for (std::size_t i = 0; i < p.segment_count(); ++i) {
    s.a.push_back(p.segment_start(i));
    s.b.push_back(p.segment_end(i));
  }
  return s;
}

double dist_to_set(const Segments& s, Vec2 x) {
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < s.a.size(); ++k) d = std::min(d, point_segment_distance(x, s.a[k], s.b[k]));
  return d;
}

double upper_bound(const Segments& s, Vec2 p, Vec2 q) {
  double u = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < s.a.size(); ++k)
    u = std::min(u, std::max(point_segment_distance(p, s.a[k], s.b[k]), point_segment_distance(q, s.a[k], s.b[k])));
  return u;
}

double directed(const Polyline& from, const Segments& to, double tol) {
  const Segments src = segments_of(from);
  double best = 0.0;
  for (std::size_t k = 0; k < src.a.size(); ++k) best = std::max(best, dist_to_set(to, src.a[k]));
  struct Interval {
    Vec2 p, q;
  };
  std::vector<Interval> stack;
  for (std::size_t k = 0; k < src.a.size(); ++k) stack.push_back({src.a[k], src.b[k]});
  while (!stack.empty()) {
    const Interval iv = stack.back();
    stack.pop_back();
    if (upper_bound(to, iv.p, iv.q) <= best + tol) continue;
    const Vec2 m = 0.5 * (iv.p + iv.q);
    best = std::max(best, dist_to_set(to, m));
    if (distance(iv.p, iv.q) <= tol) continue;
    stack.push_back({iv.p, m});
    stack.push_back({m, iv.q});
  }
  return best;
}

double extent(const Polyline& p) {
  double e = 0.0;
  for (Vec2 v : p.points) e = std::max({e, std::abs(v.x), std::abs(v.y)});
  return e;
}

}  // namespace

double hausdorff_distance(const Polyline& a, const Polyline& b) {
  const double tol = 1e-14 * std::max({1.0, extent(a), extent(b)});
  const double ab = directed(a, segments_of(b), tol);
  const double ba = directed(b, segments_of(a), tol);
  return std::max(ab, ba);
}

}  // namespace nsshape::geom
