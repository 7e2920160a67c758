#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "nsshape/errors.hpp"
#include "nsshape/geometry.hpp"

namespace nsshape::geom {

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return distance(p, a);
  const double s = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return distance(p, a + s * ab);
}

double perimeter(const Polyline& p) {
  double len = 0.0;
  for (std::size_t i = 0; i < p.segment_count(); ++i) len += distance(p.segment_start(i), p.segment_end(i));
  return len;
}

double signed_area(const Polyline& p) {
  double a = 0.0;
  const std::size_t n = p.points.size();
  for (std::size_t i = 0; i < n; ++i) a += cross(p.points[i], p.points[(i + 1) % n]);
  return 0.5 * a;
}

namespace {

int sign(double v) { return (v > 0.0) - (v < 0.0); }

bool on_segment(Vec2 a, Vec2 b, Vec2 q) {
  return std::min(a.x, b.x) <= q.x && q.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= q.y &&
         q.y <= std::max(a.y, b.y);
}

bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const int o1 = sign(orient(a, b, c)), o2 = sign(orient(a, b, d));
  const int o3 = sign(orient(c, d, a)), o4 = sign(orient(c, d, b));
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

double ellipse_perimeter(double a, double b) {
  // Trapezoid rule is spectrally accurate for this periodic integrand.
  constexpr int n = 1024;
  double s = 0.0;
  for (int k = 0; k < n; ++k) {
    const double t = 2.0 * std::numbers::pi * k / n;
    s += std::hypot(a * std::sin(t), b * std::cos(t));
  }
  return s * 2.0 * std::numbers::pi / n;
}

}  // namespace

bool is_simple(const Polyline& p) {
  const std::size_t n = p.points.size();
  if (n < 2) return false;
  if (p.closed && n < 3) return false;
  const std::size_t m = p.segment_count();
  for (std::size_t i = 0; i < m; ++i)
    if (p.segment_start(i) == p.segment_end(i)) return false;
  // Bucket segments on a uniform grid to avoid the quadratic sweep on long loops.
  Vec2 lo = p.points.front(), hi = lo;
  for (Vec2 q : p.points) {
    lo = {std::min(lo.x, q.x), std::min(lo.y, q.y)};
    hi = {std::max(hi.x, q.x), std::max(hi.y, q.y)};
  }
  const int g = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(m))));
  const double wx = std::max(hi.x - lo.x, 1e-300) / g, wy = std::max(hi.y - lo.y, 1e-300) / g;
  auto cell_x = [&](double x) { return std::clamp(static_cast<int>((x - lo.x) / wx), 0, g - 1); };
  auto cell_y = [&](double y) { return std::clamp(static_cast<int>((y - lo.y) / wy), 0, g - 1); };
  std::vector<std::vector<std::size_t>> cells(static_cast<std::size_t>(g * g));
  for (std::size_t i = 0; i < m; ++i) {
    const Vec2 a = p.segment_start(i), b = p.segment_end(i);
    for (int cx = cell_x(std::min(a.x, b.x)); cx <= cell_x(std::max(a.x, b.x)); ++cx)
      for (int cy = cell_y(std::min(a.y, b.y)); cy <= cell_y(std::max(a.y, b.y)); ++cy)
        cells[static_cast<std::size_t>(cy * g + cx)].push_back(i);
  }
  auto adjacent = [&](std::size_t i, std::size_t j) {
    if (i > j) std::swap(i, j);
    if (j == i + 1) return true;
    return p.closed && i == 0 && j == m - 1;
  };
  for (const auto& cell : cells) {
    for (std::size_t u = 0; u < cell.size(); ++u) {
      for (std::size_t v = u + 1; v < cell.size(); ++v) {
        const std::size_t i = cell[u], j = cell[v];
        const Vec2 a = p.segment_start(i), b = p.segment_end(i);
        const Vec2 c = p.segment_start(j), d = p.segment_end(j);
        if (adjacent(i, j)) {
          // Adjacent segments may only share their common endpoint: reject folds.
          const bool shares_b = (b == c);
          const Vec2 pivot = shares_b ? b : a;
          const Vec2 other_i = shares_b ? a : b;
          const Vec2 other_j = shares_b ? d : c;
          if (sign(orient(pivot, other_i, other_j)) == 0 && dot(other_i - pivot, other_j - pivot) > 0.0)
            return false;
          continue;
        }
        if (segments_intersect(a, b, c, d)) return false;
      }
    }
  }
  return true;
}

bool point_in_polygon(const Polyline& p, Vec2 q) {
  bool in = false;
  const std::size_t n = p.points.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 a = p.points[i], b = p.points[j];
    if ((a.y > q.y) != (b.y > q.y)) {
      const double x = a.x + (q.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (q.x < x) in = !in;
    }
  }
  return in;
}

double distance_to_polyline(const Polyline& p, Vec2 q) {
  if (p.points.size() == 1) return distance(q, p.points.front());
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < p.segment_count(); ++i)
    d = std::min(d, point_segment_distance(q, p.segment_start(i), p.segment_end(i)));
  return d;
}

Polyline resample(const Polyline& p, double h) {
  const std::size_t m = p.segment_count();
  std::vector<double> cum(m + 1, 0.0);
  for (std::size_t i = 0; i < m; ++i) cum[i + 1] = cum[i] + distance(p.segment_start(i), p.segment_end(i));
  const double total = cum[m];
  const std::size_t n = std::max<std::size_t>(3, static_cast<std::size_t>(std::lround(total / h)));
  Polyline out;
  out.closed = true;
  out.points.reserve(n);
  std::size_t seg = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double s = total * static_cast<double>(k) / static_cast<double>(n);
    while (seg + 1 < m && cum[seg + 1] <= s) ++seg;
    const double len = cum[seg + 1] - cum[seg];
    const double t = len > 0.0 ? (s - cum[seg]) / len : 0.0;
    out.points.push_back(p.segment_start(seg) + t * (p.segment_end(seg) - p.segment_start(seg)));
  }
  return out;
}

void validate(const ShapeSpec& spec) {
  if (const auto* c = std::get_if<Circle>(&spec)) {
    if (!(c->radius > 0.0)) throw InvalidShapeError("circle radius must be positive");
  } else if (const auto* e = std::get_if<Ellipse>(&spec)) {
    if (!(e->semi_x > 0.0) || !(e->semi_y > 0.0)) throw InvalidShapeError("ellipse semi-axes must be positive");
  } else {
    const auto& p = std::get<Polyline>(spec);
    if (!p.closed || p.points.size() < 3 || !is_simple(p) || signed_area(p) == 0.0)
      throw InvalidShapeError("polyline shape must be closed, simple and enclose an area");
  }
}

bool inside(const ShapeSpec& spec, Vec2 q) {
  if (const auto* c = std::get_if<Circle>(&spec)) return distance(q, c->center) < c->radius;
  if (const auto* e = std::get_if<Ellipse>(&spec)) {
    const double dx = (q.x - e->center.x) / e->semi_x, dy = (q.y - e->center.y) / e->semi_y;
    return dx * dx + dy * dy < 1.0;
  }
  return point_in_polygon(std::get<Polyline>(spec), q);
}

std::vector<Vec2> sample_boundary(const ShapeSpec& spec, std::size_t n) {
  std::vector<Vec2> out;
  out.reserve(n);
  if (const auto* c = std::get_if<Circle>(&spec)) {
    for (std::size_t k = 0; k < n; ++k) {
      const double t = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
      out.push_back({c->center.x + c->radius * std::cos(t), c->center.y + c->radius * std::sin(t)});
    }
  } else if (const auto* e = std::get_if<Ellipse>(&spec)) {
    for (std::size_t k = 0; k < n; ++k) {
      const double t = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
      out.push_back({e->center.x + e->semi_x * std::cos(t), e->center.y + e->semi_y * std::sin(t)});
    }
  } else {
    const auto& p = std::get<Polyline>(spec);
    const Polyline r = resample(p, perimeter(p) / static_cast<double>(std::max<std::size_t>(n, 3)));
    out = r.points;
  }
  return out;
}

Polyline discretize_boundary(const ShapeSpec& spec, double h) {
  validate(spec);
  if (!(h > 0.0)) throw InvalidShapeError("discretize_boundary: h must be positive");
  if (const auto* p = std::get_if<Polyline>(&spec)) return resample(*p, h);
  double len = 0.0;
  if (const auto* c = std::get_if<Circle>(&spec)) len = 2.0 * std::numbers::pi * c->radius;
  if (const auto* e = std::get_if<Ellipse>(&spec)) len = ellipse_perimeter(e->semi_x, e->semi_y);
  const std::size_t n = std::max<std::size_t>(3, static_cast<std::size_t>(std::lround(len / h)));
  return Polyline{sample_boundary(spec, n), true};
}

Vec2 Mesh::centroid(std::size_t t) const {
  const auto& tri = triangles[t];
  return (1.0 / 3.0) * (vertices[tri[0]] + vertices[tri[1]] + vertices[tri[2]]);
}

double Mesh::signed_area(std::size_t t) const {
  const auto& tri = triangles[t];
  return 0.5 * orient(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
}

double Mesh::area() const {
  double a = 0.0;
  for (std::size_t t = 0; t < triangles.size(); ++t) a += signed_area(t);
  return a;
}

Mesh rectangle_mesh(Vec2 lower, Vec2 upper, int nx, int ny) {
  Mesh mesh;
  mesh.h_target = std::max((upper.x - lower.x) / nx, (upper.y - lower.y) / ny);
  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      mesh.vertices.push_back({lower.x + (upper.x - lower.x) * i / nx, lower.y + (upper.y - lower.y) * j / ny});
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      mesh.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      mesh.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  for (int i = 0; i < nx; ++i) mesh.boundary_edges.push_back({id(i, 0), id(i + 1, 0), 1});
  for (int j = 0; j < ny; ++j) mesh.boundary_edges.push_back({id(nx, j), id(nx, j + 1), 1});
  for (int i = nx; i > 0; --i) mesh.boundary_edges.push_back({id(i, ny), id(i - 1, ny), 1});
  for (int j = ny; j > 0; --j) mesh.boundary_edges.push_back({id(0, j), id(0, j - 1), 1});
  return mesh;
}

Polyline boundary_polyline(const Mesh& mesh) {
  Polyline out;
  if (mesh.boundary_edges.empty()) return out;
  std::map<int, int> next;
  for (const auto& e : mesh.boundary_edges) next[e.a] = e.b;
  const int start = mesh.boundary_edges.front().a;
  int v = start;
  do {
    out.points.push_back(mesh.vertices[v]);
    const auto it = next.find(v);
    if (it == next.end()) break;
    v = it->second;
  } while (v != start && out.points.size() <= mesh.boundary_edges.size());
  return out;
}

std::vector<Vec2> boundary_normals(const Mesh& mesh) {
  std::vector<Vec2> normals;
  normals.reserve(mesh.boundary_edges.size());
  for (const auto& e : mesh.boundary_edges) {
    const Vec2 d = mesh.vertices[e.b] - mesh.vertices[e.a];
    const double len = norm(d);
    normals.push_back({d.y / len, -d.x / len});
  }
  return normals;
}

Mesh deform_mesh(const Mesh& mesh, std::span<const Vec2> displacement, double step) {
  Mesh out = mesh;
  for (std::size_t v = 0; v < out.vertices.size(); ++v) out.vertices[v] += step * displacement[v];
  return out;
}

QualityReport mesh_quality(const Mesh& mesh) {
  QualityReport q;
  q.min_angle_deg = 180.0;
  q.min_area = std::numeric_limits<double>::infinity();
  double max_edge = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Vec2 p[3] = {mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]};
    for (int k = 0; k < 3; ++k) {
      const Vec2 u = p[(k + 1) % 3] - p[k], v = p[(k + 2) % 3] - p[k];
      const double ang = std::atan2(std::abs(cross(u, v)), dot(u, v)) * 180.0 / std::numbers::pi;
      q.min_angle_deg = std::min(q.min_angle_deg, ang);
      max_edge = std::max(max_edge, norm(u));
    }
    q.min_area = std::min(q.min_area, mesh.signed_area(t));
  }
  q.max_edge_ratio = mesh.h_target > 0.0 ? max_edge / mesh.h_target : max_edge;
  return q;
}

bool contains_region(const Polyline& outer, const ShapeSpec& inner, std::size_t n_samples, double margin) {
  for (Vec2 q : sample_boundary(inner, n_samples)) {
    if (!point_in_polygon(outer, q)) return false;
    const double d = distance_to_polyline(outer, q);
    if (d <= 0.0 || d < margin) return false;
  }
  return true;
}

}  // namespace nsshape::geom
