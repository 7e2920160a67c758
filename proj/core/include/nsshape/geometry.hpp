#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace nsshape::geom {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
  Vec2& operator*=(double s) { x *= s; y *= s; return *this; }
  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }

/// Twice the signed area of (a, b, c); positive for counterclockwise order.
inline double orient(Vec2 a, Vec2 b, Vec2 c) { return cross(b - a, c - a); }

/// Distance from p to the closed segment [a, b].
double point_segment_distance(Vec2 p, Vec2 a, Vec2 b);

struct Polyline {
  std::vector<Vec2> points;
  bool closed = true;

  std::size_t segment_count() const {
    if (points.size() < 2) return 0;
    return closed ? points.size() : points.size() - 1;
  }
  Vec2 segment_start(std::size_t i) const { return points[i]; }
  Vec2 segment_end(std::size_t i) const { return points[(i + 1) % points.size()]; }
};

double perimeter(const Polyline& p);
/// Signed enclosed area (positive when counterclockwise); closed polylines only.
double signed_area(const Polyline& p);
/// True when no two non-adjacent segments intersect and consecutive points differ.
bool is_simple(const Polyline& p);
/// Even-odd ray test against a closed polyline.
bool point_in_polygon(const Polyline& p, Vec2 q);
double distance_to_polyline(const Polyline& p, Vec2 q);
/// Re-samples a closed polyline at uniform arc length, approximately `h` apart.
Polyline resample(const Polyline& p, double h);

struct Circle {
  Vec2 center;
  double radius = 1.0;
};

struct Ellipse {
  Vec2 center;
  double semi_x = 1.0;
  double semi_y = 1.0;
};

using ShapeSpec = std::variant<Circle, Ellipse, Polyline>;

/// Validates radii / polyline invariants; throws InvalidShapeError.
void validate(const ShapeSpec& spec);
/// Point-membership test for the region bounded by the shape.
bool inside(const ShapeSpec& spec, Vec2 q);
/// `n` points on the shape boundary at uniform parameter.
std::vector<Vec2> sample_boundary(const ShapeSpec& spec, std::size_t n);

Polyline discretize_boundary(const ShapeSpec& spec, double h);

struct BoundaryEdge {
  int a = 0;
  int b = 0;
  int label = 1;
};

/// Triangulated 2D domain. Triangles are counterclockwise, boundary edges are
/// oriented with the domain on their left.
struct Mesh {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<BoundaryEdge> boundary_edges;
  double h_target = 0.0;

  std::size_t vertex_count() const { return vertices.size(); }
  std::size_t triangle_count() const { return triangles.size(); }
  Vec2 centroid(std::size_t t) const;
  double signed_area(std::size_t t) const;
  double area() const;
};

/// Constrained Delaunay triangulation of the region enclosed by `boundary`
/// with Steiner points; `internal` polylines are kept as interior edges.
/// Guarantees minimum angle >= 20 degrees and maximum edge <= 1.5 h.
Mesh triangulate(const Polyline& boundary, double h, std::span<const Polyline> internal = {});

/// Re-samples `boundary` at spacing h and triangulates it.
Mesh remesh(const Polyline& boundary, double h, std::span<const Polyline> internal = {});

/// Structured criss-cross-free right-triangle mesh of a rectangle, used by
/// convergence studies.
Mesh rectangle_mesh(Vec2 lower, Vec2 upper, int nx, int ny);

/// Boundary loop (label-agnostic) as a counterclockwise closed polyline.
Polyline boundary_polyline(const Mesh& mesh);

std::vector<Vec2> boundary_normals(const Mesh& mesh);

Mesh deform_mesh(const Mesh& mesh, std::span<const Vec2> displacement, double step);

struct QualityReport {
  double min_angle_deg = 0.0;
  double min_area = 0.0;
  double max_edge_ratio = 0.0;  // max edge length / h_target
};

QualityReport mesh_quality(const Mesh& mesh);

/// All `n_samples` points of the inner boundary lie strictly inside `outer`
/// and at least `margin` away from it.
bool contains_region(const Polyline& outer, const ShapeSpec& inner, std::size_t n_samples,
                     double margin = 0.0);

double hausdorff_distance(const Polyline& a, const Polyline& b);

struct Location {
  int element = -1;
  std::array<double, 3> barycentric{};
};

inline constexpr double kBarycentricTolerance = 1e-10;

/// Point location over a fixed mesh. Keeps a walk hint, so one instance per
/// calling thread.
class PointLocator {
 public:
  explicit PointLocator(const Mesh& mesh);

  /// Element containing x with its barycentric coordinates; nullopt outside.
  std::optional<Location> locate(Vec2 x);
  std::optional<Location> locate(Vec2 x, int hint);

 private:
  std::array<double, 3> barycentric(int t, Vec2 x) const;
  bool accepts(const std::array<double, 3>& b) const;
  std::optional<Location> walk(Vec2 x, int start);
  std::optional<Location> scan_cell(Vec2 x);
  Location lowest_index_tie(Vec2 x, Location found);

  const Mesh* mesh_;
  std::vector<std::array<int, 3>> neighbors_;  // neighbors_[t][i] across edge opposite vertex i
  Vec2 grid_lo_;
  double cell_ = 1.0;
  int nx_ = 1;
  int ny_ = 1;
  std::vector<std::vector<int>> cells_;
  double snap_distance_ = 0.0;
  int last_ = 0;
};

}  // namespace nsshape::geom
