#include <algorithm>
#include <cmath>

#include "nsshape/geometry.hpp"

namespace nsshape::geom {

namespace {

double triangle_distance(Vec2 a, Vec2 b, Vec2 c, Vec2 x) {
  return std::min({point_segment_distance(x, a, b), point_segment_distance(x, b, c), point_segment_distance(x, c, a)});
}

}  // namespace

PointLocator::PointLocator(const Mesh& mesh) : mesh_(&mesh) {
  const std::size_t nt = mesh.triangles.size();
  neighbors_.assign(nt, {-1, -1, -1});
  struct EdgeRef {
    int lo, hi, tri, local;
  };
  std::vector<EdgeRef> refs;
  refs.reserve(3 * nt);
  for (std::size_t t = 0; t < nt; ++t) {
    const auto& tri = mesh.triangles[t];
    for (int i = 0; i < 3; ++i) {
      const int a = tri[(i + 1) % 3], b = tri[(i + 2) % 3];
      refs.push_back({std::min(a, b), std::max(a, b), static_cast<int>(t), i});
    }
  }
  std::sort(refs.begin(), refs.end(),
            [](const EdgeRef& x, const EdgeRef& y) { return std::tie(x.lo, x.hi, x.tri) < std::tie(y.lo, y.hi, y.tri); });
  for (std::size_t k = 0; k + 1 < refs.size(); ++k) {
    if (refs[k].lo == refs[k + 1].lo && refs[k].hi == refs[k + 1].hi) {
      neighbors_[refs[k].tri][refs[k].local] = refs[k + 1].tri;
      neighbors_[refs[k + 1].tri][refs[k + 1].local] = refs[k].tri;
    }
  }

  if (mesh.vertices.empty()) return;
  Vec2 lo = mesh.vertices.front(), hi = lo;
  for (Vec2 v : mesh.vertices) {
    lo = {std::min(lo.x, v.x), std::min(lo.y, v.y)};
    hi = {std::max(hi.x, v.x), std::max(hi.y, v.y)};
  }
  const double diam = distance(lo, hi);
  snap_distance_ = 1e-8 * diam;
  const double w = hi.x - lo.x, hgt = hi.y - lo.y;
  cell_ = std::max(std::sqrt(std::max(w * hgt, 1e-300) / std::max<std::size_t>(nt, 1)) * 1.5, 1e-12 * diam);
  grid_lo_ = {lo.x - snap_distance_, lo.y - snap_distance_};
  nx_ = std::max(1, static_cast<int>(std::ceil((w + 2 * snap_distance_) / cell_)));
  ny_ = std::max(1, static_cast<int>(std::ceil((hgt + 2 * snap_distance_) / cell_)));
  cells_.assign(static_cast<std::size_t>(nx_) * ny_, {});
  for (std::size_t t = 0; t < nt; ++t) {
    const auto& tri = mesh.triangles[t];
    Vec2 tlo = mesh.vertices[tri[0]], thi = tlo;
    for (int k = 1; k < 3; ++k) {
      const Vec2 v = mesh.vertices[tri[k]];
      tlo = {std::min(tlo.x, v.x), std::min(tlo.y, v.y)};
      thi = {std::max(thi.x, v.x), std::max(thi.y, v.y)};
    }
    const int x0 = std::clamp(static_cast<int>((tlo.x - snap_distance_ - grid_lo_.x) / cell_), 0, nx_ - 1);
    const int x1 = std::clamp(static_cast<int>((thi.x + snap_distance_ - grid_lo_.x) / cell_), 0, nx_ - 1);
    const int y0 = std::clamp(static_cast<int>((tlo.y - snap_distance_ - grid_lo_.y) / cell_), 0, ny_ - 1);
    const int y1 = std::clamp(static_cast<int>((thi.y + snap_distance_ - grid_lo_.y) / cell_), 0, ny_ - 1);
    for (int cy = y0; cy <= y1; ++cy)
      for (int cx = x0; cx <= x1; ++cx) cells_[static_cast<std::size_t>(cy) * nx_ + cx].push_back(static_cast<int>(t));
  }
}

std::array<double, 3> PointLocator::barycentric(int t, Vec2 x) const {
  const auto& tri = mesh_->triangles[t];
  const Vec2 a = mesh_->vertices[tri[0]], b = mesh_->vertices[tri[1]], c = mesh_->vertices[tri[2]];
  const double det = orient(a, b, c);
  const double l1 = orient(a, x, c) / det;
  const double l2 = orient(a, b, x) / det;
  return {1.0 - l1 - l2, l1, l2};
}

bool PointLocator::accepts(const std::array<double, 3>& b) const {
  return b[0] >= -kBarycentricTolerance && b[1] >= -kBarycentricTolerance && b[2] >= -kBarycentricTolerance;
}

std::optional<Location> PointLocator::walk(Vec2 x, int start) {
  int t = start;
  const std::size_t limit = mesh_->triangles.size() + 1;
  for (std::size_t step = 0; step < limit; ++step) {
    const auto b = barycentric(t, x);
    if (accepts(b)) return Location{t, b};
    int worst = 0;
    for (int k = 1; k < 3; ++k)
      if (b[k] < b[worst]) worst = k;
    const int next = neighbors_[t][worst];
    if (next < 0) return std::nullopt;
    t = next;
  }
  return std::nullopt;
}

std::optional<Location> PointLocator::scan_cell(Vec2 x) {
  const int cx = static_cast<int>(std::floor((x.x - grid_lo_.x) / cell_));
  const int cy = static_cast<int>(std::floor((x.y - grid_lo_.y) / cell_));
  if (cx < 0 || cy < 0 || cx >= nx_ || cy >= ny_) return std::nullopt;
  const auto& cands = cells_[static_cast<std::size_t>(cy) * nx_ + cx];
  for (int t : cands) {
    const auto b = barycentric(t, x);
    if (accepts(b)) return Location{t, b};
  }
  // Round-off snap onto the nearest element.
  int best = -1;
  double best_d = snap_distance_;
  for (int t : cands) {
    const auto& tri = mesh_->triangles[t];
    const double d = triangle_distance(mesh_->vertices[tri[0]], mesh_->vertices[tri[1]], mesh_->vertices[tri[2]], x);
    if (d <= best_d) {
      best_d = d;
      best = t;
    }
  }
  if (best < 0) return std::nullopt;
  auto b = barycentric(best, x);
  double s = 0.0;
  for (double& v : b) {
    v = std::max(v, 0.0);
    s += v;
  }
  for (double& v : b) v /= s;
  return Location{best, b};
}

Location PointLocator::lowest_index_tie(Vec2 x, Location found) {
  const int cx = std::clamp(static_cast<int>(std::floor((x.x - grid_lo_.x) / cell_)), 0, nx_ - 1);
  const int cy = std::clamp(static_cast<int>(std::floor((x.y - grid_lo_.y) / cell_)), 0, ny_ - 1);
  for (int t : cells_[static_cast<std::size_t>(cy) * nx_ + cx]) {
    if (t >= found.element) break;
    const auto b = barycentric(t, x);
    if (accepts(b)) return Location{t, b};
  }
  return found;
}

std::optional<Location> PointLocator::locate(Vec2 x) { return locate(x, last_); }

std::optional<Location> PointLocator::locate(Vec2 x, int hint) {
  if (mesh_->triangles.empty()) return std::nullopt;
  if (hint < 0 || hint >= static_cast<int>(mesh_->triangles.size())) hint = 0;
  std::optional<Location> loc = walk(x, hint);
  if (!loc) loc = scan_cell(x);
  if (!loc) return std::nullopt;
  const auto& b = loc->barycentric;
  if (b[0] < kBarycentricTolerance || b[1] < kBarycentricTolerance || b[2] < kBarycentricTolerance)
    loc = lowest_index_tie(x, *loc);
  last_ = loc->element;
  return loc;
}

}  // namespace nsshape::geom
