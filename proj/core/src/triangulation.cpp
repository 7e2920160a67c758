// Constrained Delaunay triangulation with Ruppert-style refinement.
//
// Triangles are stored with neighbor links; edge i of a triangle joins
// v[(i+1)%3] and v[(i+2)%3] (it is the edge opposite v[i]). The enclosing
// super triangle is kept until extraction so every vertex star stays closed.

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>

#include "nsshape/errors.hpp"
#include "nsshape/geometry.hpp"

namespace nsshape::geom {
namespace {

enum SegmentKind : char { kFree = 0, kBoundary = 1, kInternal = 2 };

struct Tri {
  std::array<int, 3> v{};
  std::array<int, 3> nb{-1, -1, -1};
  std::array<char, 3> seg{kFree, kFree, kFree};
  bool alive = true;
  bool interior = false;
};

struct SplitEdge {
  int a = -1;
  int b = -1;
  char kind = kFree;
};

// Positive when d lies strictly inside the circumcircle of ccw (a, b, c).
double incircle(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const long double adx = a.x - d.x, ady = a.y - d.y;
  const long double bdx = b.x - d.x, bdy = b.y - d.y;
  const long double cdx = c.x - d.x, cdy = c.y - d.y;
  const long double alift = adx * adx + ady * ady;
  const long double blift = bdx * bdx + bdy * bdy;
  const long double clift = cdx * cdx + cdy * cdy;
  return static_cast<double>(alift * (bdx * cdy - bdy * cdx) + blift * (cdx * ady - cdy * adx) +
                             clift * (adx * bdy - ady * bdx));
}

Vec2 circumcenter(Vec2 a, Vec2 b, Vec2 c) {
  const Vec2 ab = b - a, ac = c - a;
  const double d = 2.0 * cross(ab, ac);
  const double ab2 = dot(ab, ab), ac2 = dot(ac, ac);
  return {a.x + (ac.y * ab2 - ab.y * ac2) / d, a.y + (ab.x * ac2 - ac.x * ab2) / d};
}

class Cdt {
 public:
  Cdt(Vec2 lo, Vec2 hi) {
    const Vec2 c = 0.5 * (lo + hi);
    const double d = std::max({hi.x - lo.x, hi.y - lo.y, 1e-12});
    scale_ = d;
    pts_ = {{c.x - 40 * d, c.y - 30 * d}, {c.x + 40 * d, c.y - 30 * d}, {c.x, c.y + 50 * d}};
    vert_tri_ = {0, 0, 0};
    Tri t;
    t.v = {0, 1, 2};
    tris_.push_back(t);
  }

  const std::vector<Vec2>& points() const { return pts_; }
  const std::vector<Tri>& tris() const { return tris_; }

  // Inserts p; returns the new vertex index, or the existing index when p
  // duplicates a vertex, or -1 when insertion was refused.
  int insert(Vec2 p, int hint = -1) {
    const int t = locate(p, hint < 0 ? last_ : hint);
    if (t < 0) return -1;
    for (int k = 0; k < 3; ++k) {
      const int vk = tris_[t].v[k];
      if (distance(pts_[vk], p) <= 1e-12 * scale_) return vk;
    }
    return insert_with_seeds(p, {t}, {});
  }

  // Splits the constrained edge (a, b) at its midpoint.
  int split_segment(int a, int b) {
    const auto [t, i] = find_edge(a, b);
    if (t < 0) return -1;
    const char kind = tris_[t].seg[i];
    const int u = tris_[t].nb[i];
    const Vec2 m = 0.5 * (pts_[a] + pts_[b]);
    std::vector<int> seeds{t};
    if (u >= 0) seeds.push_back(u);
    return insert_with_seeds(m, seeds, SplitEdge{a, b, kind});
  }

  // Triangle containing edge {a, b} and the local edge index; (-1, -1) if absent.
  std::pair<int, int> find_edge(int a, int b) const {
    int found_t = -1, found_i = -1;
    for_each_incident(a, [&](int t) {
      if (found_t >= 0) return;
      const Tri& tri = tris_[t];
      for (int i = 0; i < 3; ++i) {
        const int p = tri.v[(i + 1) % 3], q = tri.v[(i + 2) % 3];
        if ((p == a && q == b) || (p == b && q == a)) {
          found_t = t;
          found_i = i;
          return;
        }
      }
    });
    return {found_t, found_i};
  }

  void mark_segment(int t, int i, char kind) {
    tris_[t].seg[i] = kind;
    const int u = tris_[t].nb[i];
    if (u < 0) return;
    for (int j = 0; j < 3; ++j)
      if (tris_[u].nb[j] == t) tris_[u].seg[j] = kind;
  }

  // Flags every triangle not reachable from the super triangle without
  // crossing a boundary segment as interior.
  void classify_interior() {
    for (auto& t : tris_) t.interior = true;
    std::deque<int> queue;
    for (std::size_t t = 0; t < tris_.size(); ++t) {
      if (!tris_[t].alive) continue;
      for (int k = 0; k < 3; ++k)
        if (tris_[t].v[k] < 3) {
          queue.push_back(static_cast<int>(t));
          tris_[t].interior = false;
          break;
        }
    }
    while (!queue.empty()) {
      const int t = queue.front();
      queue.pop_front();
      for (int i = 0; i < 3; ++i) {
        const int u = tris_[t].nb[i];
        if (u < 0 || tris_[t].seg[i] == kBoundary || !tris_[u].interior) continue;
        tris_[u].interior = false;
        queue.push_back(u);
      }
    }
  }

  // Straight walk from triangle `start` toward p. Returns the containing
  // triangle, or the first constrained edge crossed when `stop_at_segments`.
  struct WalkResult {
    int tri = -1;
    int crossed_tri = -1;
    int crossed_edge = -1;
  };

  WalkResult walk(Vec2 p, int start, bool stop_at_segments) const {
    int t = start;
    const std::size_t limit = tris_.size() + 16;
    for (std::size_t step = 0; step < limit; ++step) {
      const Tri& tri = tris_[t];
      int exit_edge = -1;
      for (int r = 0; r < 3; ++r) {
        const int i = (r + static_cast<int>(step)) % 3;
        const Vec2 a = pts_[tri.v[(i + 1) % 3]], b = pts_[tri.v[(i + 2) % 3]];
        if (orient(a, b, p) < 0.0) {
          exit_edge = i;
          break;
        }
      }
      if (exit_edge < 0) return {t, -1, -1};
      if (stop_at_segments && tri.seg[exit_edge] != kFree) return {-1, t, exit_edge};
      const int u = tri.nb[exit_edge];
      if (u < 0) return {};
      t = u;
    }
    return {};
  }

  int locate(Vec2 p, int hint) const {
    if (hint >= 0 && hint < static_cast<int>(tris_.size()) && tris_[hint].alive) {
      const auto r = walk(p, hint, false);
      if (r.tri >= 0) return r.tri;
    }
    for (std::size_t t = 0; t < tris_.size(); ++t) {
      if (!tris_[t].alive) continue;
      const Tri& tri = tris_[t];
      bool in = true;
      for (int i = 0; i < 3 && in; ++i)
        in = orient(pts_[tri.v[(i + 1) % 3]], pts_[tri.v[(i + 2) % 3]], p) >= 0.0;
      if (in) return static_cast<int>(t);
    }
    return -1;
  }

  // Triangles whose circumcircle contains p, grown from `seeds` without
  // crossing constrained edges other than `split`.
  std::vector<int> cavity(Vec2 p, const std::vector<int>& seeds, const SplitEdge& split) const {
    std::vector<int> cav(seeds.begin(), seeds.end());
    std::vector<char> in(tris_.size(), 0);
    for (int s : seeds) in[s] = 1;
    for (std::size_t k = 0; k < cav.size(); ++k) {
      const Tri& tri = tris_[cav[k]];
      for (int i = 0; i < 3; ++i) {
        const int u = tri.nb[i];
        if (u < 0 || in[u]) continue;
        if (tri.seg[i] != kFree && !is_split_edge(tri, i, split)) continue;
        const Tri& nt = tris_[u];
        if (incircle(pts_[nt.v[0]], pts_[nt.v[1]], pts_[nt.v[2]], p) > 0.0) {
          in[u] = 1;
          cav.push_back(u);
        }
      }
    }
    // Shrink until every boundary edge is visible from p (star-shaped cavity).
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t k = 0; k < cav.size(); ++k) {
        const int t = cav[k];
        const Tri& tri = tris_[t];
        for (int i = 0; i < 3; ++i) {
          const int u = tri.nb[i];
          if (u >= 0 && in[u]) continue;
          const Vec2 a = pts_[tri.v[(i + 1) % 3]], b = pts_[tri.v[(i + 2) % 3]];
          if (orient(a, b, p) > 0.0) continue;
          if (std::find(seeds.begin(), seeds.end(), t) != seeds.end()) return {};
          in[t] = 0;
          cav.erase(cav.begin() + static_cast<std::ptrdiff_t>(k));
          changed = true;
          break;
        }
        if (changed) break;
      }
    }
    return cav;
  }

  // Constrained edges on the cavity boundary that p encroaches upon
  // (p inside their diametral circle). Only interior sides are considered.
  std::vector<std::pair<int, int>> encroached_by(Vec2 p, const std::vector<int>& cav) const {
    std::vector<std::pair<int, int>> out;
    std::vector<char> in(tris_.size(), 0);
    for (int t : cav) in[t] = 1;
    for (int t : cav) {
      const Tri& tri = tris_[t];
      if (!tri.interior) continue;
      for (int i = 0; i < 3; ++i) {
        if (tri.seg[i] == kFree) continue;
        const int u = tri.nb[i];
        if (u >= 0 && in[u]) continue;
        const int a = tri.v[(i + 1) % 3], b = tri.v[(i + 2) % 3];
        if (dot(pts_[a] - p, pts_[b] - p) < 0.0) out.emplace_back(a, b);
      }
    }
    return out;
  }

  int insert_with_seeds(Vec2 p, const std::vector<int>& seeds, const SplitEdge& split) {
    const std::vector<int> cav = cavity(p, seeds, split);
    if (cav.empty()) return -1;
    return fill_cavity(p, cav, split);
  }

  const std::vector<int>& last_created() const { return created_; }

  template <class F>
  void for_each_incident(int v, F&& fn) const {
    const int t0 = vert_tri_[v];
    int t = t0;
    // Rotate one way; if the star is open, rotate back from t0 the other way.
    for (std::size_t guard = 0; guard < tris_.size() + 1; ++guard) {
      fn(t);
      const int k = local_index(t, v);
      const int next = tris_[t].nb[(k + 1) % 3];
      if (next < 0) break;
      if (next == t0) return;
      t = next;
    }
    t = t0;
    for (std::size_t guard = 0; guard < tris_.size() + 1; ++guard) {
      const int k = local_index(t, v);
      const int next = tris_[t].nb[(k + 2) % 3];
      if (next < 0 || next == t0) return;
      t = next;
      fn(t);
    }
  }

 private:
  int local_index(int t, int v) const {
    const auto& tv = tris_[t].v;
    return tv[0] == v ? 0 : (tv[1] == v ? 1 : 2);
  }

  static bool is_split_edge(const Tri& tri, int i, const SplitEdge& split) {
    if (split.a < 0) return false;
    const int p = tri.v[(i + 1) % 3], q = tri.v[(i + 2) % 3];
    return (p == split.a && q == split.b) || (p == split.b && q == split.a);
  }

  int fill_cavity(Vec2 p, const std::vector<int>& cav, const SplitEdge& split) {
    struct Rim {
      int a, b, outside;
      char seg;
      bool interior;
    };
    std::vector<char> in(tris_.size(), 0);
    for (int t : cav) in[t] = 1;
    std::vector<Rim> rim;
    for (int t : cav) {
      const Tri& tri = tris_[t];
      for (int i = 0; i < 3; ++i) {
        const int u = tri.nb[i];
        if (u >= 0 && in[u]) continue;
        rim.push_back({tri.v[(i + 1) % 3], tri.v[(i + 2) % 3], u, tri.seg[i], tri.interior});
      }
    }
    const int pv = static_cast<int>(pts_.size());
    pts_.push_back(p);
    vert_tri_.push_back(-1);
    for (int t : cav) tris_[t].alive = false;

    const int base = static_cast<int>(tris_.size());
    created_.clear();
    for (std::size_t r = 0; r < rim.size(); ++r) {
      Tri t;
      t.v = {rim[r].a, rim[r].b, pv};
      t.nb[2] = rim[r].outside;
      t.seg[2] = rim[r].seg;
      t.interior = rim[r].interior;
      tris_.push_back(t);
      created_.push_back(base + static_cast<int>(r));
    }
    for (std::size_t r = 0; r < rim.size(); ++r) {
      const int id = base + static_cast<int>(r);
      Tri& t = tris_[id];
      for (std::size_t s = 0; s < rim.size(); ++s) {
        if (rim[s].a == rim[r].b) t.nb[0] = base + static_cast<int>(s);  // edge (b, p)
        if (rim[s].b == rim[r].a) t.nb[1] = base + static_cast<int>(s);  // edge (p, a)
      }
      if (split.a >= 0) {
        if (rim[r].b == split.a || rim[r].b == split.b) t.seg[0] = split.kind;
        if (rim[r].a == split.a || rim[r].a == split.b) t.seg[1] = split.kind;
      }
      const int out = rim[r].outside;
      if (out >= 0) {
        Tri& o = tris_[out];
        for (int j = 0; j < 3; ++j) {
          const int oa = o.v[(j + 1) % 3], ob = o.v[(j + 2) % 3];
          if (oa == rim[r].b && ob == rim[r].a) o.nb[j] = id;
        }
      }
      for (int k = 0; k < 3; ++k) vert_tri_[t.v[k]] = id;
    }
    last_ = base;
    return pv;
  }

  std::vector<Vec2> pts_;
  std::vector<Tri> tris_;
  std::vector<int> vert_tri_;
  std::vector<int> created_;
  double scale_ = 1.0;
  int last_ = 0;
};

double min_angle_deg(Vec2 a, Vec2 b, Vec2 c) {
  auto angle = [](Vec2 p, Vec2 q, Vec2 r) {
    const Vec2 u = q - p, v = r - p;
    return std::atan2(std::abs(cross(u, v)), dot(u, v));
  };
  return std::min({angle(a, b, c), angle(b, c, a), angle(c, a, b)}) * 180.0 / std::numbers::pi;
}

void require_simple(const Polyline& p, const char* what) {
  if (!p.closed || p.points.size() < 3) throw InvalidShapeError(std::string(what) + ": not a closed polyline");
  if (!is_simple(p)) throw InvalidShapeError(std::string(what) + ": polyline is not simple");
  if (std::abs(signed_area(p)) <= 0.0) throw InvalidShapeError(std::string(what) + ": zero enclosed area");
}

}  // namespace

Mesh triangulate(const Polyline& boundary, double h, std::span<const Polyline> internal) {
  if (!(h > 0.0)) throw InvalidShapeError("triangulate: mesh size must be positive");
  require_simple(boundary, "boundary");
  for (const auto& poly : internal) {
    require_simple(poly, "internal constraint");
    for (Vec2 q : poly.points)
      if (!point_in_polygon(boundary, q) || distance_to_polyline(boundary, q) <= 0.0)
        throw InvalidShapeError("internal constraint leaves the domain");
  }

  Vec2 lo = boundary.points.front(), hi = lo;
  for (Vec2 q : boundary.points) {
    lo = {std::min(lo.x, q.x), std::min(lo.y, q.y)};
    hi = {std::max(hi.x, q.x), std::max(hi.y, q.y)};
  }
  Cdt cdt(lo, hi);

  // Constraint vertices and segments.
  struct Seg {
    int a, b;
    char kind;
  };
  std::vector<Seg> segments;
  auto add_loop = [&](const Polyline& poly, char kind) {
    std::vector<int> ids;
    for (Vec2 q : poly.points) {
      const int id = cdt.insert(q);
      if (id < 0) throw InvalidShapeError("triangulate: failed to insert boundary vertex");
      ids.push_back(id);
    }
    for (std::size_t i = 0; i < ids.size(); ++i) segments.push_back({ids[i], ids[(i + 1) % ids.size()], kind});
  };
  add_loop(boundary, kBoundary);
  for (const auto& poly : internal) add_loop(poly, kInternal);

  // Segment recovery by midpoint splitting (conforming).
  {
    std::deque<Seg> queue(segments.begin(), segments.end());
    std::size_t guard = 0;
    while (!queue.empty()) {
      if (++guard > 100000) throw InvalidShapeError("triangulate: segment recovery failed");
      const Seg s = queue.front();
      queue.pop_front();
      const auto [t, i] = cdt.find_edge(s.a, s.b);
      if (t >= 0) {
        cdt.mark_segment(t, i, s.kind);
        continue;
      }
      const Vec2 m = 0.5 * (cdt.points()[s.a] + cdt.points()[s.b]);
      const int mid = cdt.insert(m);
      if (mid < 0 || mid == s.a || mid == s.b) throw InvalidShapeError("triangulate: segment recovery failed");
      queue.push_back({s.a, mid, s.kind});
      queue.push_back({mid, s.b, s.kind});
    }
  }
  cdt.classify_interior();

  // Interior lattice of equilateral triangles with spacing h.
  {
    std::vector<Polyline> constraint_loops{boundary};
    constraint_loops.insert(constraint_loops.end(), internal.begin(), internal.end());
    const double row = h * std::sqrt(3.0) / 2.0;
    const int ny = static_cast<int>(std::ceil((hi.y - lo.y) / row)) + 1;
    const int nx = static_cast<int>(std::ceil((hi.x - lo.x) / h)) + 2;
    int hint = -1;
    for (int j = 0; j < ny; ++j) {
      const double y = lo.y + (j + 0.5) * row;
      for (int i = 0; i < nx; ++i) {
        const Vec2 q{lo.x + (i + ((j % 2) ? 0.5 : 0.0)) * h, y};
        if (!point_in_polygon(boundary, q)) continue;
        bool clear = true;
        for (const auto& loop : constraint_loops)
          if (distance_to_polyline(loop, q) < 0.6 * h) {
            clear = false;
            break;
          }
        if (!clear) continue;
        const int id = cdt.insert(q, hint);
        if (id >= 0 && !cdt.last_created().empty()) hint = cdt.last_created().front();
      }
    }
  }

  // Delaunay refinement: quality bound ratio sqrt(2) (~20.7 degrees) and
  // circumradius <= 0.75 h so that every edge is at most 1.5 h.
  const double r_max = 0.75 * h;
  const double min_angle = 20.7;
  auto is_bad = [&](int t) {
    const Tri& tri = cdt.tris()[t];
    if (!tri.alive || !tri.interior) return false;
    const Vec2 a = cdt.points()[tri.v[0]], b = cdt.points()[tri.v[1]], c = cdt.points()[tri.v[2]];
    const Vec2 cc = circumcenter(a, b, c);
    if (distance(cc, a) > r_max) return true;
    return min_angle_deg(a, b, c) < min_angle;
  };

  const double area = std::abs(signed_area(boundary));
  const std::size_t vertex_budget =
      static_cast<std::size_t>(50.0 * area / (h * h)) + 40 * (boundary.points.size() + 10);

  std::deque<std::pair<int, int>> seg_queue;
  std::deque<int> bad_queue;
  auto check_new = [&]() {
    for (int t : cdt.last_created()) {
      const Tri& tri = cdt.tris()[t];
      if (tri.interior) {
        for (int i = 0; i < 3; ++i) {
          if (tri.seg[i] == kFree) continue;
          const int a = tri.v[(i + 1) % 3], b = tri.v[(i + 2) % 3];
          const Vec2 apex = cdt.points()[tri.v[i]];
          if (dot(cdt.points()[a] - apex, cdt.points()[b] - apex) < 0.0) seg_queue.emplace_back(a, b);
        }
      }
      bad_queue.push_back(t);
    }
  };

  for (std::size_t t = 0; t < cdt.tris().size(); ++t) {
    const Tri& tri = cdt.tris()[t];
    if (!tri.alive || !tri.interior) continue;
    for (int i = 0; i < 3; ++i) {
      if (tri.seg[i] == kFree) continue;
      const int a = tri.v[(i + 1) % 3], b = tri.v[(i + 2) % 3];
      const Vec2 apex = cdt.points()[tri.v[i]];
      if (dot(cdt.points()[a] - apex, cdt.points()[b] - apex) < 0.0) seg_queue.emplace_back(a, b);
    }
    bad_queue.push_back(static_cast<int>(t));
  }

  auto split = [&](int a, int b) {
    if (cdt.find_edge(a, b).first < 0) return;  // already split
    if (cdt.split_segment(a, b) < 0) throw InvalidShapeError("triangulate: segment split failed");
    check_new();
  };

  while (!seg_queue.empty() || !bad_queue.empty()) {
    if (cdt.points().size() > vertex_budget) throw InvalidShapeError("triangulate: refinement did not terminate");
    if (!seg_queue.empty()) {
      const auto [a, b] = seg_queue.front();
      seg_queue.pop_front();
      split(a, b);
      continue;
    }
    const int t = bad_queue.front();
    bad_queue.pop_front();
    if (!is_bad(t)) continue;
    const Tri& tri = cdt.tris()[t];
    const Vec2 cc = circumcenter(cdt.points()[tri.v[0]], cdt.points()[tri.v[1]], cdt.points()[tri.v[2]]);
    const auto walk = cdt.walk(cc, t, true);
    if (walk.tri < 0) {
      if (walk.crossed_tri < 0) throw InvalidShapeError("triangulate: circumcenter location failed");
      const Tri& ct = cdt.tris()[walk.crossed_tri];
      split(ct.v[(walk.crossed_edge + 1) % 3], ct.v[(walk.crossed_edge + 2) % 3]);
      bad_queue.push_back(t);
      continue;
    }
    const std::vector<int> cav = cdt.cavity(cc, {walk.tri}, {});
    if (cav.empty()) continue;
    const auto enc = cdt.encroached_by(cc, cav);
    if (!enc.empty()) {
      for (const auto& [a, b] : enc) split(a, b);
      bad_queue.push_back(t);
      continue;
    }
    if (cdt.insert_with_seeds(cc, {walk.tri}, {}) < 0) continue;
    check_new();
  }

  // Extraction: keep interior triangles, renumber vertices in creation order.
  Mesh mesh;
  mesh.h_target = h;
  std::vector<int> remap(cdt.points().size(), -1);
  std::vector<int> tri_ids;
  for (std::size_t t = 0; t < cdt.tris().size(); ++t) {
    const Tri& tri = cdt.tris()[t];
    if (tri.alive && tri.interior) {
      tri_ids.push_back(static_cast<int>(t));
      for (int k = 0; k < 3; ++k) remap[tri.v[k]] = 0;
    }
  }
  for (std::size_t v = 0; v < remap.size(); ++v) {
    if (remap[v] < 0) continue;
    remap[v] = static_cast<int>(mesh.vertices.size());
    mesh.vertices.push_back(cdt.points()[v]);
  }
  std::vector<BoundaryEdge> edges;
  for (int t : tri_ids) {
    const Tri& tri = cdt.tris()[t];
    mesh.triangles.push_back({remap[tri.v[0]], remap[tri.v[1]], remap[tri.v[2]]});
    for (int i = 0; i < 3; ++i)
      if (tri.seg[i] == kBoundary) edges.push_back({remap[tri.v[(i + 1) % 3]], remap[tri.v[(i + 2) % 3]], 1});
  }
  // Order boundary edges as a loop starting at the lowest vertex index.
  std::sort(edges.begin(), edges.end(), [](const BoundaryEdge& x, const BoundaryEdge& y) { return x.a < y.a; });
  std::vector<int> next_of(mesh.vertices.size(), -1);
  for (std::size_t e = 0; e < edges.size(); ++e) next_of[edges[e].a] = static_cast<int>(e);
  std::vector<char> used(edges.size(), 0);
  for (std::size_t start = 0; start < edges.size(); ++start) {
    if (used[start]) continue;
    std::size_t e = start;
    while (!used[e]) {
      used[e] = 1;
      mesh.boundary_edges.push_back(edges[e]);
      const int n = next_of[edges[e].b];
      if (n < 0) break;
      e = static_cast<std::size_t>(n);
    }
  }
  return mesh;
}

Mesh remesh(const Polyline& boundary, double h, std::span<const Polyline> internal) {
  if (!is_simple(boundary)) throw InvalidShapeError("remesh: boundary is not simple");
  return triangulate(resample(boundary, h), h, internal);
}

}  // namespace nsshape::geom
