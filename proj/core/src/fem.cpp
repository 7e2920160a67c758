#include "nsshape/fem.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nsshape::fem {

namespace {

using Bary = std::array<double, 3>;

constexpr std::array<std::array<int, 2>, 3> kLocalEdges{{{0, 1}, {1, 2}, {2, 0}}};

std::array<Vec2, 2> zero_grad() { return {Vec2{0.0, 0.0}, Vec2{0.0, 0.0}}; }

// Precomputed P2 values at the points of a rule.
std::vector<std::array<double, 6>> tabulate(const TriangleRule& rule) {
  std::vector<std::array<double, 6>> out;
  out.reserve(rule.size());
  for (const auto& q : rule) out.push_back(P2Basis::values(q.bary));
  return out;
}

// Local velocity coefficients of element t: [c][a].
std::array<std::array<double, 6>, 2> local_velocity(const TaylorHoodSpace& space, std::span<const double> u, int t) {
  const auto& nodes = space.element_nodes(t);
  std::array<std::array<double, 6>, 2> out{};
  const int nn = space.node_count();
  for (int a = 0; a < 6; ++a) {
    out[0][a] = u[static_cast<std::size_t>(nodes[a])];
    out[1][a] = u[static_cast<std::size_t>(nn + nodes[a])];
  }
  return out;
}

void check_velocity_size(const TaylorHoodSpace& space, std::span<const double> u) {
  if (static_cast<int>(u.size()) != space.velocity_dofs())
    throw std::invalid_argument("velocity vector length does not match the space");
}

}  // namespace

ElementGeometry::ElementGeometry(const Mesh& mesh, int t) {
  const auto& tri = mesh.triangles[static_cast<std::size_t>(t)];
  for (int i = 0; i < 3; ++i) p[i] = mesh.vertices[static_cast<std::size_t>(tri[i])];
  const double det = geom::orient(p[0], p[1], p[2]);
  area = 0.5 * det;
  for (int i = 0; i < 3; ++i) {
    const Vec2 a = p[(i + 1) % 3], b = p[(i + 2) % 3];
    grad_lambda[i] = Vec2{a.y - b.y, b.x - a.x} * (1.0 / det);
  }
}

std::array<double, 6> P2Basis::values(const Bary& b) {
  return {b[0] * (2.0 * b[0] - 1.0), b[1] * (2.0 * b[1] - 1.0), b[2] * (2.0 * b[2] - 1.0),
          4.0 * b[0] * b[1],         4.0 * b[1] * b[2],         4.0 * b[2] * b[0]};
}

std::array<Vec2, 6> P2Basis::gradients(const Bary& b, const std::array<Vec2, 3>& g) {
  return {(4.0 * b[0] - 1.0) * g[0],
          (4.0 * b[1] - 1.0) * g[1],
          (4.0 * b[2] - 1.0) * g[2],
          4.0 * (b[0] * g[1] + b[1] * g[0]),
          4.0 * (b[1] * g[2] + b[2] * g[1]),
          4.0 * (b[2] * g[0] + b[0] * g[2])};
}

BlockPattern::BlockPattern(int rows, int cols, int local_rows, int local_cols, const std::vector<int>& row_dofs,
                           const std::vector<int>& col_dofs)
    : local_rows_(local_rows), local_cols_(local_cols) {
  const std::size_t n_el = row_dofs.size() / static_cast<std::size_t>(local_rows);
  std::vector<std::vector<int>> per_row(static_cast<std::size_t>(rows));
  for (std::size_t t = 0; t < n_el; ++t)
    for (int i = 0; i < local_rows; ++i) {
      auto& r = per_row[static_cast<std::size_t>(row_dofs[t * local_rows + i])];
      for (int j = 0; j < local_cols; ++j) r.push_back(col_dofs[t * local_cols + j]);
    }
  std::vector<int> ptr{0};
  std::vector<int> idx;
  for (auto& r : per_row) {
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
    idx.insert(idx.end(), r.begin(), r.end());
    ptr.push_back(static_cast<int>(idx.size()));
  }
  std::vector<double> vals(idx.size(), 0.0);
  zero_ = SparseMatrix(rows, cols, ptr, idx, std::move(vals));

  slot_.resize(n_el * static_cast<std::size_t>(local_rows * local_cols));
  for (std::size_t t = 0; t < n_el; ++t)
    for (int i = 0; i < local_rows; ++i) {
      const int r = row_dofs[t * local_rows + i];
      const auto begin = idx.begin() + ptr[r], end = idx.begin() + ptr[r + 1];
      for (int j = 0; j < local_cols; ++j) {
        const auto it = std::lower_bound(begin, end, col_dofs[t * local_cols + j]);
        slot_[(t * local_rows + i) * local_cols + j] = static_cast<int>(it - idx.begin());
      }
    }
}

TaylorHoodSpace::TaylorHoodSpace(std::shared_ptr<const Mesh> mesh) : mesh_(std::move(mesh)) {
  const auto& tris = mesh_->triangles;
  const int nv = static_cast<int>(mesh_->vertices.size());
  for (const auto& t : tris)
    for (const auto& e : kLocalEdges) {
      const int a = t[e[0]], b = t[e[1]];
      edges_.push_back({std::min(a, b), std::max(a, b)});
    }
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());

  auto edge_index = [&](int a, int b) {
    const std::array<int, 2> key{std::min(a, b), std::max(a, b)};
    const auto it = std::lower_bound(edges_.begin(), edges_.end(), key);
    if (it == edges_.end() || *it != key) throw std::invalid_argument("edge not present in mesh");
    return static_cast<int>(it - edges_.begin());
  };

  std::vector<std::array<int, 2>> edge_owner(edges_.size(), {-1, -1});
  elem_nodes_.reserve(tris.size());
  for (std::size_t t = 0; t < tris.size(); ++t) {
    std::array<int, 6> n{tris[t][0], tris[t][1], tris[t][2], 0, 0, 0};
    for (int k = 0; k < 3; ++k) {
      const int e = edge_index(tris[t][kLocalEdges[k][0]], tris[t][kLocalEdges[k][1]]);
      n[3 + k] = nv + e;
      edge_owner[static_cast<std::size_t>(e)] = {static_cast<int>(t), k};
    }
    elem_nodes_.push_back(n);
  }

  const int nn = node_count();
  node_boundary_.assign(static_cast<std::size_t>(nn), 0);
  for (const auto& be : mesh_->boundary_edges) {
    const int e = edge_index(be.a, be.b);
    const auto owner = edge_owner[static_cast<std::size_t>(e)];
    faces_.push_back({owner[0], owner[1], be.a, be.b, nv + e});
    node_boundary_[static_cast<std::size_t>(be.a)] = 1;
    node_boundary_[static_cast<std::size_t>(be.b)] = 1;
    node_boundary_[static_cast<std::size_t>(nv + e)] = 1;
  }
  for (int c = 0; c < 2; ++c)
    for (int k = 0; k < nn; ++k)
      if (node_boundary_[static_cast<std::size_t>(k)]) dirichlet_.push_back(velocity_dof(k, c));

  std::vector<int> vel, pres, scal;
  vel.reserve(tris.size() * 12);
  for (std::size_t t = 0; t < tris.size(); ++t) {
    for (int c = 0; c < 2; ++c)
      for (int a = 0; a < 6; ++a) vel.push_back(velocity_dof(elem_nodes_[t][a], c));
    for (int a = 0; a < 3; ++a) pres.push_back(tris[t][a]);
    for (int a = 0; a < 6; ++a) scal.push_back(elem_nodes_[t][a]);
  }
  vel_pattern_ = BlockPattern(2 * nn, 2 * nn, 12, 12, vel, vel);
  div_pattern_ = BlockPattern(nv, 2 * nn, 3, 12, pres, vel);
  scalar_pattern_ = BlockPattern(nn, nn, 6, 6, scal, scal);
}

Vec2 TaylorHoodSpace::node_position(int node) const {
  const int nv = vertex_count();
  if (node < nv) return mesh_->vertices[static_cast<std::size_t>(node)];
  const auto& e = edges_[static_cast<std::size_t>(node - nv)];
  return 0.5 * (mesh_->vertices[static_cast<std::size_t>(e[0])] + mesh_->vertices[static_cast<std::size_t>(e[1])]);
}

SpacePtr build_space(const Mesh& mesh) { return build_space(std::make_shared<const Mesh>(mesh)); }
SpacePtr build_space(std::shared_ptr<const Mesh> mesh) { return std::make_shared<const TaylorHoodSpace>(std::move(mesh)); }

FlowField FlowField::zero(SpacePtr space) {
  FlowField f;
  f.velocity.assign(static_cast<std::size_t>(space->velocity_dofs()), 0.0);
  f.pressure.assign(static_cast<std::size_t>(space->pressure_dofs()), 0.0);
  f.space = std::move(space);
  return f;
}

Vec2 FlowField::velocity_in_element(int t, const Bary& bary) const {
  const auto phi = P2Basis::values(bary);
  const auto u = local_velocity(*space, velocity, t);
  Vec2 v{0.0, 0.0};
  for (int a = 0; a < 6; ++a) {
    v.x += u[0][a] * phi[a];
    v.y += u[1][a] * phi[a];
  }
  return v;
}

std::array<Vec2, 2> FlowField::velocity_gradient(int t, const Bary& bary) const {
  const ElementGeometry geo(space->mesh(), t);
  const auto dphi = P2Basis::gradients(bary, geo.grad_lambda);
  const auto u = local_velocity(*space, velocity, t);
  auto g = zero_grad();
  for (int c = 0; c < 2; ++c)
    for (int a = 0; a < 6; ++a) g[c] += u[c][a] * dphi[a];
  return g;
}

double FlowField::pressure_in_element(int t, const Bary& bary) const {
  const auto& tri = space->mesh().triangles[static_cast<std::size_t>(t)];
  double p = 0.0;
  for (int a = 0; a < 3; ++a) p += bary[a] * pressure[static_cast<std::size_t>(tri[a])];
  return p;
}

std::vector<double> FlowField::mean_free_pressure() const {
  const Mesh& mesh = space->mesh();
  double integral = 0.0, area = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const double k = mesh.signed_area(static_cast<int>(t));
    const auto& tri = mesh.triangles[t];
    integral += k * (pressure[tri[0]] + pressure[tri[1]] + pressure[tri[2]]) / 3.0;
    area += k;
  }
  std::vector<double> out = pressure;
  const double mean = integral / area;
  for (double& p : out) p -= mean;
  return out;
}

SparseMatrix assemble_stiffness(const TaylorHoodSpace& space, double nu) {
  const auto& rule = gauss7();
  return space.velocity_pattern().assemble(space.element_count(), [&](int t, double* m) {
    const ElementGeometry geo(space.mesh(), t);
    for (const auto& q : rule) {
      const auto g = P2Basis::gradients(q.bary, geo.grad_lambda);
      const double w = nu * q.weight * geo.area;
      for (int a = 0; a < 6; ++a)
        for (int b = 0; b < 6; ++b) {
          const double v = w * geom::dot(g[a], g[b]);
          m[a * 12 + b] += v;
          m[(6 + a) * 12 + 6 + b] += v;
        }
    }
  });
}

SparseMatrix assemble_mass(const TaylorHoodSpace& space) {
  const auto& rule = gauss7();
  const auto phi = tabulate(rule);
  return space.velocity_pattern().assemble(space.element_count(), [&](int t, double* m) {
    const double area = space.mesh().signed_area(t);
    for (std::size_t k = 0; k < rule.size(); ++k) {
      const double w = rule[k].weight * area;
      for (int a = 0; a < 6; ++a)
        for (int b = 0; b < 6; ++b) {
          const double v = w * (phi[k][a] * phi[k][b]);
          m[a * 12 + b] += v;
          m[(6 + a) * 12 + 6 + b] += v;
        }
    }
  });
}

SparseMatrix assemble_divergence(const TaylorHoodSpace& space) {
  const auto& rule = gauss7();
  return space.divergence_pattern().assemble(space.element_count(), [&](int t, double* m) {
    const ElementGeometry geo(space.mesh(), t);
    for (const auto& q : rule) {
      const auto g = P2Basis::gradients(q.bary, geo.grad_lambda);
      const double w = q.weight * geo.area;
      for (int k = 0; k < 3; ++k)
        for (int b = 0; b < 6; ++b) {
          m[k * 12 + b] -= w * q.bary[k] * g[b].x;
          m[k * 12 + 6 + b] -= w * q.bary[k] * g[b].y;
        }
    }
  });
}

SparseMatrix assemble_convection(const TaylorHoodSpace& space, std::span<const double> a, const TriangleRule& rule) {
  check_velocity_size(space, a);
  const auto phi = tabulate(rule);
  return space.velocity_pattern().assemble(space.element_count(), [&](int t, double* m) {
    const ElementGeometry geo(space.mesh(), t);
    const auto ua = local_velocity(space, a, t);
    for (std::size_t k = 0; k < rule.size(); ++k) {
      const auto g = P2Basis::gradients(rule[k].bary, geo.grad_lambda);
      Vec2 av{0.0, 0.0};
      for (int i = 0; i < 6; ++i) av += Vec2{ua[0][i], ua[1][i]} * phi[k][i];
      const double w = rule[k].weight * geo.area;
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
          const double v = w * geom::dot(av, g[j]) * phi[k][i];
          m[i * 12 + j] += v;
          m[(6 + i) * 12 + 6 + j] += v;
        }
    }
  });
}

namespace {

// Shared kernel for L(a) (transpose = false) and G(a) = L(a)^T (transpose = true).
SparseMatrix assemble_gradient_coupling(const TaylorHoodSpace& space, std::span<const double> a,
                                        const TriangleRule& rule, bool transpose) {
  check_velocity_size(space, a);
  const auto phi = tabulate(rule);
  return space.velocity_pattern().assemble(space.element_count(), [&](int t, double* m) {
    const ElementGeometry geo(space.mesh(), t);
    const auto ua = local_velocity(space, a, t);
    for (std::size_t k = 0; k < rule.size(); ++k) {
      const auto g = P2Basis::gradients(rule[k].bary, geo.grad_lambda);
      // grad[c][d] = d a_c / d x_d
      double grad[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
      for (int i = 0; i < 6; ++i)
        for (int c = 0; c < 2; ++c) {
          grad[c][0] += ua[c][i] * g[i].x;
          grad[c][1] += ua[c][i] * g[i].y;
        }
      const double w = rule[k].weight * geo.area;
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
          const double pp = w * phi[k][i] * phi[k][j];
          for (int c = 0; c < 2; ++c)
            for (int d = 0; d < 2; ++d)
              m[(c * 6 + i) * 12 + d * 6 + j] += pp * (transpose ? grad[d][c] : grad[c][d]);
        }
    }
  });
}

}  // namespace

SparseMatrix assemble_convection_linearized(const TaylorHoodSpace& space, std::span<const double> a,
                                            const TriangleRule& rule) {
  return assemble_gradient_coupling(space, a, rule, false);
}

SparseMatrix assemble_convection_adjoint(const TaylorHoodSpace& space, std::span<const double> a,
                                         const TriangleRule& rule) {
  return assemble_gradient_coupling(space, a, rule, true);
}

std::vector<double> assemble_load(const TaylorHoodSpace& space, const VectorFunction& f, const TriangleRule& rule) {
  const auto phi = tabulate(rule);
  const int nn = space.node_count();
  std::vector<double> out(static_cast<std::size_t>(space.velocity_dofs()), 0.0);
  for (int t = 0; t < space.element_count(); ++t) {
    const ElementGeometry geo(space.mesh(), t);
    const auto& nodes = space.element_nodes(t);
    for (std::size_t k = 0; k < rule.size(); ++k) {
      const Vec2 fv = f(geo.map(rule[k].bary));
      const double w = rule[k].weight * geo.area;
      for (int a = 0; a < 6; ++a) {
        out[static_cast<std::size_t>(nodes[a])] += w * fv.x * phi[k][a];
        out[static_cast<std::size_t>(nn + nodes[a])] += w * fv.y * phi[k][a];
      }
    }
  }
  return out;
}

SparseMatrix assemble_scalar_stiffness(const TaylorHoodSpace& space) {
  const auto& rule = gauss7();
  return space.scalar_pattern().assemble(space.element_count(), [&](int t, double* m) {
    const ElementGeometry geo(space.mesh(), t);
    for (const auto& q : rule) {
      const auto g = P2Basis::gradients(q.bary, geo.grad_lambda);
      const double w = q.weight * geo.area;
      for (int a = 0; a < 6; ++a)
        for (int b = 0; b < 6; ++b) m[a * 6 + b] += w * geom::dot(g[a], g[b]);
    }
  });
}

SparseMatrix assemble_scalar_mass(const TaylorHoodSpace& space) {
  const auto& rule = gauss7();
  const auto phi = tabulate(rule);
  return space.scalar_pattern().assemble(space.element_count(), [&](int t, double* m) {
    const double area = space.mesh().signed_area(t);
    for (std::size_t k = 0; k < rule.size(); ++k)
      for (int a = 0; a < 6; ++a)
        for (int b = 0; b < 6; ++b) m[a * 6 + b] += rule[k].weight * area * phi[k][a] * phi[k][b];
  });
}

SparseMatrix assemble_boundary_mass(const TaylorHoodSpace& space) {
  const auto& line = edge_gauss3();
  const int nn = space.node_count();
  linalg::CooBuilder coo(nn, nn);
  for (const auto& f : space.boundary_faces()) {
    const double len = geom::distance(space.node_position(f.a), space.node_position(f.b));
    const std::array<int, 3> nodes{f.a, f.mid_node, f.b};
    for (std::size_t k = 0; k < line.nodes.size(); ++k) {
      const double s = line.nodes[k];
      const std::array<double, 3> l{(1.0 - s) * (1.0 - 2.0 * s), 4.0 * s * (1.0 - s), s * (2.0 * s - 1.0)};
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) coo.add(nodes[i], nodes[j], line.weights[k] * len * l[i] * l[j]);
    }
  }
  // Summed into the scalar pattern so it combines with the stiffness without a pattern change.
  return space.scalar_pattern().zero().add(linalg::assemble(coo));
}

ConstrainedSystem apply_dirichlet(const SparseMatrix& a, std::span<const double> rhs, std::span<const int> dofs,
                                  std::span<const double> values) {
  if (a.rows() != a.cols() || static_cast<int>(rhs.size()) != a.rows())
    throw std::invalid_argument("apply_dirichlet: dimension mismatch");
  if (dofs.size() != values.size()) throw std::invalid_argument("apply_dirichlet: one value per constrained dof");
  const int n = a.rows();
  std::vector<char> fixed(static_cast<std::size_t>(n), 0);
  std::vector<double> value(static_cast<std::size_t>(n), 0.0);
  for (std::size_t k = 0; k < dofs.size(); ++k) {
    if (dofs[k] < 0 || dofs[k] >= n) throw std::out_of_range("apply_dirichlet: dof out of range");
    fixed[static_cast<std::size_t>(dofs[k])] = 1;
    value[static_cast<std::size_t>(dofs[k])] = values[k];
  }
  ConstrainedSystem out{a, std::vector<double>(rhs.begin(), rhs.end())};
  auto ptr = out.matrix.row_ptr();
  auto col = out.matrix.col_idx();
  auto val = out.matrix.values_mut();
  for (int i = 0; i < n; ++i) {
    bool has_diag = false;
    for (int k = ptr[i]; k < ptr[i + 1]; ++k) {
      const int j = col[k];
      if (fixed[static_cast<std::size_t>(i)]) {
        val[k] = (i == j) ? 1.0 : 0.0;
        has_diag = has_diag || i == j;
      } else if (fixed[static_cast<std::size_t>(j)]) {
        out.rhs[static_cast<std::size_t>(i)] -= val[k] * value[static_cast<std::size_t>(j)];
        val[k] = 0.0;
      }
    }
    if (fixed[static_cast<std::size_t>(i)]) {
      if (!has_diag) throw std::invalid_argument("apply_dirichlet: constrained row without stored diagonal");
      out.rhs[static_cast<std::size_t>(i)] = value[static_cast<std::size_t>(i)];
    }
  }
  return out;
}

std::vector<int> saddle_constraints(const TaylorHoodSpace& space) {
  std::vector<int> out = space.dirichlet_dofs();
  out.push_back(space.velocity_dofs());
  return out;
}

std::vector<char> region_mask(const Mesh& mesh, const geom::ShapeSpec& region) {
  std::vector<char> mask(mesh.triangles.size(), 0);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
    mask[t] = geom::inside(region, mesh.centroid(static_cast<int>(t))) ? 1 : 0;
  return mask;
}

Vec2 interpolate_velocity(const FlowField& field, Vec2 x, geom::PointLocator& locator) {
  const auto loc = locator.locate(x);
  if (!loc) return {0.0, 0.0};
  return field.velocity_in_element(loc->element, loc->barycentric);
}

std::vector<double> interpolate_nodal(const TaylorHoodSpace& space, const VectorFunction& f) {
  const int nn = space.node_count();
  std::vector<double> out(static_cast<std::size_t>(2 * nn));
  for (int k = 0; k < nn; ++k) {
    const Vec2 v = f(space.node_position(k));
    out[static_cast<std::size_t>(k)] = v.x;
    out[static_cast<std::size_t>(nn + k)] = v.y;
  }
  return out;
}

FieldNorms norms(const TaylorHoodSpace& space, std::span<const double> velocity, const std::vector<char>* mask) {
  check_velocity_size(space, velocity);
  const auto& rule = gauss7();
  const auto phi = tabulate(rule);
  double l2 = 0.0, h1 = 0.0, linf = 0.0;
  for (int t = 0; t < space.element_count(); ++t) {
    if (mask && !(*mask)[static_cast<std::size_t>(t)]) continue;
    const ElementGeometry geo(space.mesh(), t);
    const auto u = local_velocity(space, velocity, t);
    for (std::size_t k = 0; k < rule.size(); ++k) {
      const auto g = P2Basis::gradients(rule[k].bary, geo.grad_lambda);
      Vec2 v{0.0, 0.0};
      auto grad = zero_grad();
      for (int a = 0; a < 6; ++a) {
        v += Vec2{u[0][a], u[1][a]} * phi[k][a];
        grad[0] += u[0][a] * g[a];
        grad[1] += u[1][a] * g[a];
      }
      const double w = rule[k].weight * geo.area;
      l2 += w * geom::dot(v, v);
      h1 += w * (geom::dot(grad[0], grad[0]) + geom::dot(grad[1], grad[1]));
    }
    for (int a = 0; a < 6; ++a) linf = std::max(linf, std::hypot(u[0][a], u[1][a]));
  }
  return {std::sqrt(l2), std::sqrt(h1), linf};
}

ErrorNorms velocity_error(const TaylorHoodSpace& space, std::span<const double> velocity, const VectorFunction& exact,
                          const std::function<std::array<Vec2, 2>(Vec2)>& exact_gradient) {
  check_velocity_size(space, velocity);
  const TriangleRule rule = collapsed_gauss(6);
  const auto phi = tabulate(rule);
  double l2 = 0.0, h1 = 0.0;
  for (int t = 0; t < space.element_count(); ++t) {
    const ElementGeometry geo(space.mesh(), t);
    const auto u = local_velocity(space, velocity, t);
    for (std::size_t k = 0; k < rule.size(); ++k) {
      const auto g = P2Basis::gradients(rule[k].bary, geo.grad_lambda);
      const Vec2 x = geo.map(rule[k].bary);
      Vec2 v{0.0, 0.0};
      auto grad = zero_grad();
      for (int a = 0; a < 6; ++a) {
        v += Vec2{u[0][a], u[1][a]} * phi[k][a];
        grad[0] += u[0][a] * g[a];
        grad[1] += u[1][a] * g[a];
      }
      const Vec2 e = v - exact(x);
      const auto eg = exact_gradient(x);
      const Vec2 d0 = grad[0] - eg[0], d1 = grad[1] - eg[1];
      const double w = rule[k].weight * geo.area;
      l2 += w * geom::dot(e, e);
      h1 += w * (geom::dot(d0, d0) + geom::dot(d1, d1));
    }
  }
  return {std::sqrt(l2), std::sqrt(h1)};
}

VectorFunction cross_mesh_evaluator(const FlowField& field) {
  auto owned = std::make_shared<const FlowField>(field);
  auto locator = std::make_shared<geom::PointLocator>(owned->space->mesh());
  return [owned, locator](Vec2 x) { return interpolate_velocity(*owned, x, *locator); };
}

ObservationTarget::ObservationTarget(SpacePtr space, const geom::ShapeSpec& region, const VectorFunction& target)
    : space_(std::move(space)) {
  mask_ = region_mask(space_->mesh(), region);
  const auto& rule = gauss7();
  for (int t = 0; t < space_->element_count(); ++t) {
    if (!mask_[static_cast<std::size_t>(t)]) continue;
    elements_.push_back(t);
    const ElementGeometry geo(space_->mesh(), t);
    for (const auto& q : rule) values_.push_back(target(geo.map(q.bary)));
  }
}

double ObservationTarget::misfit(std::span<const double> velocity) const {
  check_velocity_size(*space_, velocity);
  const auto& rule = gauss7();
  const auto phi = tabulate(rule);
  double sum = 0.0;
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    const int t = elements_[e];
    const double area = space_->mesh().signed_area(t);
    const auto u = local_velocity(*space_, velocity, t);
    for (std::size_t k = 0; k < rule.size(); ++k) {
      Vec2 v{0.0, 0.0};
      for (int a = 0; a < 6; ++a) v += Vec2{u[0][a], u[1][a]} * phi[k][a];
      const Vec2 d = v - values_[e * rule.size() + k];
      sum += rule[k].weight * area * geom::dot(d, d);
    }
  }
  return sum;
}

std::vector<double> ObservationTarget::misfit_load(std::span<const double> velocity) const {
  check_velocity_size(*space_, velocity);
  const auto& rule = gauss7();
  const auto phi = tabulate(rule);
  const int nn = space_->node_count();
  std::vector<double> out(static_cast<std::size_t>(2 * nn), 0.0);
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    const int t = elements_[e];
    const double area = space_->mesh().signed_area(t);
    const auto u = local_velocity(*space_, velocity, t);
    const auto& nodes = space_->element_nodes(t);
    for (std::size_t k = 0; k < rule.size(); ++k) {
      Vec2 v{0.0, 0.0};
      for (int a = 0; a < 6; ++a) v += Vec2{u[0][a], u[1][a]} * phi[k][a];
      const Vec2 d = v - values_[e * rule.size() + k];
      const double w = 2.0 * rule[k].weight * area;
      for (int a = 0; a < 6; ++a) {
        out[static_cast<std::size_t>(nodes[a])] += w * d.x * phi[k][a];
        out[static_cast<std::size_t>(nn + nodes[a])] += w * d.y * phi[k][a];
      }
    }
  }
  return out;
}

}  // namespace nsshape::fem
