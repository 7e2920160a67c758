#pragma once

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "nsshape/geometry.hpp"
#include "nsshape/quadrature.hpp"
#include "nsshape/sparse.hpp"

namespace nsshape::fem {

using geom::Mesh;
using geom::Vec2;
using linalg::SparseMatrix;

using VectorFunction = std::function<Vec2(Vec2)>;

/// Affine triangle data: vertices, area and barycentric gradients.
struct ElementGeometry {
  std::array<Vec2, 3> p;
  double area = 0.0;
  std::array<Vec2, 3> grad_lambda;

  ElementGeometry(const Mesh& mesh, int t);
  Vec2 map(const std::array<double, 3>& bary) const { return bary[0] * p[0] + bary[1] * p[1] + bary[2] * p[2]; }
};

/// Quadratic Lagrange basis on a triangle. Local nodes 0..2 are the
/// vertices, 3..5 the midpoints of edges (0,1), (1,2), (2,0).
struct P2Basis {
  static std::array<double, 6> values(const std::array<double, 3>& b);
  static std::array<Vec2, 6> gradients(const std::array<double, 3>& b, const std::array<Vec2, 3>& grad_lambda);
};

/// Sparsity pattern of an element-wise coupled operator with a fixed
/// per-element scatter map, so assembly is a single pass in element order.
class BlockPattern {
 public:
  BlockPattern() = default;
  BlockPattern(int rows, int cols, int local_rows, int local_cols, const std::vector<int>& row_dofs,
               const std::vector<int>& col_dofs);

  int local_rows() const { return local_rows_; }
  int local_cols() const { return local_cols_; }
  /// Matrix with this pattern and the given per-element local matrices
  /// (row-major, local_rows x local_cols each).
  template <class LocalFn>
  SparseMatrix assemble(std::size_t n_elements, LocalFn&& local) const {
    SparseMatrix out = zero_;
    auto values = out.values_mut();
    std::vector<double> buf(static_cast<std::size_t>(local_rows_ * local_cols_));
    const std::size_t block = buf.size();
    for (std::size_t t = 0; t < n_elements; ++t) {
      std::fill(buf.begin(), buf.end(), 0.0);
      local(static_cast<int>(t), buf.data());
      const int* s = slot_.data() + t * block;
      for (std::size_t k = 0; k < block; ++k) values[s[k]] += buf[k];
    }
    return out;
  }
  const SparseMatrix& zero() const { return zero_; }

 private:
  int local_rows_ = 0;
  int local_cols_ = 0;
  SparseMatrix zero_;
  std::vector<int> slot_;
};

/// Taylor-Hood P2 velocity / P1 pressure space over a mesh.
///
/// Nodes are the mesh vertices followed by the edges sorted by
/// (min, max) endpoint index. Velocity dof of node k, component c is
/// c * node_count() + k; pressure dof of vertex v is v.
class TaylorHoodSpace {
 public:
  explicit TaylorHoodSpace(std::shared_ptr<const Mesh> mesh);

  const Mesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }

  int vertex_count() const { return static_cast<int>(mesh_->vertices.size()); }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  int node_count() const { return vertex_count() + edge_count(); }
  int velocity_dofs() const { return 2 * node_count(); }
  int pressure_dofs() const { return vertex_count(); }
  int element_count() const { return static_cast<int>(mesh_->triangles.size()); }
  int velocity_dof(int node, int comp) const { return comp * node_count() + node; }

  const std::array<int, 6>& element_nodes(int t) const { return elem_nodes_[static_cast<std::size_t>(t)]; }
  const std::vector<std::array<int, 2>>& edges() const { return edges_; }
  Vec2 node_position(int node) const;
  bool node_on_boundary(int node) const { return node_boundary_[static_cast<std::size_t>(node)] != 0; }

  /// Sorted velocity dofs on boundary nodes.
  const std::vector<int>& dirichlet_dofs() const { return dirichlet_; }

  struct BoundaryFace {
    int element;
    int local_edge;  // 0: (0,1), 1: (1,2), 2: (2,0) in the element's vertex order
    int a, b;        // mesh vertices, domain on the left of a -> b
    int mid_node;
  };
  /// One entry per mesh boundary edge, in the mesh's boundary-edge order.
  const std::vector<BoundaryFace>& boundary_faces() const { return faces_; }

  const BlockPattern& velocity_pattern() const { return vel_pattern_; }
  const BlockPattern& divergence_pattern() const { return div_pattern_; }
  const BlockPattern& scalar_pattern() const { return scalar_pattern_; }

 private:
  std::shared_ptr<const Mesh> mesh_;
  std::vector<std::array<int, 2>> edges_;
  std::vector<std::array<int, 6>> elem_nodes_;
  std::vector<char> node_boundary_;
  std::vector<int> dirichlet_;
  std::vector<BoundaryFace> faces_;
  BlockPattern vel_pattern_;
  BlockPattern div_pattern_;
  BlockPattern scalar_pattern_;
};

using SpacePtr = std::shared_ptr<const TaylorHoodSpace>;

SpacePtr build_space(const Mesh& mesh);
SpacePtr build_space(std::shared_ptr<const Mesh> mesh);

/// Velocity and pressure coefficients on a Taylor-Hood space.
struct FlowField {
  SpacePtr space;
  std::vector<double> velocity;
  std::vector<double> pressure;

  static FlowField zero(SpacePtr space);
  Vec2 velocity_in_element(int t, const std::array<double, 3>& bary) const;
  /// Row c holds the gradient of velocity component c.
  std::array<Vec2, 2> velocity_gradient(int t, const std::array<double, 3>& bary) const;
  double pressure_in_element(int t, const std::array<double, 3>& bary) const;
  /// Pressure shifted to zero mean over the domain (output convention).
  std::vector<double> mean_free_pressure() const;
};

/// Scalar P2 coefficients (one deformation component, for instance).
struct ScalarP2Field {
  SpacePtr space;
  std::vector<double> values;
};

SparseMatrix assemble_stiffness(const TaylorHoodSpace& space, double nu);
SparseMatrix assemble_mass(const TaylorHoodSpace& space);
/// B with (B u)_k = -(div u, psi_k).
SparseMatrix assemble_divergence(const TaylorHoodSpace& space);
/// (N(a) u)_i = ((a . grad) u, phi_i).
SparseMatrix assemble_convection(const TaylorHoodSpace& space, std::span<const double> a,
                                 const TriangleRule& rule = gauss7());
/// (L(a) d)_i = ((d . grad) a, phi_i).
SparseMatrix assemble_convection_linearized(const TaylorHoodSpace& space, std::span<const double> a,
                                            const TriangleRule& rule = gauss7());
/// (G(a) w)_i = ([grad a]^T w, phi_i); equals L(a)^T.
SparseMatrix assemble_convection_adjoint(const TaylorHoodSpace& space, std::span<const double> a,
                                         const TriangleRule& rule = gauss7());
std::vector<double> assemble_load(const TaylorHoodSpace& space, const VectorFunction& f,
                                  const TriangleRule& rule = gauss7());

/// Scalar P2 operators for the deformation (Robin) problem.
SparseMatrix assemble_scalar_stiffness(const TaylorHoodSpace& space);
SparseMatrix assemble_scalar_mass(const TaylorHoodSpace& space);
SparseMatrix assemble_boundary_mass(const TaylorHoodSpace& space);

struct ConstrainedSystem {
  SparseMatrix matrix;
  std::vector<double> rhs;
};

/// Symmetric row/column elimination: constrained rows become identity rows
/// with the prescribed value, and their columns are moved to the right-hand
/// side. The sparsity pattern is preserved (eliminated entries are stored zeros).
ConstrainedSystem apply_dirichlet(const SparseMatrix& a, std::span<const double> rhs, std::span<const int> dofs,
                                  std::span<const double> values);

/// Saddle-point dofs constrained to zero: boundary velocities and pressure dof 0.
std::vector<int> saddle_constraints(const TaylorHoodSpace& space);

/// Element mask: elements whose centroid lies inside `region`.
std::vector<char> region_mask(const Mesh& mesh, const geom::ShapeSpec& region);

/// P2 interpolation at an arbitrary point; zero outside the mesh.
Vec2 interpolate_velocity(const FlowField& field, Vec2 x, geom::PointLocator& locator);
/// Nodal interpolation of an analytic field.
std::vector<double> interpolate_nodal(const TaylorHoodSpace& space, const VectorFunction& f);

struct FieldNorms {
  double l2 = 0.0;
  double h1_semi = 0.0;
  double linf_nodal = 0.0;
};

/// Norms of a velocity coefficient vector, optionally restricted to masked elements.
FieldNorms norms(const TaylorHoodSpace& space, std::span<const double> velocity, const std::vector<char>* mask = nullptr);

/// L2 and H1-seminorm errors against an analytic field and its gradient
/// (rows = component gradients), integrated with a high-order rule.
struct ErrorNorms {
  double l2 = 0.0;
  double h1_semi = 0.0;
};
ErrorNorms velocity_error(const TaylorHoodSpace& space, std::span<const double> velocity, const VectorFunction& exact,
                          const std::function<std::array<Vec2, 2>(Vec2)>& exact_gradient);

/// Evaluator of a field living on another mesh (zero outside that mesh).
/// Each evaluator owns its point locator.
VectorFunction cross_mesh_evaluator(const FlowField& field);

/// Desired velocity sampled at the quadrature points of the observation
/// elements of one mesh.
class ObservationTarget {
 public:
  ObservationTarget(SpacePtr space, const geom::ShapeSpec& region, const VectorFunction& target);

  const std::vector<char>& mask() const { return mask_; }
  const SpacePtr& space() const { return space_; }
  /// integral over the observation elements of |u - u_D|^2.
  double misfit(std::span<const double> velocity) const;
  /// 2 (u - u_D, phi_i) over the observation elements.
  std::vector<double> misfit_load(std::span<const double> velocity) const;

 private:
  SpacePtr space_;
  std::vector<char> mask_;
  std::vector<int> elements_;
  std::vector<Vec2> values_;  // 7 per observed element
};

}  // namespace nsshape::fem
