#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "curvebem/lagrange.hpp"
#include "curvebem/types.hpp"

namespace curvebem {

enum class SurfaceKind { sphere, bean };

/// Coefficients of the bean chart
///   (a sin t cos p, b sin t sin p (1 + c cos t), d cos t + e sin^2 t cos^2 p).
struct BeanParameters {
  double a = 0.8;
  double b = 0.8;
  double c = 0.3;
  double d = 1.0;
  double e = 0.2;
};

/// Closest point on the surface together with its chart parameter on the
/// unit sphere.
struct SurfacePoint {
  Vec3 point;
  Vec3 parameter;
};

/// Smooth closed surface given as the image of the unit sphere under a
/// polynomial chart. Orientation: normals point out of the enclosed domain.
class Surface {
 public:
  static Surface sphere(double radius = 1.0);
  static Surface bean(const BeanParameters& params = {});

  SurfaceKind kind() const { return kind_; }
  std::string name() const;
  std::vector<double> parameters() const;
  static Surface from_name(const std::string& name, const std::vector<double>& parameters);

  /// Chart evaluated at a unit vector s.
  Vec3 chart(const Vec3& s) const;
  /// Chart in spherical angles (polar t, azimuth p).
  Vec3 chart(double theta, double phi) const;
  /// Ambient derivative of the chart at s (columns: d/ds_k).
  Eigen::Matrix3d chart_jacobian(const Vec3& s) const;

  /// Outward unit normal at chart(s).
  Vec3 normal_at_parameter(const Vec3& s) const;
  /// Outward unit normal at a surface point (projects first when needed).
  Vec3 exact_normal(const Vec3& point) const;

  /// Closest-point projection. Seeds from a dense parameter grid and rejects
  /// points whose nearest candidates are ambiguous.
  SurfacePoint project(const Vec3& x) const;
  /// Newton projection started from a parameter guess (no grid search).
  SurfacePoint project(const Vec3& x, const Vec3& seed) const;

  /// Jacobian of the closest-point map at x (3x3).
  Eigen::Matrix3d projection_jacobian(const Vec3& x, const Vec3& seed) const;

 private:
  Surface(SurfaceKind kind, double radius, BeanParameters bean)
      : kind_(kind), radius_(radius), bean_(bean) {}

  SurfacePoint newton_project(const Vec3& x, Vec3 s) const;
  // second derivative tensor contracted with two directions
  Vec3 chart_second(const Vec3& s, const Vec3& u, const Vec3& v) const;

  SurfaceKind kind_;
  double radius_ = 1.0;
  BeanParameters bean_;
};

/// Rule used to place high-order geometry nodes.
inline constexpr const char* kProjectedAffinePlacement = "projected-affine";

/// Order-l curved triangulation of a surface.
///
/// Nodes are numbered vertices first, then l-1 nodes per edge (ordered from
/// the lower to the higher vertex index), then interior nodes per element.
/// Element node tuples follow the `lagrange_nodes` local ordering with
/// vertices counterclockwise seen from outside.
class CurvedMesh {
 public:
  CurvedMesh(std::shared_ptr<const Surface> surface, int order, int level,
             std::vector<Vec3> nodes, std::vector<std::vector<int>> elements,
             std::vector<Vec3> node_parameters, std::string node_placement);

  const Surface& surface() const { return *surface_; }
  std::shared_ptr<const Surface> surface_ptr() const { return surface_; }
  int order() const { return order_; }
  int level() const { return level_; }
  double h() const { return h_; }
  const std::string& node_placement() const { return node_placement_; }

  int num_elements() const { return static_cast<int>(elements_.size()); }
  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  int num_vertices() const { return num_vertices_; }
  int num_edges() const { return static_cast<int>(edges_.size()); }

  const std::vector<Vec3>& nodes() const { return nodes_; }
  const std::vector<int>& element(int e) const { return elements_[e]; }
  const std::vector<std::vector<int>>& elements() const { return elements_; }
  std::array<int, 3> element_vertices(int e) const {
    return {elements_[e][0], elements_[e][1], elements_[e][2]};
  }
  /// Global edges as (lower vertex, higher vertex).
  const std::vector<std::array<int, 2>>& edges() const { return edges_; }
  /// Global edge of local edge k (v0v1, v1v2, v2v0).
  const std::array<int, 3>& element_edges(int e) const { return element_edges_[e]; }

  const Vec3& node_parameter(int i) const { return node_parameters_[i]; }
  const Vec3& node_normal(int i) const { return node_normals_[i]; }
  const LagrangeTriangle& shape() const { return shape_; }

  /// Vertex-triangle centroid and element diameter (max Lagrange node distance).
  const Vec3& centroid(int e) const { return centroids_[e]; }
  double diameter(int e) const { return diameters_[e]; }

  /// Map a reference point of element e to space.
  Vec3 map(int e, RefPoint p) const;

 private:
  std::shared_ptr<const Surface> surface_;
  int order_;
  int level_;
  std::vector<Vec3> nodes_;
  std::vector<std::vector<int>> elements_;
  std::vector<Vec3> node_parameters_;
  std::vector<Vec3> node_normals_;
  std::string node_placement_;
  LagrangeTriangle shape_;
  int num_vertices_ = 0;
  std::vector<std::array<int, 2>> edges_;
  std::vector<std::array<int, 3>> element_edges_;
  std::vector<Vec3> centroids_;
  std::vector<double> diameters_;
  double h_ = 0.0;
};

/// Icosahedral mesh refined `level` times by quadrisection, with all nodes
/// projected onto the surface. Throws InvalidMeshError if the Jacobian is
/// not positive at some quadrature point.
CurvedMesh build_curved_mesh(std::shared_ptr<const Surface> surface, int order, int level);

/// Topological numbering of degree-p Lagrange nodes over a mesh's vertex
/// triangulation. Used for geometry nodes and for continuous FE DOFs.
struct NodeNumbering {
  int count = 0;
  std::vector<std::vector<int>> element_nodes;
};

NodeNumbering number_lagrange_nodes(int num_vertices, const std::vector<std::array<int, 3>>& triangles,
                                    const std::vector<std::array<int, 2>>& edges,
                                    const std::vector<std::array<int, 3>>& element_edges, int degree);

/// Local geometry of a curved element at one reference point.
struct ElementFrame {
  Vec3 point;
  Vec3 tangent_xi;
  Vec3 tangent_eta;
  double jacobian = 0.0;    ///< |t_xi x t_eta|
  Vec3 element_normal;      ///< n_h
  Vec3 interpolated_normal; ///< nu_h
  Vec3 exact_normal;        ///< n(Psi(y))
};

/// Frame without the exact normal (no projection); used in hot loops.
ElementFrame element_frame_fast(const CurvedMesh& mesh, int element, RefPoint p);
/// Full frame including the exact normal at the projection.
ElementFrame element_frame(const CurvedMesh& mesh, int element, RefPoint p);

/// Sup-norm geometric deviations sampled on a degree-20 rule per element.
struct GeometricErrorReport {
  double jacobian = 0.0;          ///< sup |1 - J_h^{-1}|
  double distance = 0.0;          ///< sup |y - Psi(y)|
  double element_normal = 0.0;    ///< sup |n - n_h|
  double interpolated_normal = 0.0; ///< sup |n - nu_h|
  double area = 0.0;              ///< area of the curved mesh
};

GeometricErrorReport geometric_error_report(const CurvedMesh& mesh);

/// Mesh JSON (surface, order, level, nodes, elements, h, node_placement).
std::string mesh_to_json(const CurvedMesh& mesh);
CurvedMesh mesh_from_json(const std::string& text);

}  // namespace curvebem
