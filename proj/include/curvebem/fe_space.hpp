#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "curvebem/geometry.hpp"
#include "curvebem/lagrange.hpp"

namespace curvebem {

enum class Continuity { discontinuous, continuous };

/// Degree-m density space on a curved mesh: piecewise constants for m = 0,
/// continuous Lagrange elements for m >= 1. DOFs are numbered vertices
/// first, then edges, then element interiors, each in mesh index order.
class FeSpace {
 public:
  FeSpace(std::shared_ptr<const CurvedMesh> mesh, int degree);

  const CurvedMesh& mesh() const { return *mesh_; }
  std::shared_ptr<const CurvedMesh> mesh_ptr() const { return mesh_; }
  int degree() const { return degree_; }
  Continuity continuity() const { return degree_ == 0 ? Continuity::discontinuous : Continuity::continuous; }
  int num_dofs() const { return num_dofs_; }
  int local_size() const { return basis_.size(); }
  const std::vector<int>& element_dofs(int e) const { return element_dofs_[e]; }
  const LagrangeTriangle& basis() const { return basis_; }

 private:
  std::shared_ptr<const CurvedMesh> mesh_;
  int degree_;
  LagrangeTriangle basis_;
  int num_dofs_ = 0;
  std::vector<std::vector<int>> element_dofs_;
};

std::shared_ptr<const FeSpace> build_space(std::shared_ptr<const CurvedMesh> mesh, int degree);

template <typename Scalar>
struct Density {
  std::shared_ptr<const FeSpace> space;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> coefficients;
};

using RealDensity = Density<double>;
using ComplexDensity = Density<Complex>;

template <typename Scalar>
Scalar evaluate_density(const Density<Scalar>& density, int element, RefPoint p);

template <typename Scalar>
using Field = std::function<Scalar(const Vec3&)>;

/// Quadrature degree used for mass matrices and load vectors: 2m + 2l
/// (at least 2).
int mass_quadrature_degree(const FeSpace& space);

/// Sparse mass matrix M_ij = (phi_j, phi_i) over the curved mesh.
Eigen::SparseMatrix<double> mass_matrix(const FeSpace& space);

/// Load vector b_i = (f, phi_i) over the curved mesh.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> load_vector(const FeSpace& space, const Field<Scalar>& f,
                                                     int extra_degree = 0);

/// L2 projection of f restricted to the curved mesh onto the space.
template <typename Scalar>
Density<Scalar> l2_project(std::shared_ptr<const FeSpace> space, const Field<Scalar>& f);

/// L2 norm over the curved mesh of (f - density).
template <typename Scalar>
double l2_error(const Density<Scalar>& density, const Field<Scalar>& f);

/// L2 norm of a density over the curved mesh.
template <typename Scalar>
double l2_norm(const Density<Scalar>& density);

/// CSV with header "dof,re,im".
template <typename Scalar>
void write_density_csv(const Density<Scalar>& density, std::ostream& out);

}  // namespace curvebem
