#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "curvebem/types.hpp"

namespace curvebem {

/// Number of Lagrange nodes of a degree-p triangle; 1 for p = 0.
constexpr int lagrange_size(int degree) { return (degree + 1) * (degree + 2) / 2; }

/// Equispaced Lagrange nodes on the reference triangle.
///
/// Ordering: the three vertices (0,0), (1,0), (0,1); then the p-1 nodes of
/// each edge v0->v1, v1->v2, v2->v0 in increasing edge parameter; then the
/// interior nodes (i/p, j/p) sorted lexicographically by (i, j). Degree 0
/// has the single node at the centroid.
std::vector<RefPoint> lagrange_nodes(int degree);

/// Nodal Lagrange basis of degree p on the reference triangle, stored as
/// monomial coefficients.
class LagrangeTriangle {
 public:
  explicit LagrangeTriangle(int degree);

  int degree() const { return degree_; }
  int size() const { return size_; }
  const std::vector<RefPoint>& nodes() const { return nodes_; }

  void evaluate(RefPoint p, std::span<double> values) const;
  void evaluate_gradients(RefPoint p, std::span<double> d_xi, std::span<double> d_eta) const;

 private:
  int degree_;
  int size_;
  std::vector<RefPoint> nodes_;
  // coeffs_(k, i): coefficient of monomial k in basis function i
  Eigen::MatrixXd coeffs_;
  std::vector<std::pair<int, int>> exponents_;
};

}  // namespace curvebem
