#pragma once

#include <doctest.h>

#include <Eigen/QR>

#include "curvebem/fe_space.hpp"

namespace test_support {

// Locates x on a flat (l = 1) mesh and evaluates a density there.
template <typename Scalar>
Scalar evaluate_at_point(const curvebem::Density<Scalar>& density, const curvebem::Vec3& x) {
  const curvebem::CurvedMesh& mesh = density.space->mesh();
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto v = mesh.element_vertices(e);
    const curvebem::Vec3 a = mesh.nodes()[v[0]], b = mesh.nodes()[v[1]], c = mesh.nodes()[v[2]];
    Eigen::Matrix<double, 3, 2> t;
    t << b - a, c - a;
    const Eigen::Vector2d lam = t.colPivHouseholderQr().solve(x - a);
    if ((t * lam - (x - a)).norm() > 1e-12) continue;
    if (lam(0) < -1e-12 || lam(1) < -1e-12 || lam.sum() > 1 + 1e-12) continue;
    return curvebem::evaluate_density(density, e, {lam(0), lam(1)});
  }
  FAIL("point not on the mesh");
  return Scalar(0);
}

}  // namespace test_support
