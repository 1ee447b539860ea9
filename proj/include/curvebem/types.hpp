#pragma once

#include <complex>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace curvebem {

using Vec3 = Eigen::Vector3d;
using Complex = std::complex<double>;

/// Point in reference coordinates of the unit right triangle
/// {(xi, eta) : xi >= 0, eta >= 0, xi + eta <= 1}.
struct RefPoint {
  double xi = 0.0;
  double eta = 0.0;
};

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace curvebem
