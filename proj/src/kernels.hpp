#pragma once

// Laplace and Helmholtz kernels with the 1/(4 pi) factor.

#include <cmath>

#include "curvebem/types.hpp"

namespace curvebem::kernels {

inline constexpr double kInvFourPi = 0.25 / kPi;

inline double laplace_single(double r) { return kInvFourPi / r; }

/// (x - y).n_y / (4 pi r^3)
inline double laplace_double(const Vec3& d, double r, const Vec3& n_y) {
  return kInvFourPi * d.dot(n_y) / (r * r * r);
}

inline Complex helmholtz_single(double k, double r) {
  return Complex(std::cos(k * r), std::sin(k * r)) * (kInvFourPi / r);
}

/// (1 - ikr) e^{ikr} (x - y).n_y / (4 pi r^3)
inline Complex helmholtz_double(double k, const Vec3& d, double r, const Vec3& n_y) {
  const double kr = k * r;
  const Complex e(std::cos(kr), std::sin(kr));
  return Complex(1.0, -kr) * e * (kInvFourPi * d.dot(n_y) / (r * r * r));
}

/// ((1 - ikr) e^{ikr} - 1) / (4 pi r^3), the smooth remainder of the
/// Helmholtz double-layer kernel after removing the Laplace part.
inline Complex helmholtz_double_remainder_factor(double k, double r) {
  const double kr = k * r;
  Complex g;
  if (kr < 1e-3) {
    const double k2 = kr * kr;
    // series: k2/2 + i kr^3/3 - k2^2/8 - i kr^5/30
    g = Complex(0.5 * k2 - k2 * k2 / 8.0, kr * k2 / 3.0 - kr * k2 * k2 / 30.0);
  } else {
    const double c = std::cos(kr), s = std::sin(kr);
    g = Complex(c + kr * s - 1.0, s - kr * c);
  }
  return g * (kInvFourPi / (r * r * r));
}

}  // namespace curvebem::kernels
