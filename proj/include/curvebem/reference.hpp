#pragma once

#include <vector>

#include "curvebem/fe_space.hpp"
#include "curvebem/operators.hpp"

namespace curvebem {

struct SphericalBesselValues {
  double j = 0.0;
  double y = 0.0;
};

/// j_n(z) and y_n(z) for 0 <= n <= 200, 0 < z <= 100. Throws Error(range_error)
/// when y_n overflows.
SphericalBesselValues spherical_bessel(int n, double z);

/// j_0..j_nmax and y_0..y_nmax in one sweep.
void spherical_bessel_sequence(int nmax, double z, std::vector<double>& j, std::vector<double>& y);

struct PlaneWave {
  double k;
  Vec3 d;

  PlaneWave(double wavenumber, const Vec3& direction);
  Complex operator()(const Vec3& x) const;
};

/// Sound-soft scattering of a plane wave by the unit sphere.
class MieSeries {
 public:
  /// Truncation defaults to ceil(k) + 20.
  explicit MieSeries(double k, int truncation = -1);

  double wavenumber() const { return k_; }
  int truncation() const { return static_cast<int>(coefficients_.size()) - 1; }

  /// Scattered field at |x| >= 1 for incidence direction d. Throws
  /// Error(domain_error) inside the sphere.
  Complex scattered_field(const Vec3& x, const Vec3& d) const;

 private:
  double k_;
  std::vector<Complex> coefficients_;  // -(2n+1) i^n j_n(k) / h_n(k)
};

Complex mie_scattered_field(const MieSeries& series, const Vec3& x, const Vec3& d);

/// Orders n <= nmax with |j_n(k)| < tolerance |h_n(k)|: k^2 is then a Dirichlet
/// eigenvalue of the Laplacian inside the unit sphere.
std::vector<int> sphere_dirichlet_resonances(double k, int nmax = -1, double tolerance = 1e-8);

enum class HarmonicTest { x1, x1x2, r2_harmonic };

struct HarmonicPair {
  Field<double> boundary;
  Field<double> exact;
};

HarmonicPair laplace_harmonic_test(HarmonicTest test);

/// Gauss degree for off-surface potential evaluation: 2(m + l) + 6.
int potential_quadrature_degree(const FeSpace& space);

/// u_h(x) from the formulation's representation formula. Points closer to
/// an element than half its diameter raise Error(near_field).
template <typename Scalar>
Complex evaluate_potential(const OperatorSpec& spec, const Density<Scalar>& density, const Vec3& x);

}  // namespace curvebem
