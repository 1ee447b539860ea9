#include "curvebem/reference.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "curvebem/errors.hpp"
#include "curvebem/quadrature.hpp"
#include "kernels.hpp"

namespace curvebem {

void spherical_bessel_sequence(int nmax, double z, std::vector<double>& j, std::vector<double>& y) {
  if (nmax < 0 || nmax > 200) throw ConfigError("spherical_bessel: order must lie in [0, 200]");
  if (!(z > 0.0) || z > 100.0) throw ConfigError("spherical_bessel: argument must lie in (0, 100]");
  j.assign(nmax + 1, 0.0);
  y.assign(nmax + 1, 0.0);
  const double s = std::sin(z), c = std::cos(z);

  // Miller's algorithm: downward from well above max(n, z), rescaled to
  // whichever of j_0, j_1 is better conditioned.
  const int start = std::max(nmax, static_cast<int>(z)) + 40 + static_cast<int>(std::sqrt(40.0 * (nmax + z)));
  double above = 0.0, current = 1e-300;
  std::vector<double> trial(nmax + 2, 0.0);
  for (int n = start; n >= 1; --n) {
    const double below = (2.0 * n + 1.0) / z * current - above;
    above = current;
    current = below;
    if (std::abs(current) > 1e250) {
      const double scale = 1e-250;
      current *= scale;
      above *= scale;
      for (double& t : trial) t *= scale;
    }
    if (n - 1 <= nmax + 1) trial[n - 1] = current;
  }
  const double j0 = s / z;
  const double j1 = s / (z * z) - c / z;
  const double scale = std::abs(j0) >= std::abs(j1) ? j0 / trial[0] : j1 / trial[1];
  for (int n = 0; n <= nmax; ++n) j[n] = trial[n] * scale;

  y[0] = -c / z;
  if (nmax >= 1) y[1] = -c / (z * z) - s / z;
  for (int n = 1; n < nmax; ++n) y[n + 1] = (2.0 * n + 1.0) / z * y[n] - y[n - 1];
  for (int n = 0; n <= nmax; ++n) {
    if (!std::isfinite(y[n])) {
      std::ostringstream msg;
      msg << "y_" << n << "(" << z << ") overflows";
      throw Error(ErrorCode::range_error, msg.str());
    }
  }
}

SphericalBesselValues spherical_bessel(int n, double z) {
  std::vector<double> j, y;
  spherical_bessel_sequence(n, z, j, y);
  return {j[n], y[n]};
}

PlaneWave::PlaneWave(double wavenumber, const Vec3& direction) : k(wavenumber), d(direction) {
  if (std::abs(d.norm() - 1.0) > 1e-12) throw ConfigError("plane wave direction must be a unit vector");
}

Complex PlaneWave::operator()(const Vec3& x) const {
  const double phase = k * x.dot(d);
  return {std::cos(phase), std::sin(phase)};
}

MieSeries::MieSeries(double k, int truncation) : k_(k) {
  if (!(k > 0.0) || !std::isfinite(k)) throw ConfigError("Mie series needs a positive wavenumber");
  const int N = truncation >= 0 ? truncation : static_cast<int>(std::ceil(k)) + 20;
  std::vector<double> j, y;
  spherical_bessel_sequence(N, k, j, y);
  coefficients_.resize(N + 1);
  Complex in(1.0, 0.0);
  for (int n = 0; n <= N; ++n) {
    coefficients_[n] = -(2.0 * n + 1.0) * in * j[n] / Complex(j[n], y[n]);
    in *= Complex(0.0, 1.0);
  }
}

Complex MieSeries::scattered_field(const Vec3& x, const Vec3& d) const {
  const double r = x.norm();
  if (r < 1.0 - 1e-12) throw Error(ErrorCode::domain_error, "Mie scattered field requested inside the unit sphere");
  const int N = truncation();
  std::vector<double> j, y;
  spherical_bessel_sequence(N, k_ * r, j, y);
  const double t = std::clamp(x.dot(d) / r, -1.0, 1.0);
  double p_prev = 1.0, p = t;
  Complex sum = 0.0;
  for (int n = 0; n <= N; ++n) {
    const double pn = n == 0 ? 1.0 : p;
    sum += coefficients_[n] * Complex(j[n], y[n]) * pn;
    if (n >= 1) {
      const double next = ((2.0 * n + 1.0) * t * p - n * p_prev) / (n + 1.0);
      p_prev = p;
      p = next;
    }
  }
  return sum;
}

Complex mie_scattered_field(const MieSeries& series, const Vec3& x, const Vec3& d) {
  return series.scattered_field(x, d);
}

std::vector<int> sphere_dirichlet_resonances(double k, int nmax, double tolerance) {
  // zeros of j_n lie beyond n + 1/2; below that j_n is small without vanishing
  const int limit = static_cast<int>(std::ceil(k - 0.5)) - 1;
  nmax = nmax < 0 ? limit : std::min(nmax, limit);
  std::vector<int> hits;
  if (nmax < 0) return hits;
  std::vector<double> j, y;
  spherical_bessel_sequence(nmax, k, j, y);
  for (int n = 0; n <= nmax; ++n)
    if (std::abs(j[n]) < tolerance * std::hypot(j[n], y[n])) hits.push_back(n);
  return hits;
}

HarmonicPair laplace_harmonic_test(HarmonicTest test) {
  Field<double> u;
  switch (test) {
    case HarmonicTest::x1: u = [](const Vec3& x) { return x(0); }; break;
    case HarmonicTest::x1x2: u = [](const Vec3& x) { return x(0) * x(1); }; break;
    case HarmonicTest::r2_harmonic: u = [](const Vec3& x) { return x(0) * x(0) - x(1) * x(1); }; break;
  }
  return {u, u};
}

int potential_quadrature_degree(const FeSpace& space) {
  return std::min(30, 2 * (space.degree() + space.mesh().order()) + 6);
}

template <typename Scalar>
Complex evaluate_potential(const OperatorSpec& spec, const Density<Scalar>& density, const Vec3& x) {
  const FeSpace& space = *density.space;
  const CurvedMesh& mesh = space.mesh();
  const TriangleRule rule = gauss_triangle(potential_quadrature_degree(space));
  const auto& basis = space.basis();
  const int nl = basis.size();
  const bool interpolated = spec.normal() == NormalChoice::interpolated;
  const Complex sl = spec.single_layer_factor();
  const double dl = spec.double_layer_sign();
  const double k = spec.wavenumber();
  const bool helmholtz = spec.equation() == Equation::helmholtz;

  std::vector<double> phi(nl);
  Complex total = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& dofs = space.element_dofs(e);
    const double min_distance = 0.5 * mesh.diameter(e);
    Complex element_sum = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const ElementFrame f = element_frame_fast(mesh, e, rule.points[q]);
      const Vec3 d = x - f.point;
      const double r = d.norm();
      if (r < min_distance) {
        std::ostringstream msg;
        msg << "evaluation point (" << x.transpose() << ") is within half a mesh width of element " << e;
        throw Error(ErrorCode::near_field, msg.str());
      }
      basis.evaluate(rule.points[q], phi);
      Scalar p = Scalar(0);
      for (int i = 0; i < nl; ++i) p += density.coefficients[dofs[i]] * phi[i];
      const Vec3& n = interpolated ? f.interpolated_normal : f.element_normal;
      Complex kernel = 0.0;
      if (helmholtz) {
        if (sl != 0.0) kernel += sl * kernels::helmholtz_single(k, r);
        if (dl != 0.0) kernel += dl * kernels::helmholtz_double(k, d, r, n);
      } else {
        if (sl != 0.0) kernel += sl * kernels::laplace_single(r);
        if (dl != 0.0) kernel += dl * kernels::laplace_double(d, r, n);
      }
      element_sum += kernel * Complex(p) * (rule.weights[q] * f.jacobian);
    }
    total += element_sum;
  }
  return total;
}

template Complex evaluate_potential<double>(const OperatorSpec&, const Density<double>&, const Vec3&);
template Complex evaluate_potential<Complex>(const OperatorSpec&, const Density<Complex>&, const Vec3&);

}  // namespace curvebem
