#include <doctest.h>

#include <random>

#include "curvebem/errors.hpp"
#include "curvebem/reference.hpp"

using namespace curvebem;

namespace {

std::shared_ptr<const FeSpace> sphere_space(int order, int level, int m) {
  auto mesh = std::make_shared<const CurvedMesh>(
      build_curved_mesh(std::make_shared<const Surface>(Surface::sphere()), order, level));
  return build_space(mesh, m);
}

}  // namespace

TEST_CASE("spherical Bessel closed forms") {
  CHECK(std::abs(spherical_bessel(0, kPi).j) < 1e-15);
  CHECK(std::abs(spherical_bessel(0, kPi / 2).y) < 1e-15);
  const double z = 1.7;
  CHECK(spherical_bessel(1, z).j == doctest::Approx(std::sin(z) / (z * z) - std::cos(z) / z).epsilon(1e-14));
  CHECK(spherical_bessel(1, z).y == doctest::Approx(-std::cos(z) / (z * z) - std::sin(z) / z).epsilon(1e-14));
  // j_5(2.3) and y_5(2.3) from a 30-digit reference
  CHECK(spherical_bessel(5, 2.3).j == doctest::Approx(5.0374877417878208e-03).epsilon(1e-12));
  CHECK(spherical_bessel(5, 2.3).y == doctest::Approx(-8.694824790197431).epsilon(1e-12));
}

TEST_CASE("spherical Bessel Wronskian") {
  std::vector<double> j, y;
  for (double z : {0.3, 2.3, 17.0, 80.0}) {
    spherical_bessel_sequence(30, z, j, y);
    for (int n = 1; n <= 30; ++n) {
      const double dj = j[n - 1] - (n + 1) / z * j[n];
      const double dy = y[n - 1] - (n + 1) / z * y[n];
      const double w = j[n] * dy - dj * y[n];
      if (std::isfinite(w)) CHECK(w * z * z == doctest::Approx(1.0).epsilon(1e-10));
    }
  }
  spherical_bessel_sequence(5, 2.3, j, y);
  const double z = 2.3;
  const double w = j[5] * (y[4] - 6 / z * y[5]) - (j[4] - 6 / z * j[5]) * y[5];
  CHECK(std::abs(w - 1 / (z * z)) < 1e-12);
}

TEST_CASE("spherical Bessel argument checks and overflow") {
  CHECK_THROWS_AS(spherical_bessel(-1, 1.0), ConfigError);
  CHECK_THROWS_AS(spherical_bessel(201, 1.0), ConfigError);
  CHECK_THROWS_AS(spherical_bessel(2, 0.0), ConfigError);
  CHECK_THROWS_AS(spherical_bessel(2, 101.0), ConfigError);
  try {
    spherical_bessel(200, 1e-3);
    FAIL("expected overflow");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::range_error);
  }
}

TEST_CASE("Mie series satisfies the sound-soft condition") {
  std::mt19937 rng(4);
  std::normal_distribution<double> g;
  const Vec3 d(1, 0, 0);
  for (double k : {kPi, 2 * kPi}) {
    const MieSeries mie(k);
    const PlaneWave wave(k, d);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const Vec3 x = Vec3(g(rng), g(rng), g(rng)).normalized();
      worst = std::max(worst, std::abs(mie.scattered_field(x, d) + wave(x)));
    }
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("Mie series symmetry and truncation") {
  const double k = 2 * kPi;
  const Vec3 d(1, 0, 0), x(1, 2, 3);
  const MieSeries mie(k);
  CHECK(mie.truncation() == 7 + 20);
  const MieSeries longer(k, mie.truncation() + 10);
  CHECK(std::abs(mie.scattered_field(x, d) - longer.scattered_field(x, d)) < 1e-12);
  // rotation about d
  const Eigen::Matrix3d R = Eigen::AngleAxisd(0.7, d).toRotationMatrix();
  CHECK(std::abs(mie.scattered_field(x, d) - mie.scattered_field(R * x, d)) < 1e-12);
  try {
    mie.scattered_field(Vec3(0.5, 0, 0), d);
    FAIL("expected a domain error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::domain_error);
  }
}

TEST_CASE("interior resonances of the unit sphere") {
  // j_0 vanishes at pi and 2 pi; j_1 first vanishes near 4.4934
  CHECK(sphere_dirichlet_resonances(kPi) == std::vector<int>{0});
  CHECK(sphere_dirichlet_resonances(2 * kPi) == std::vector<int>{0});
  CHECK(sphere_dirichlet_resonances(4.493409457909064).size() == 1u);
  CHECK(sphere_dirichlet_resonances(4.0).empty());
}

TEST_CASE("harmonic test fields") {
  const auto x1 = laplace_harmonic_test(HarmonicTest::x1);
  CHECK(x1.exact(Vec3(0.2, 0, 0)) == 0.2);
  const auto r2 = laplace_harmonic_test(HarmonicTest::r2_harmonic);
  const Vec3 p(0.3, -0.4, 0.2);
  const double h = 1e-3;
  double lap = 0.0;
  for (int k = 0; k < 3; ++k) {
    Vec3 e = Vec3::Zero();
    e[k] = h;
    lap += (r2.exact(p + e) - 2 * r2.exact(p) + r2.exact(p - e)) / (h * h);
  }
  CHECK(std::abs(lap) < 1e-8);
  CHECK(laplace_harmonic_test(HarmonicTest::x1x2).boundary(Vec3(2, 3, 0)) == 6.0);
}

TEST_CASE("single-layer potential of a unit density") {
  const auto space = sphere_space(2, 2, 1);
  const auto spec = OperatorSpec::make(Equation::laplace, Formulation::single_layer);
  const Density<double> ones{space, Eigen::VectorXd::Ones(space->num_dofs())};
  CHECK(std::abs(evaluate_potential(spec, ones, Vec3(0, 0, 0.3)) - 1.0) < 1e-4);
  CHECK(std::abs(evaluate_potential(spec, ones, Vec3(0, 0, 2)) - 0.5) < 1e-4);
  const Density<double> zero{space, Eigen::VectorXd::Zero(space->num_dofs())};
  CHECK(evaluate_potential(spec, zero, Vec3(0, 0, 2)) == Complex(0.0));
}

TEST_CASE("potential evaluation is linear and guards the near field") {
  const auto space = sphere_space(2, 1, 1);
  const auto spec = OperatorSpec::make(Equation::helmholtz, Formulation::cfie, 2.0);
  std::mt19937 rng(9);
  std::normal_distribution<double> g;
  Density<Complex> p{space, Eigen::VectorXcd(space->num_dofs())}, q = p, mix = p;
  for (int i = 0; i < space->num_dofs(); ++i) {
    p.coefficients(i) = Complex(g(rng), g(rng));
    q.coefficients(i) = Complex(g(rng), g(rng));
  }
  const Complex a(0.3, -1.2), b(2.0, 0.5);
  mix.coefficients = a * p.coefficients + b * q.coefficients;
  const Vec3 x(1, 2, 3);
  const Complex lhs = evaluate_potential(spec, mix, x);
  const Complex rhs = a * evaluate_potential(spec, p, x) + b * evaluate_potential(spec, q, x);
  CHECK(std::abs(lhs - rhs) < 1e-13 * std::abs(lhs));
  try {
    evaluate_potential(spec, p, Vec3(1.05, 0, 0));
    FAIL("expected a near-field error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::near_field);
  }
}

TEST_CASE("double-layer potential of a unit density") {
  // Laplace: u = -D0 1 equals 1 inside; Helmholtz D-potential vanishes nowhere trivially, use Laplace
  const auto space = sphere_space(2, 2, 1);
  const auto spec = OperatorSpec::make(Equation::laplace, Formulation::double_layer);
  const Density<double> ones{space, Eigen::VectorXd::Ones(space->num_dofs())};
  CHECK(std::abs(evaluate_potential(spec, ones, Vec3(0.1, 0.2, -0.1)) - 1.0) < 1e-6);
  CHECK(std::abs(evaluate_potential(spec, ones, Vec3(0, 3, 0))) < 1e-6);
}
