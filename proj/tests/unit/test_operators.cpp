#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>

#include <Eigen/Cholesky>

#include "curvebem/errors.hpp"
#include "curvebem/operators.hpp"
#include "test_support.hpp"

using namespace curvebem;

namespace {

std::shared_ptr<const FeSpace> sphere_space(int order, int level, int m) {
  auto mesh = std::make_shared<const CurvedMesh>(
      build_curved_mesh(std::make_shared<const Surface>(Surface::sphere()), order, level));
  return build_space(mesh, m);
}

AssemblyOptions with_q(int q) {
  AssemblyOptions o;
  o.quadrature.singular_order = q;
  return o;
}

double sl_identity_residual(int level) {
  const auto space = sphere_space(2, level, 1);
  const RealMatrix A = std::get<RealMatrix>(
      assemble_operator(OperatorSpec::make(Equation::laplace, Formulation::single_layer), *space, with_q(8)));
  const Eigen::VectorXd m1 = assemble_mass(*space).rowwise().sum();
  return ((A.rowwise().sum() - m1).array() / m1.array()).abs().maxCoeff();
}

}  // namespace

TEST_CASE("kernel values") {
  const Vec3 n(0, 0, 1);
  const auto sl = OperatorSpec::make(Equation::laplace, Formulation::single_layer);
  const auto dl = OperatorSpec::make(Equation::laplace, Formulation::double_layer);
  CHECK(kernel_eval(sl, Vec3(2, 0, 0), Vec3::Zero(), n).real() == doctest::Approx(1.0 / (8.0 * kPi)).epsilon(1e-15));
  CHECK(std::abs(kernel_eval(dl, Vec3(1, 1, 0), Vec3::Zero(), n)) == 0.0);
  // d/dn_y of 1/(4 pi |x - y|) with x - y along n_y
  CHECK(kernel_eval(dl, Vec3(0, 0, 2), Vec3::Zero(), n).real() == doctest::Approx(1.0 / (16.0 * kPi)).epsilon(1e-15));
  const auto hsl = OperatorSpec::make(Equation::helmholtz, Formulation::single_layer, 1e-8);
  CHECK(std::abs(kernel_eval(hsl, Vec3(1, 0, 0), Vec3::Zero(), n) - 1.0 / (4.0 * kPi)) < 1e-7);
  CHECK_THROWS_AS(kernel_eval(sl, Vec3(1, 2, 3), Vec3(1, 2, 3), n), Error);
}

TEST_CASE("Helmholtz double-layer kernel matches a finite-difference normal derivative") {
  const double k = 2.0;
  const auto hdl = OperatorSpec::make(Equation::helmholtz, Formulation::double_layer, k);
  const Vec3 x(0.3, -0.2, 1.1), y(0.1, 0.4, -0.2), n = Vec3(1, 2, 2).normalized();
  auto g = [&](const Vec3& z) {
    const double r = (x - z).norm();
    return Complex(std::cos(k * r), std::sin(k * r)) / (4.0 * kPi * r);
  };
  const double step = 1e-5;
  const Complex fd = (g(y + step * n) - g(y - step * n)) / (2 * step);
  CHECK(std::abs(kernel_eval(hdl, x, y, n) - fd) < 1e-9);
}

TEST_CASE("operator specification validation") {
  CHECK_THROWS_AS(OperatorSpec::make(Equation::laplace, Formulation::cfie), ConfigError);
  CHECK_THROWS_AS(OperatorSpec::make(Equation::laplace, Formulation::single_layer, 1.0), ConfigError);
  CHECK_THROWS_AS(OperatorSpec::make(Equation::helmholtz, Formulation::single_layer), ConfigError);
  CHECK_THROWS_AS(OperatorSpec::make(Equation::helmholtz, Formulation::single_layer, -1.0), ConfigError);
  CHECK_THROWS_AS(OperatorSpec::make(Equation::helmholtz, Formulation::single_layer, 1.0, 1.0), ConfigError);
  CHECK_THROWS_AS(OperatorSpec::make(Equation::helmholtz, Formulation::cfie, 1.0, 0.0), ConfigError);
  const auto cfie = OperatorSpec::make(Equation::helmholtz, Formulation::cfie, 2.5);
  CHECK(cfie.coupling() == 2.5);
  CHECK(cfie.single_layer_factor() == Complex(0.0, -2.5));
  CHECK(OperatorSpec::make(Equation::laplace, Formulation::double_layer).double_layer_sign() == -1.0);
  CHECK(OperatorSpec::make(Equation::helmholtz, Formulation::double_layer, 1.0).double_layer_sign() == 1.0);
}

TEST_CASE("mass matrix: symmetric, P0 diagonal, area converges at order l + 1") {
  double prev = 0.0, h_prev = 0.0;
  for (int level = 1; level <= 3; ++level) {
    const auto space = sphere_space(1, level, 0);
    const RealMatrix M = assemble_mass(*space);
    CHECK((M - RealMatrix(M.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0);
    const double err = std::abs(M.sum() - 4 * kPi);
    if (level > 1) CHECK(std::log(prev / err) / std::log(h_prev / space->mesh().h()) == doctest::Approx(2.0).epsilon(0.25));
    prev = err;
    h_prev = space->mesh().h();
  }
  const RealMatrix M2 = assemble_mass(*sphere_space(2, 1, 2));
  CHECK((M2 - M2.transpose()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("Laplace double-layer constant identity") {
  for (const char* name : {"sphere", "bean"}) {
    CAPTURE(std::string(name));
    auto mesh = std::make_shared<const CurvedMesh>(
        build_curved_mesh(std::make_shared<const Surface>(Surface::from_name(name, {})), 2, 2));
    const auto space = build_space(mesh, 1);
    const RealMatrix A = std::get<RealMatrix>(
        assemble_operator(OperatorSpec::make(Equation::laplace, Formulation::double_layer), *space, with_q(8)));
    const Eigen::VectorXd m1 = assemble_mass(*space).rowwise().sum();
    CHECK((A.rowwise().sum() - m1).cwiseAbs().maxCoeff() < 1e-6);
    // the raw double-layer moments reproduce -M 1 / 2
    const Eigen::VectorXd moments = laplace_double_layer_moments(*space, with_q(8));
    CHECK((moments + 0.5 * m1).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("Laplace single-layer constant identity on the sphere") {
  const double r1 = sl_identity_residual(1);
  const double r2 = sl_identity_residual(2);
  CHECK(r2 < 1e-4);
  CHECK(r2 < r1);
}

TEST_CASE("single-layer matrices are symmetric") {
  const auto space = sphere_space(2, 1, 1);
  const ComplexMatrix A = std::get<ComplexMatrix>(
      assemble_operator(OperatorSpec::make(Equation::helmholtz, Formulation::single_layer, kPi), *space));
  CHECK((A - A.transpose()).cwiseAbs().maxCoeff() / A.cwiseAbs().maxCoeff() < 1e-12);
  const RealMatrix S = std::get<RealMatrix>(
      assemble_operator(OperatorSpec::make(Equation::laplace, Formulation::single_layer), *space));
  CHECK((S - S.transpose()).cwiseAbs().maxCoeff() / S.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(Eigen::LLT<RealMatrix>(S).info() == Eigen::Success);
}

TEST_CASE("assembly does not depend on the thread count") {
  const auto space = sphere_space(2, 1, 1);
  const auto spec = OperatorSpec::make(Equation::helmholtz, Formulation::cfie, 2.0);
  AssemblyOptions one, three;
  one.threads = 1;
  three.threads = 3;
  const ComplexMatrix a = std::get<ComplexMatrix>(assemble_operator(spec, *space, one));
  const ComplexMatrix b = std::get<ComplexMatrix>(assemble_operator(spec, *space, three));
  const ComplexMatrix c = std::get<ComplexMatrix>(assemble_operator(spec, *space, one));
  CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-13 * a.cwiseAbs().maxCoeff());
  CHECK((a - c).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("interpolated normal perturbs the double layer at high order") {
  double prev = 0.0;
  for (int level = 1; level <= 2; ++level) {
    const auto space = sphere_space(1, level, 0);
    const auto element = OperatorSpec::make(Equation::helmholtz, Formulation::double_layer, 1.0);
    const auto interp =
        OperatorSpec::make(Equation::helmholtz, Formulation::double_layer, 1.0, std::nullopt, NormalChoice::interpolated);
    const ComplexMatrix a = std::get<ComplexMatrix>(assemble_operator(element, *space));
    const ComplexMatrix b = std::get<ComplexMatrix>(assemble_operator(interp, *space));
    const double diff = (a - b).cwiseAbs().maxCoeff();
    MESSAGE("level " << level << " max |A_element - A_interpolated| = " << diff);
    if (level > 1) CHECK(diff < prev);
    prev = diff;
  }
}

TEST_CASE("right-hand side") {
  const auto space = sphere_space(2, 1, 2);
  const auto lsl = OperatorSpec::make(Equation::laplace, Formulation::single_layer);
  const RealMatrix M = assemble_mass(*space);
  const Eigen::VectorXd one = assemble_rhs<double>(lsl, *space, [](const Vec3&) { return 1.0; });
  CHECK((one - M.rowwise().sum()).cwiseAbs().maxCoeff() < 1e-13);

  // a basis function synthesised as a field gives the matching mass column
  const auto flat = sphere_space(1, 1, 1);
  const RealMatrix flat_mass = assemble_mass(*flat);
  Density<double> hat{flat, Eigen::VectorXd::Zero(flat->num_dofs())};
  hat.coefficients(7) = 1.0;
  const Eigen::VectorXd column =
      assemble_rhs<double>(lsl, *flat, [&](const Vec3& x) { return test_support::evaluate_at_point(hat, x); });
  CHECK((column - flat_mass.col(7)).cwiseAbs().maxCoeff() < 1e-10);

  const auto hsl = OperatorSpec::make(Equation::helmholtz, Formulation::single_layer, 2 * kPi);
  const Field<Complex> wave = [](const Vec3& x) { return std::exp(Complex(0.0, 2 * kPi * x(0))); };
  const auto fine = sphere_space(2, 2, 2);
  const Eigen::VectorXcd b = assemble_rhs<Complex>(hsl, *fine, wave);
  CHECK(b.allFinite());
  // the same moments with a richer load-vector rule
  const Eigen::VectorXcd refined = load_vector<Complex>(*fine, wave, 2);
  CHECK(std::abs(b.norm() - refined.norm()) < 1e-8 * b.norm());
}

TEST_CASE("matrix binary format round trip") {
  ComplexMatrix A(2, 3);
  A << Complex(1, 2), Complex(3, 4), Complex(5, 6), Complex(-1, 0), Complex(0, -1), Complex(7.5, 0.25);
  std::stringstream buffer;
  write_matrix_binary(A, buffer);
  const std::string bytes = buffer.str();
  REQUIRE(bytes.size() == 8 + 8 + 1 + 6 * 16);
  CHECK(static_cast<unsigned char>(bytes[0]) == 2);
  CHECK(static_cast<unsigned char>(bytes[16]) == 1);
  const SystemMatrix back = read_matrix_binary(buffer);
  CHECK(std::get<ComplexMatrix>(back) == A);

  RealMatrix R = RealMatrix::Random(4, 4);
  std::stringstream rb;
  write_matrix_binary(R, rb);
  CHECK(static_cast<unsigned char>(rb.str()[16]) == 0);
  CHECK(std::get<RealMatrix>(read_matrix_binary(rb)) == R);
}

TEST_CASE("DOF cap") {
  const auto space = sphere_space(1, 5, 0);  // 20480 elements
  CHECK_THROWS_AS(assemble_operator(OperatorSpec::make(Equation::laplace, Formulation::single_layer), *space),
                  ConfigError);
}
