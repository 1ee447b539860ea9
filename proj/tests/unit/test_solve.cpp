#include <doctest.h>

#include <random>

#include "curvebem/errors.hpp"
#include "curvebem/operators.hpp"
#include "curvebem/solve.hpp"

using namespace curvebem;

TEST_CASE("dense solve on small systems") {
  const Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(5, -1.0, 3.0);
  CHECK((dense_solve<double>(Eigen::MatrixXd::Identity(5, 5), b).solution - b).norm() == 0.0);

  Eigen::MatrixXd A(2, 2);
  A << 2, 0, 0, 4;
  const auto r = dense_solve<double>(A, Eigen::Vector2d(2, 8));
  CHECK(r.solution(0) == doctest::Approx(1.0));
  CHECK(r.solution(1) == doctest::Approx(2.0));
  CHECK(r.method == SolveMethod::dense);
}

TEST_CASE("dense solve on a random well-conditioned complex system") {
  std::mt19937 rng(1);
  std::normal_distribution<double> g;
  const int n = 200;
  Eigen::MatrixXcd A(n, n);
  Eigen::VectorXcd b(n);
  for (int i = 0; i < n; ++i) {
    b(i) = Complex(g(rng), g(rng));
    for (int j = 0; j < n; ++j) A(i, j) = Complex(g(rng), g(rng)) / std::sqrt(double(n));
    A(i, i) += 4.0;
  }
  CHECK(dense_solve<Complex>(A, b).true_residual < 1e-12);
}

TEST_CASE("dense solve rejects singular and mismatched systems") {
  Eigen::MatrixXd A(3, 3);
  A << 1, 2, 3, 2, 4, 6, 0, 1, 1;
  CHECK_THROWS_AS(dense_solve<double>(A, Eigen::Vector3d(1, 2, 3)), SingularSystemError);
  CHECK_THROWS_AS(dense_solve<double>(Eigen::MatrixXd::Identity(3, 3), Eigen::Vector2d(1, 2)), ConfigError);
}

TEST_CASE("GMRES with the mass matrix as operator converges in one step") {
  auto mesh = std::make_shared<const CurvedMesh>(
      build_curved_mesh(std::make_shared<const Surface>(Surface::sphere()), 2, 1));
  const auto space = build_space(mesh, 2);
  const Eigen::SparseMatrix<double> M = mass_matrix(*space);
  const MassPreconditioner P(M);
  const Eigen::VectorXd b = Eigen::VectorXd::Random(space->num_dofs());
  const auto r = gmres_solve<double>(Eigen::MatrixXd(M), b, &P);
  CHECK(r.iterations == 1);
  CHECK(r.true_residual < 1e-12);
}

TEST_CASE("GMRES agrees with the dense solve on a single-layer system") {
  auto mesh = std::make_shared<const CurvedMesh>(
      build_curved_mesh(std::make_shared<const Surface>(Surface::sphere()), 2, 1));
  const auto space = build_space(mesh, 1);
  const auto spec = OperatorSpec::make(Equation::helmholtz, Formulation::cfie, kPi);
  const ComplexMatrix A = std::get<ComplexMatrix>(assemble_operator(spec, *space));
  const Eigen::VectorXcd b =
      assemble_rhs<Complex>(spec, *space, [](const Vec3& x) { return -std::exp(Complex(0.0, kPi * x(0))); });
  const MassPreconditioner P(mass_matrix(*space));
  const auto g = gmres_solve<Complex>(A, b, &P);
  const auto d = dense_solve<Complex>(A, b);
  CHECK((g.solution - d.solution).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(g.residual <= 1e-10);
  CHECK(g.true_residual < 1e-8);
  REQUIRE(g.history.size() == static_cast<std::size_t>(g.iterations) + 1);
  for (std::size_t i = 1; i < g.history.size(); ++i) CHECK(g.history[i] <= g.history[i - 1] * (1 + 1e-12));

  // unpreconditioned iteration reaches the same solution
  const auto plain = gmres_solve<Complex>(A, b, nullptr);
  CHECK((plain.solution - d.solution).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("GMRES reports non-convergence with the residual history") {
  std::mt19937 rng(2);
  std::normal_distribution<double> g;
  const int n = 60;
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = g(rng);
  const Eigen::VectorXd b = Eigen::VectorXd::Ones(n);
  try {
    gmres_solve<double>(A, b, nullptr, {1e-10, 5});
    FAIL("expected NotConvergedError");
  } catch (const NotConvergedError& e) {
    CHECK(e.residual_history().size() == 6u);
    CHECK(e.code() == ErrorCode::not_converged);
  }
}

TEST_CASE("GMRES on a zero right-hand side") {
  const auto r = gmres_solve<double>(Eigen::MatrixXd::Identity(4, 4), Eigen::VectorXd::Zero(4), nullptr);
  CHECK(r.solution.norm() == 0.0);
  CHECK(r.iterations == 0);
}
