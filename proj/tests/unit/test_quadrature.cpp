#include <doctest.h>

#include <cmath>
#include <numeric>
#include <string>

#include "curvebem/errors.hpp"
#include "curvebem/quadrature.hpp"
#include "duffy_oracle.hpp"

using namespace curvebem;

namespace {

double factorial(int n) { return std::tgamma(n + 1.0); }

double monomial_exact(int a, int b) { return factorial(a) * factorial(b) / factorial(a + b + 2); }

// Flat embedding of canonical coordinates for a triangle with vertices v.
oracle::P2 embed(const oracle::Tri& v, RefPoint p) { return v[0] + p.xi * (v[1] - v[0]) + p.eta * (v[2] - v[0]); }

double jac(const oracle::Tri& v) { return std::abs(oracle::cross2(v[1] - v[0], v[2] - v[0])); }

double pair_rule_value(Adjacency adj, int q, const oracle::Tri& t1, const oracle::Tri& t2) {
  const PairRule rule = singular_pair_rule(adj, q);
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double r = (embed(t1, rule.x[i]) - embed(t2, rule.y[i])).norm();
    sum += rule.weights[i] / r;
  }
  return sum * jac(t1) * jac(t2) / (4.0 * M_PI);
}

const oracle::Tri kRef{oracle::P2(0, 0), oracle::P2(1, 0), oracle::P2(0, 1)};
// shares the canonical edge (v0, v1) with kRef, lies below it
const oracle::Tri kEdge{oracle::P2(0, 0), oracle::P2(1, 0), oracle::P2(0.3, -0.8)};
// shares only v0
const oracle::Tri kVertex{oracle::P2(0, 0), oracle::P2(-1.0, 0.2), oracle::P2(-0.3, -1.0)};

}  // namespace

TEST_CASE("triangle rules integrate monomials exactly") {
  for (int degree = 1; degree <= 30; ++degree) {
    const TriangleRule rule = gauss_triangle(degree);
    CHECK(rule.degree >= degree);
    const double total = std::accumulate(rule.weights.begin(), rule.weights.end(), 0.0);
    CHECK(total == doctest::Approx(0.5).epsilon(1e-14));
    for (double w : rule.weights) CHECK(w > 0.0);
    for (int a = 0; a <= degree; ++a) {
      for (int b = 0; a + b <= degree; ++b) {
        double sum = 0.0;
        for (std::size_t q = 0; q < rule.size(); ++q)
          sum += rule.weights[q] * std::pow(rule.points[q].xi, a) * std::pow(rule.points[q].eta, b);
        const double exact = monomial_exact(a, b);
        CHECK(std::abs(sum - exact) <= 1e-12 * exact);
      }
    }
  }
}

TEST_CASE("degree-2 rule on x^2 + y^2") {
  const TriangleRule rule = gauss_triangle(2);
  double sum = 0.0;
  for (std::size_t q = 0; q < rule.size(); ++q)
    sum += rule.weights[q] * (rule.points[q].xi * rule.points[q].xi + rule.points[q].eta * rule.points[q].eta);
  CHECK(sum == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
}

TEST_CASE("unsupported triangle degree is rejected") {
  CHECK_THROWS_AS(gauss_triangle(0), ConfigError);
  CHECK_THROWS_AS(gauss_triangle(31), ConfigError);
}

TEST_CASE("oracle inner integral agrees with brute-force sampling") {
  // a point outside the triangle: the integrand is smooth, Gauss is enough
  const oracle::P2 x(1.5, 1.2);
  const TriangleRule rule = gauss_triangle(30);
  double sum = 0.0;
  for (std::size_t q = 0; q < rule.size(); ++q) sum += rule.weights[q] / (embed(kRef, rule.points[q]) - x).norm();
  CHECK(oracle::inner(x, kRef) == doctest::Approx(sum).epsilon(1e-12));
}

TEST_CASE("pair rule sizes and weights") {
  const int q = 4;
  CHECK(singular_pair_rule(Adjacency::coincident, q).size() == 6u * q * q * q * q);
  CHECK(singular_pair_rule(Adjacency::edge, q).size() == 5u * q * q * q * q);
  CHECK(singular_pair_rule(Adjacency::vertex, q).size() == 2u * q * q * q * q);
  CHECK(singular_pair_rule(Adjacency::disjoint, q).size() == 1u * q * q * q * q);
  for (auto adj : {Adjacency::coincident, Adjacency::edge, Adjacency::vertex, Adjacency::disjoint}) {
    const PairRule rule = singular_pair_rule(adj, 5);
    double total = 0.0;
    for (double w : rule.weights) {
      CHECK(w > 0.0);
      CHECK(std::isfinite(w));
      total += w;
    }
    CHECK(total == doctest::Approx(0.25).epsilon(1e-12));
  }
}

TEST_CASE("singular rules match the adaptive Duffy oracle") {
  struct Case {
    const char* name;
    Adjacency adj;
    const oracle::Tri* other;
  };
  const Case cases[] = {{"coincident", Adjacency::coincident, &kRef},
                        {"edge", Adjacency::edge, &kEdge},
                        {"vertex", Adjacency::vertex, &kVertex}};
  for (const auto& c : cases) {
    const std::string name = c.name;
    CAPTURE(name);
    const double exact = oracle::single_layer_pair(kRef, *c.other);
    CHECK(pair_rule_value(c.adj, 8, kRef, *c.other) == doctest::Approx(exact).epsilon(1e-6));
    // convergence in q, allowing 10% noise once the error is at round-off
    double previous = 1e300;
    for (int q : {2, 4, 6, 8}) {
      const double err = std::abs(pair_rule_value(c.adj, q, kRef, *c.other) - exact);
      CHECK(err <= 1.1 * previous + 1e-14);
      previous = err;
    }
  }
}

TEST_CASE("disjoint rule equals plain tensor Gauss") {
  const oracle::Tri far{oracle::P2(3, 3), oracle::P2(4, 3), oracle::P2(3, 4)};
  const int q = 6;
  const double ss = pair_rule_value(Adjacency::disjoint, q, kRef, far);
  const TriangleRule rule = gauss_triangle(2 * q - 1);
  double tensor = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i)
    for (std::size_t j = 0; j < rule.size(); ++j)
      tensor += rule.weights[i] * rule.weights[j] / (embed(kRef, rule.points[i]) - embed(far, rule.points[j])).norm();
  tensor *= jac(kRef) * jac(far) / (4.0 * M_PI);
  CHECK(ss == doctest::Approx(tensor).epsilon(1e-12));
}

TEST_CASE("pair classification") {
  const std::array<int, 3> a{4, 7, 9};
  SUBCASE("coincident") {
    const std::array<int, 3> b{9, 4, 7};
    CHECK(classify_pair(a, b).adjacency == Adjacency::coincident);
  }
  SUBCASE("edge, symmetric") {
    const std::array<int, 3> b{7, 2, 4};
    const auto ab = classify_pair(a, b);
    const auto ba = classify_pair(b, a);
    CHECK(ab.adjacency == Adjacency::edge);
    CHECK(ba.adjacency == Adjacency::edge);
    for (int k = 0; k < 2; ++k) CHECK(a[ab.perm_x[k]] == b[ab.perm_y[k]]);
  }
  SUBCASE("vertex") {
    const std::array<int, 3> b{1, 2, 9};
    const auto ab = classify_pair(a, b);
    CHECK(ab.adjacency == Adjacency::vertex);
    CHECK(a[ab.perm_x[0]] == b[ab.perm_y[0]]);
    CHECK(classify_pair(b, a).adjacency == Adjacency::vertex);
  }
  SUBCASE("disjoint") {
    const std::array<int, 3> b{1, 2, 3};
    CHECK(classify_pair(a, b).adjacency == Adjacency::disjoint);
  }
}

TEST_CASE("permute_reference maps canonical vertices to permuted local vertices") {
  const std::array<int, 3> perm{2, 0, 1};
  const RefPoint verts[3] = {{0, 0}, {1, 0}, {0, 1}};
  for (int k = 0; k < 3; ++k) {
    const RefPoint p = permute_reference(verts[k], perm);
    CHECK(p.xi == doctest::Approx(verts[perm[k]].xi));
    CHECK(p.eta == doctest::Approx(verts[perm[k]].eta));
  }
}

TEST_CASE("graded far degree stays within bounds") {
  CHECK(graded_far_degree(100.0, 10, 1e-12) <= 10);
  CHECK(graded_far_degree(100.0, 10, 1e-12) >= 2);
  CHECK(graded_far_degree(3.0, 10, 1e-12) >= graded_far_degree(30.0, 10, 1e-12));
}
