#include "curvebem/quadrature.hpp"

#include <algorithm>
#include <cmath>

#include "curvebem/errors.hpp"

namespace curvebem {

LineRule gauss_legendre(int n) {
  if (n < 1) throw ConfigError("Gauss-Legendre order must be positive");
  LineRule rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double derivative = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * x * p2 - (j - 1.0) * p3) / j;
      }
      derivative = n * (x * p1 - p2) / (x * x - 1.0);
      const double step = p1 / derivative;
      x -= step;
      if (std::abs(step) < 1e-16) break;
    }
    const double w = 1.0 / ((1.0 - x * x) * derivative * derivative);
    rule.points[i] = 0.5 * (1.0 - x);
    rule.points[n - 1 - i] = 0.5 * (1.0 + x);
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

namespace {

void add_orbit_s3(TriangleRule& rule, double a, double w) {
  // permutations of barycentric (a, a, 1-2a)
  const double b = 1.0 - 2.0 * a;
  rule.points.push_back({a, a});
  rule.points.push_back({b, a});
  rule.points.push_back({a, b});
  for (int i = 0; i < 3; ++i) rule.weights.push_back(0.5 * w);
}

TriangleRule collapsed_rule(int degree) {
  // (u, v) in [0,1]^2 -> (xi, eta) = (u, v (1 - u)), Jacobian (1 - u)
  const int n = (degree + 3) / 2;
  const LineRule line = gauss_legendre(n);
  TriangleRule rule;
  rule.degree = degree;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double u = line.points[i];
      const double v = line.points[j];
      rule.points.push_back({u, v * (1.0 - u)});
      rule.weights.push_back(line.weights[i] * line.weights[j] * (1.0 - u));
    }
  return rule;
}

}  // namespace

TriangleRule gauss_triangle(int degree) {
  if (degree < 1 || degree > 30) throw ConfigError("triangle rule degree must lie in [1, 30]");
  TriangleRule rule;
  rule.degree = degree;
  if (degree == 1) {
    rule.points = {{1.0 / 3.0, 1.0 / 3.0}};
    rule.weights = {0.5};
  } else if (degree == 2) {
    add_orbit_s3(rule, 1.0 / 6.0, 1.0 / 3.0);
  } else if (degree <= 4) {
    add_orbit_s3(rule, 0.445948490915965, 0.223381589678011);
    add_orbit_s3(rule, 0.091576213509771, 0.109951743655322);
  } else if (degree == 5) {
    rule.points.push_back({1.0 / 3.0, 1.0 / 3.0});
    rule.weights.push_back(0.5 * 0.225);
    add_orbit_s3(rule, 0.470142064105115, 0.132394152788506);
    add_orbit_s3(rule, 0.101286507323456, 0.125939180544827);
  } else {
    return collapsed_rule(degree);
  }
  return rule;
}

PairRule singular_pair_rule(Adjacency adjacency, int q) {
  if (q < 2 || q > 12) throw ConfigError("singular pair rule order must lie in [2, 12]");
  const LineRule g = gauss_legendre(q);
  PairRule rule;
  rule.adjacency = adjacency;

  // Points are generated in the Sauter-Schwab simplex {0 <= x2 <= x1 <= 1}
  // and mapped to the unit triangle by (x1, x2) -> (x1 - x2, x2).
  auto push = [&rule](double x1, double x2, double y1, double y2, double w) {
    rule.x.push_back({x1 - x2, x2});
    rule.y.push_back({y1 - y2, y2});
    rule.weights.push_back(w);
  };

  for (int a = 0; a < q; ++a) {
    const double xi = g.points[a];
    for (int b = 0; b < q; ++b) {
      const double e1 = g.points[b];
      for (int c = 0; c < q; ++c) {
        const double e2 = g.points[c];
        for (int d = 0; d < q; ++d) {
          const double e3 = g.points[d];
          const double w0 = g.weights[a] * g.weights[b] * g.weights[c] * g.weights[d];
          switch (adjacency) {
            case Adjacency::coincident: {
              const double w = w0 * xi * xi * xi * e1 * e1 * e2;
              push(xi, xi * (1.0 - e1 + e1 * e2), xi * (1.0 - e1 * e2 * e3), xi * (1.0 - e1), w);
              push(xi * (1.0 - e1 * e2 * e3), xi * (1.0 - e1), xi, xi * (1.0 - e1 + e1 * e2), w);
              push(xi, xi * e1 * (1.0 - e2 + e2 * e3), xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2), w);
              push(xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2), xi, xi * e1 * (1.0 - e2 + e2 * e3), w);
              push(xi * (1.0 - e1 * e2 * e3), xi * e1 * (1.0 - e2 * e3), xi, xi * e1 * (1.0 - e2), w);
              push(xi, xi * e1 * (1.0 - e2), xi * (1.0 - e1 * e2 * e3), xi * e1 * (1.0 - e2 * e3), w);
              break;
            }
            case Adjacency::edge: {
              const double w = w0 * xi * xi * xi * e1 * e1 * e2;
              push(xi, xi * e1 * e3, xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2),
                   w0 * xi * xi * xi * e1 * e1);
              push(xi, xi * e1, xi * (1.0 - e1 * e2 * e3), xi * e1 * e2 * (1.0 - e3), w);
              push(xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2), xi, xi * e1 * e2 * e3, w);
              push(xi * (1.0 - e1 * e2 * e3), xi * e1 * e2 * (1.0 - e3), xi, xi * e1, w);
              push(xi * (1.0 - e1 * e2 * e3), xi * e1 * (1.0 - e2 * e3), xi, xi * e1 * e2, w);
              break;
            }
            case Adjacency::vertex: {
              const double w = w0 * xi * xi * xi * e2;
              push(xi, xi * e1, xi * e2, xi * e2 * e3, w);
              push(xi * e2, xi * e2 * e3, xi, xi * e1, w);
              break;
            }
            case Adjacency::disjoint: {
              push(xi, xi * e1, e2, e2 * e3, w0 * xi * e2);
              break;
            }
          }
        }
      }
    }
  }
  return rule;
}

PairTopology classify_pair(std::span<const int, 3> vx, std::span<const int, 3> vy) {
  PairTopology topo;
  int shared = 0;
  std::array<bool, 3> used_x{}, used_y{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (vx[i] == vy[j]) {
        topo.perm_x[shared] = i;
        topo.perm_y[shared] = j;
        used_x[i] = used_y[j] = true;
        ++shared;
        break;
      }
  int kx = shared, ky = shared;
  for (int i = 0; i < 3; ++i) {
    if (!used_x[i]) topo.perm_x[kx++] = i;
    if (!used_y[i]) topo.perm_y[ky++] = i;
  }
  switch (shared) {
    case 3: topo.adjacency = Adjacency::coincident; break;
    case 2: topo.adjacency = Adjacency::edge; break;
    case 1: topo.adjacency = Adjacency::vertex; break;
    default: topo.adjacency = Adjacency::disjoint; break;
  }
  return topo;
}

RefPoint permute_reference(RefPoint c, const std::array<int, 3>& perm) {
  const std::array<double, 3> canonical{1.0 - c.xi - c.eta, c.xi, c.eta};
  std::array<double, 3> local{};
  for (int k = 0; k < 3; ++k) local[perm[k]] = canonical[k];
  return {local[1], local[2]};
}

int graded_far_degree(double ratio, int base_degree, double tolerance) {
  if (ratio <= 1.0) return base_degree;
  // Gauss error for a kernel analytic outside a ball of radius ~ratio
  // element diameters decays like (1 / (2 ratio))^(p + 1).
  const double needed = std::log(tolerance) / std::log(1.0 / (2.0 * ratio)) - 1.0;
  const int degree = static_cast<int>(std::ceil(needed));
  return std::clamp(degree, 2, base_degree);
}

}  // namespace curvebem
