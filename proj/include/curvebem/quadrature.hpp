#pragma once

#include <array>
#include <span>
#include <vector>

#include "curvebem/types.hpp"

namespace curvebem {

/// Gauss-Legendre nodes and weights on [0, 1].
struct LineRule {
  std::vector<double> points;
  std::vector<double> weights;
};

LineRule gauss_legendre(int n);

/// Quadrature rule on the reference triangle (area 1/2).
struct TriangleRule {
  std::vector<RefPoint> points;
  std::vector<double> weights;
  int degree = 0;

  std::size_t size() const { return points.size(); }
};

/// Rule exact for bivariate polynomials up to `degree` (1..30). Low degrees
/// use tabulated symmetric rules; higher degrees a collapsed Gauss product.
TriangleRule gauss_triangle(int degree);

enum class Adjacency { coincident, edge, vertex, disjoint };

/// Tensor rule for a pair of triangles. Points are in canonical reference
/// coordinates: shared vertices sit at the canonical vertex positions 0
/// (vertex adjacency) or 0 and 1 (edge adjacency) of both triangles.
struct PairRule {
  Adjacency adjacency = Adjacency::disjoint;
  std::vector<RefPoint> x;
  std::vector<RefPoint> y;
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
};

/// Relative-coordinate (Sauter-Schwab) rule with 1D Gauss order q in [2, 12]:
/// 6 q^4 points when coincident, 5 q^4 for a shared edge, 2 q^4 for a shared
/// vertex and q^4 for disjoint triangles.
PairRule singular_pair_rule(Adjacency adjacency, int q);

/// Shared-vertex classification of two vertex triples.
///
/// `perm_x[k]` / `perm_y[k]` give the local vertex of each triangle placed at
/// canonical position k; shared vertices occupy the leading positions in the
/// same order for both triangles.
struct PairTopology {
  Adjacency adjacency = Adjacency::disjoint;
  std::array<int, 3> perm_x{0, 1, 2};
  std::array<int, 3> perm_y{0, 1, 2};
};

PairTopology classify_pair(std::span<const int, 3> vertices_x, std::span<const int, 3> vertices_y);

/// Map a canonical reference point to local reference coordinates of a
/// triangle whose vertices were permuted by `perm`.
RefPoint permute_reference(RefPoint canonical, const std::array<int, 3>& perm);

/// Quadrature order defaults, all adjustable.
struct QuadratureOptions {
  int singular_order = -1;     ///< Sauter-Schwab q; -1 means m + l + 5
  int regular_degree = -1;     ///< degree for well-separated pairs; -1 means 2(m + l) + 4
  int near_boost = 4;          ///< extra degree for near pairs
  double near_ratio = 3.0;     ///< centroid distance / mean diameter below which a pair is near
  double subdivide_ratio = 1.5;  ///< separation ratio below which near pairs are subdivided
  int max_subdivision = 3;
  double far_tolerance = 1e-12;  ///< target relative quadrature error for graded far pairs
};

/// Degree for a well-separated pair with separation ratio `ratio`
/// (centroid distance over mean diameter), never above `base_degree` and
/// never below 2.
int graded_far_degree(double ratio, int base_degree, double tolerance);

}  // namespace curvebem
