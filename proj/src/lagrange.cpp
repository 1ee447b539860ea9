#include "curvebem/lagrange.hpp"

#include <array>
#include <cassert>
#include <cmath>

#include <Eigen/LU>

#include "curvebem/errors.hpp"

namespace curvebem {

std::vector<RefPoint> lagrange_nodes(int degree) {
  if (degree < 0) throw ConfigError("lagrange degree must be non-negative");
  if (degree == 0) return {RefPoint{1.0 / 3.0, 1.0 / 3.0}};
  const double p = degree;
  std::vector<RefPoint> nodes = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
  for (int k = 1; k < degree; ++k) nodes.push_back({k / p, 0.0});
  for (int k = 1; k < degree; ++k) nodes.push_back({(degree - k) / p, k / p});
  for (int k = 1; k < degree; ++k) nodes.push_back({0.0, (degree - k) / p});
  for (int i = 1; i < degree; ++i)
    for (int j = 1; i + j < degree; ++j) nodes.push_back({i / p, j / p});
  return nodes;
}

LagrangeTriangle::LagrangeTriangle(int degree)
    : degree_(degree), size_(lagrange_size(degree)), nodes_(lagrange_nodes(degree)) {
  if (degree > 7) throw ConfigError("lagrange degree above 7 is not supported");
  for (int total = 0; total <= degree; ++total)
    for (int b = 0; b <= total; ++b) exponents_.emplace_back(total - b, b);

  Eigen::MatrixXd vandermonde(size_, size_);
  for (int j = 0; j < size_; ++j)
    for (int k = 0; k < size_; ++k)
      vandermonde(j, k) = std::pow(nodes_[j].xi, exponents_[k].first) *
                          std::pow(nodes_[j].eta, exponents_[k].second);
  coeffs_ = vandermonde.fullPivLu().inverse();
}

namespace {

// Powers 0..degree of a coordinate.
inline std::array<double, 8> powers(double v, int degree) {
  std::array<double, 8> out{};
  out[0] = 1.0;
  for (int i = 1; i <= degree; ++i) out[i] = out[i - 1] * v;
  return out;
}

}  // namespace

void LagrangeTriangle::evaluate(RefPoint p, std::span<double> values) const {
  assert(static_cast<int>(values.size()) >= size_);
  const auto px = powers(p.xi, degree_);
  const auto py = powers(p.eta, degree_);
  std::array<double, 36> mono{};
  for (int k = 0; k < size_; ++k) mono[k] = px[exponents_[k].first] * py[exponents_[k].second];
  for (int i = 0; i < size_; ++i) {
    double s = 0.0;
    for (int k = 0; k < size_; ++k) s += coeffs_(k, i) * mono[k];
    values[i] = s;
  }
}

void LagrangeTriangle::evaluate_gradients(RefPoint p, std::span<double> d_xi,
                                          std::span<double> d_eta) const {
  const auto px = powers(p.xi, degree_);
  const auto py = powers(p.eta, degree_);
  std::array<double, 36> mx{}, my{};
  for (int k = 0; k < size_; ++k) {
    const auto [a, b] = exponents_[k];
    mx[k] = a > 0 ? a * px[a - 1] * py[b] : 0.0;
    my[k] = b > 0 ? b * px[a] * py[b - 1] : 0.0;
  }
  for (int i = 0; i < size_; ++i) {
    double sx = 0.0, sy = 0.0;
    for (int k = 0; k < size_; ++k) {
      sx += coeffs_(k, i) * mx[k];
      sy += coeffs_(k, i) * my[k];
    }
    d_xi[i] = sx;
    d_eta[i] = sy;
  }
}

}  // namespace curvebem
