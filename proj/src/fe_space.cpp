#include "curvebem/fe_space.hpp"

#include <algorithm>
#include <iomanip>
#include <ostream>

#include <Eigen/SparseCholesky>

#include "curvebem/errors.hpp"
#include "curvebem/quadrature.hpp"

namespace curvebem {

FeSpace::FeSpace(std::shared_ptr<const CurvedMesh> mesh, int degree)
    : mesh_(std::move(mesh)), degree_(degree), basis_(degree) {
  if (degree < 0 || degree > 3) throw ConfigError("density degree must lie in [0, 3]");
  const CurvedMesh& m = *mesh_;
  std::vector<std::array<int, 3>> triangles;
  std::vector<std::array<int, 3>> element_edges;
  triangles.reserve(m.num_elements());
  for (int e = 0; e < m.num_elements(); ++e) {
    triangles.push_back(m.element_vertices(e));
    element_edges.push_back(m.element_edges(e));
  }
  NodeNumbering numbering = number_lagrange_nodes(m.num_vertices(), triangles, m.edges(), element_edges, degree);
  num_dofs_ = numbering.count;
  element_dofs_ = std::move(numbering.element_nodes);
}

std::shared_ptr<const FeSpace> build_space(std::shared_ptr<const CurvedMesh> mesh, int degree) {
  return std::make_shared<const FeSpace>(std::move(mesh), degree);
}

template <typename Scalar>
Scalar evaluate_density(const Density<Scalar>& density, int element, RefPoint p) {
  const FeSpace& space = *density.space;
  std::array<double, 10> phi{};
  space.basis().evaluate(p, phi);
  const auto& dofs = space.element_dofs(element);
  Scalar value{0};
  for (std::size_t i = 0; i < dofs.size(); ++i) value += phi[i] * density.coefficients[dofs[i]];
  return value;
}

int mass_quadrature_degree(const FeSpace& space) {
  return std::max(2, 2 * space.degree() + 2 * space.mesh().order());
}

namespace {

// Quadrature points of one element: weights already include the Jacobian.
struct ElementSamples {
  std::vector<Vec3> points;
  std::vector<double> weights;
  std::vector<std::array<double, 10>> phi;
};

ElementSamples sample_element(const FeSpace& space, int e, const TriangleRule& rule) {
  ElementSamples s;
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const ElementFrame f = element_frame_fast(space.mesh(), e, rule.points[q]);
    s.points.push_back(f.point);
    s.weights.push_back(rule.weights[q] * f.jacobian);
    std::array<double, 10> phi{};
    space.basis().evaluate(rule.points[q], phi);
    s.phi.push_back(phi);
  }
  return s;
}

}  // namespace

Eigen::SparseMatrix<double> mass_matrix(const FeSpace& space) {
  const TriangleRule rule = gauss_triangle(mass_quadrature_degree(space));
  const int nloc = space.local_size();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(space.mesh().num_elements()) * nloc * nloc);
  for (int e = 0; e < space.mesh().num_elements(); ++e) {
    const ElementSamples s = sample_element(space, e, rule);
    const auto& dofs = space.element_dofs(e);
    for (int i = 0; i < nloc; ++i)
      for (int j = 0; j < nloc; ++j) {
        double v = 0.0;
        for (std::size_t q = 0; q < s.weights.size(); ++q) v += s.weights[q] * s.phi[q][i] * s.phi[q][j];
        triplets.emplace_back(dofs[i], dofs[j], v);
      }
  }
  Eigen::SparseMatrix<double> m(space.num_dofs(), space.num_dofs());
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> load_vector(const FeSpace& space, const Field<Scalar>& f,
                                                     int extra_degree) {
  const TriangleRule rule = gauss_triangle(std::min(30, mass_quadrature_degree(space) + extra_degree));
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> b = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(space.num_dofs());
  for (int e = 0; e < space.mesh().num_elements(); ++e) {
    const ElementSamples s = sample_element(space, e, rule);
    const auto& dofs = space.element_dofs(e);
    for (std::size_t q = 0; q < s.weights.size(); ++q) {
      const Scalar fw = f(s.points[q]) * s.weights[q];
      for (std::size_t i = 0; i < dofs.size(); ++i) b[dofs[i]] += fw * s.phi[q][i];
    }
  }
  return b;
}

template <typename Scalar>
Density<Scalar> l2_project(std::shared_ptr<const FeSpace> space, const Field<Scalar>& f) {
  const Eigen::SparseMatrix<double> m = mass_matrix(*space);
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> cholesky(m);
  if (cholesky.info() != Eigen::Success) throw Error(ErrorCode::internal, "mass matrix is not positive definite");
  const auto b = load_vector<Scalar>(*space, f);
  Density<Scalar> out{space, {}};
  if constexpr (std::is_same_v<Scalar, double>) {
    out.coefficients = cholesky.solve(b);
  } else {
    Eigen::VectorXd re = cholesky.solve(Eigen::VectorXd(b.real()));
    Eigen::VectorXd im = cholesky.solve(Eigen::VectorXd(b.imag()));
    out.coefficients = re.template cast<Complex>() + Complex(0.0, 1.0) * im.template cast<Complex>();
  }
  return out;
}

template <typename Scalar>
double l2_error(const Density<Scalar>& density, const Field<Scalar>& f) {
  const FeSpace& space = *density.space;
  const TriangleRule rule = gauss_triangle(std::min(30, mass_quadrature_degree(space) + 6));
  double sum = 0.0;
  for (int e = 0; e < space.mesh().num_elements(); ++e) {
    const ElementSamples s = sample_element(space, e, rule);
    const auto& dofs = space.element_dofs(e);
    for (std::size_t q = 0; q < s.weights.size(); ++q) {
      Scalar v{0};
      for (std::size_t i = 0; i < dofs.size(); ++i) v += s.phi[q][i] * density.coefficients[dofs[i]];
      sum += s.weights[q] * std::norm(f(s.points[q]) - v);
    }
  }
  return std::sqrt(sum);
}

template <typename Scalar>
double l2_norm(const Density<Scalar>& density) {
  return l2_error<Scalar>(density, [](const Vec3&) { return Scalar{0}; });
}

template <typename Scalar>
void write_density_csv(const Density<Scalar>& density, std::ostream& out) {
  out << "dof,re,im\n" << std::setprecision(17);
  for (Eigen::Index i = 0; i < density.coefficients.size(); ++i) {
    const Complex v(density.coefficients[i]);
    out << i << ',' << v.real() << ',' << v.imag() << '\n';
  }
}

#define CURVEBEM_INSTANTIATE(S)                                                                        \
  template S evaluate_density<S>(const Density<S>&, int, RefPoint);                                    \
  template Eigen::Matrix<S, Eigen::Dynamic, 1> load_vector<S>(const FeSpace&, const Field<S>&, int);   \
  template Density<S> l2_project<S>(std::shared_ptr<const FeSpace>, const Field<S>&);                  \
  template double l2_error<S>(const Density<S>&, const Field<S>&);                                     \
  template double l2_norm<S>(const Density<S>&);                                                       \
  template void write_density_csv<S>(const Density<S>&, std::ostream&);

CURVEBEM_INSTANTIATE(double)
CURVEBEM_INSTANTIATE(Complex)
#undef CURVEBEM_INSTANTIATE

}  // namespace curvebem
