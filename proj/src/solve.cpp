#include "curvebem/solve.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/LU>
#include <Eigen/SparseCholesky>

#include "curvebem/errors.hpp"

namespace curvebem {

namespace {

template <typename Scalar>
double relative_residual(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& A,
                         const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x,
                         const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& b) {
  const double nb = b.norm();
  const double nr = (A * x - b).norm();
  return nb > 0.0 ? nr / nb : nr;
}

double conj_if(double v) { return v; }
Complex conj_if(Complex v) { return std::conj(v); }

}  // namespace

template <typename Scalar>
SolveReport<Scalar> dense_solve(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& A,
                                const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& b) {
  if (A.rows() != A.cols() || A.rows() != b.size())
    throw ConfigError("dense_solve: dimension mismatch");
  SolveReport<Scalar> report;
  report.method = SolveMethod::dense;
  if (A.rows() == 0) return report;
  const Eigen::PartialPivLU<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> lu(A);
  const auto diag = lu.matrixLU().diagonal().cwiseAbs();
  const double largest = A.cwiseAbs().maxCoeff();
  if (!(diag.minCoeff() > largest * 1e-14 * static_cast<double>(A.rows())))
    throw SingularSystemError("matrix is numerically singular (vanishing pivot)");
  report.solution = lu.solve(b);
  if (!report.solution.allFinite()) throw SingularSystemError("LU solve produced non-finite values");
  report.true_residual = relative_residual(A, report.solution, b);
  report.residual = report.true_residual;
  report.history = {report.residual};
  return report;
}

struct MassPreconditioner::Impl {
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt;
  int n = 0;
};

MassPreconditioner::MassPreconditioner(const Eigen::SparseMatrix<double>& mass) : impl_(std::make_unique<Impl>()) {
  impl_->n = static_cast<int>(mass.rows());
  impl_->llt.compute(mass);
  if (impl_->llt.info() != Eigen::Success)
    throw Error(ErrorCode::internal, "Cholesky factorisation of the mass matrix failed");
}

MassPreconditioner::~MassPreconditioner() = default;
MassPreconditioner::MassPreconditioner(MassPreconditioner&&) noexcept = default;
MassPreconditioner& MassPreconditioner::operator=(MassPreconditioner&&) noexcept = default;

Eigen::VectorXd MassPreconditioner::apply(const Eigen::VectorXd& r) const { return impl_->llt.solve(r); }

Eigen::VectorXcd MassPreconditioner::apply(const Eigen::VectorXcd& r) const {
  const Eigen::VectorXd re = impl_->llt.solve(Eigen::VectorXd(r.real()));
  const Eigen::VectorXd im = impl_->llt.solve(Eigen::VectorXd(r.imag()));
  Eigen::VectorXcd z(r.size());
  z.real() = re;
  z.imag() = im;
  return z;
}

int MassPreconditioner::size() const { return impl_->n; }

template <typename Scalar>
SolveReport<Scalar> gmres_solve(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& A,
                                const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& b,
                                const MassPreconditioner* preconditioner, const GmresOptions& options) {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index n = A.rows();
  if (A.cols() != n || b.size() != n) throw ConfigError("gmres_solve: dimension mismatch");
  if (preconditioner && preconditioner->size() != n) throw ConfigError("gmres_solve: preconditioner size mismatch");
  auto precondition = [&](const Vector& v) -> Vector { return preconditioner ? preconditioner->apply(v) : v; };

  SolveReport<Scalar> report;
  report.method = SolveMethod::gmres;
  report.solution = Vector::Zero(n);
  const Vector r0 = precondition(b);
  const double beta = r0.norm();
  if (beta == 0.0) {
    report.history = {0.0};
    return report;
  }

  const int max_it = std::max(1, std::min<int>(options.max_iterations, static_cast<int>(n)));
  std::vector<Vector> basis;
  basis.reserve(max_it + 1);
  basis.push_back(r0 / beta);
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> H = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(max_it + 1, max_it);
  std::vector<double> cs(max_it);
  std::vector<Scalar> sn(max_it);
  Vector g = Vector::Zero(max_it + 1);
  g[0] = beta;
  report.history.push_back(1.0);

  int k = 0;
  bool converged = false;
  for (; k < max_it; ++k) {
    Vector w = precondition(A * basis[k]);
    for (int pass = 0; pass < 2; ++pass) {
      for (int j = 0; j <= k; ++j) {
        const Scalar h = basis[j].dot(w);  // conjugates the first argument
        H(j, k) += h;
        w -= h * basis[j];
      }
    }
    const double hnext = w.norm();
    H(k + 1, k) = hnext;
    for (int j = 0; j < k; ++j) {
      const Scalar a = H(j, k), c = H(j + 1, k);
      H(j, k) = cs[j] * a + sn[j] * c;
      H(j + 1, k) = -conj_if(sn[j]) * a + cs[j] * c;
    }
    const Scalar h1 = H(k, k), h2 = H(k + 1, k);
    const double t = std::sqrt(std::norm(h1) + std::norm(h2));
    if (std::abs(h1) == 0.0) {
      cs[k] = 0.0;
      sn[k] = Scalar(1.0);
      H(k, k) = h2;
    } else {
      const Scalar alpha = h1 / std::abs(h1);
      cs[k] = std::abs(h1) / t;
      sn[k] = alpha * conj_if(h2) / t;
      H(k, k) = alpha * t;
    }
    H(k + 1, k) = 0.0;
    g[k + 1] = -conj_if(sn[k]) * g[k];
    g[k] = cs[k] * g[k];
    const double rel = std::abs(g[k + 1]) / beta;
    report.history.push_back(rel);
    if (rel <= options.tolerance || hnext == 0.0) {
      ++k;
      converged = true;
      break;
    }
    basis.push_back(w / hnext);
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "GMRES did not reach " << options.tolerance << " within " << max_it << " iterations (residual "
        << report.history.back() << ")";
    throw NotConvergedError(msg.str(), report.history);
  }
  // back substitution on the k x k triangle
  Vector y = H.topLeftCorner(k, k).template triangularView<Eigen::Upper>().solve(g.head(k));
  for (int j = 0; j < k; ++j) report.solution += y[j] * basis[j];
  report.iterations = k;
  report.residual = report.history.back();
  report.true_residual = relative_residual(A, report.solution, b);
  return report;
}

template SolveReport<double> dense_solve<double>(const Eigen::MatrixXd&, const Eigen::VectorXd&);
template SolveReport<Complex> dense_solve<Complex>(const Eigen::MatrixXcd&, const Eigen::VectorXcd&);
template SolveReport<double> gmres_solve<double>(const Eigen::MatrixXd&, const Eigen::VectorXd&,
                                                 const MassPreconditioner*, const GmresOptions&);
template SolveReport<Complex> gmres_solve<Complex>(const Eigen::MatrixXcd&, const Eigen::VectorXcd&,
                                                   const MassPreconditioner*, const GmresOptions&);

}  // namespace curvebem
