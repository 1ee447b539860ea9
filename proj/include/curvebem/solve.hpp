#pragma once

#include <memory>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "curvebem/types.hpp"

namespace curvebem {

enum class SolveMethod { dense, gmres };

template <typename Scalar>
struct SolveReport {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> solution;
  int iterations = 0;
  double residual = 0.0;       ///< preconditioned relative residual (GMRES) or true one (dense)
  double true_residual = 0.0;  ///< ||A x - b|| / ||b||
  SolveMethod method = SolveMethod::dense;
  std::vector<double> history;  ///< relative residual after each iteration
};

/// LU with partial pivoting. Throws SingularSystemError on a vanishing pivot.
template <typename Scalar>
SolveReport<Scalar> dense_solve(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& A,
                                const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& b);

/// Sparse Cholesky factorisation of a mass matrix, applied as M^{-1}.
class MassPreconditioner {
 public:
  explicit MassPreconditioner(const Eigen::SparseMatrix<double>& mass);
  ~MassPreconditioner();
  MassPreconditioner(MassPreconditioner&&) noexcept;
  MassPreconditioner& operator=(MassPreconditioner&&) noexcept;

  Eigen::VectorXd apply(const Eigen::VectorXd& r) const;
  Eigen::VectorXcd apply(const Eigen::VectorXcd& r) const;
  int size() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct GmresOptions {
  double tolerance = 1e-10;
  int max_iterations = 1000;
};

/// Left-preconditioned GMRES without restarts (modified Gram-Schmidt with
/// one reorthogonalisation pass). Without a preconditioner the identity is
/// used. Throws NotConvergedError carrying the residual history.
template <typename Scalar>
SolveReport<Scalar> gmres_solve(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& A,
                                const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& b,
                                const MassPreconditioner* preconditioner, const GmresOptions& options = {});

}  // namespace curvebem
