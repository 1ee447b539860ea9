#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <variant>

#include <Eigen/Core>

#include "curvebem/fe_space.hpp"
#include "curvebem/quadrature.hpp"

namespace curvebem {

enum class Equation { laplace, helmholtz };
enum class Formulation { single_layer, double_layer, cfie };
enum class NormalChoice { element, interpolated };

/// Which boundary integral operator to discretise.
///
/// Laplace (interior):   S0 p = f,  (I/2 - D0) p = f.
/// Helmholtz (exterior): S p = f,   (I/2 + D) p = f,  (I/2 + D - i eta S) p = f.
class OperatorSpec {
 public:
  /// Validates the combination; `coupling` defaults to k for the CFIE.
  static OperatorSpec make(Equation equation, Formulation formulation,
                           std::optional<double> wavenumber = std::nullopt,
                           std::optional<double> coupling = std::nullopt,
                           NormalChoice normal = NormalChoice::element);

  Equation equation() const { return equation_; }
  Formulation formulation() const { return formulation_; }
  double wavenumber() const { return wavenumber_.value_or(0.0); }
  std::optional<double> coupling() const { return coupling_; }
  NormalChoice normal() const { return normal_; }
  bool is_complex() const { return equation_ == Equation::helmholtz; }

  /// Sign of the identity term: +1 for second-kind equations, 0 otherwise.
  double identity_sign() const;
  /// Sign of the double-layer operator: -1 (Laplace), +1 (Helmholtz), 0 for SL.
  double double_layer_sign() const;
  /// Factor of the single-layer operator: 1 for SL, -i eta for CFIE, 0 for DL.
  Complex single_layer_factor() const;

  std::string describe() const;

 private:
  OperatorSpec() = default;
  Equation equation_ = Equation::laplace;
  Formulation formulation_ = Formulation::single_layer;
  std::optional<double> wavenumber_;
  std::optional<double> coupling_;
  NormalChoice normal_ = NormalChoice::element;
};

/// Kernel of the formulation (1/(4 pi) included); for double layers the
/// normal is taken at y. Throws on x == y.
Complex kernel_eval(const OperatorSpec& spec, const Vec3& x, const Vec3& y, const Vec3& n_y);

using RealMatrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;
/// Dense, column-major system matrix: real for Laplace, complex for Helmholtz.
using SystemMatrix = std::variant<RealMatrix, ComplexMatrix>;

struct AssemblyOptions {
  QuadratureOptions quadrature;
  int threads = 0;  ///< 0: CURVEBEM_THREADS or hardware concurrency
};

/// Dense mass matrix.
RealMatrix assemble_mass(const FeSpace& space);

/// Galerkin matrix A_ij = b_h(phi_j, phi_i) over the curved mesh.
SystemMatrix assemble_operator(const OperatorSpec& spec, const FeSpace& space,
                               const AssemblyOptions& options = {});

/// Moments (phi_i, D0 1) of the Laplace double layer applied to the
/// constant density, integrated without the density-difference splitting.
/// On a closed surface D0 1 = -1/2, so this approaches -M 1 / 2.
Eigen::VectorXd laplace_double_layer_moments(const FeSpace& space, const AssemblyOptions& options = {});

/// Moment vector (f_h, phi_i) with f_h the L2 projection of f.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> assemble_rhs(const OperatorSpec& spec, const FeSpace& space,
                                                      const Field<Scalar>& f);

/// Binary dump: u64 rows, u64 cols, u8 scalar tag (0 real64, 1 complex128),
/// then column-major entries, little-endian.
void write_matrix_binary(const SystemMatrix& matrix, std::ostream& out);
SystemMatrix read_matrix_binary(std::istream& in);

/// Thread count from CURVEBEM_THREADS (when set) capped by the hardware.
int default_thread_count();

}  // namespace curvebem
