#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "curvebem/operators.hpp"
#include "curvebem/reference.hpp"

namespace curvebem {

enum class ReferenceKind { analytic, self };

struct StudyConfig {
  std::string geometry = "sphere";
  Equation equation = Equation::laplace;
  Formulation formulation = Formulation::single_layer;
  std::optional<double> k;    ///< Helmholtz only; defaults to pi
  std::optional<double> eta;  ///< CFIE only; defaults to k
  int m = 0;
  int order = 1;
  NormalChoice normal = NormalChoice::element;
  int level_min = 1;
  int level_max = 3;
  std::optional<Vec3> eval_point;  ///< Laplace (0.2, 0.1, 0.1), Helmholtz (1, 2, 3)
  ReferenceKind reference = ReferenceKind::analytic;
  HarmonicTest harmonic = HarmonicTest::x1;
  int reference_m = 3;
  int reference_order = 4;
  double gmres_tolerance = 1e-12;
  int gmres_max_iterations = 1000;
  bool compare_dense = true;
  int dof_cap = 20000;
  AssemblyOptions assembly;
};

/// Validates a config and fills defaults (k, eval point). Throws ConfigError.
StudyConfig resolve_config(const StudyConfig& config);
OperatorSpec study_operator(const StudyConfig& config);

struct LevelResult {
  int level = 0;
  double h = 0.0;
  int dofs = 0;
  double error = 0.0;  ///< NaN on a failed level
  std::optional<double> eoc;
  int iterations = 0;
  double seconds = 0.0;
  Complex value = 0.0;
  double true_residual = 0.0;
  std::optional<double> dense_difference;  ///< max |x_gmres - x_dense|
  bool dense_fallback = false;
  std::string failure;
};

struct ConvergenceReport {
  StudyConfig config;
  Complex reference_value = 0.0;
  std::vector<LevelResult> rows;
  std::vector<std::string> warnings;

  bool failed() const;
};

std::optional<double> estimated_order(double e_prev, double e_cur, double h_prev, double h_cur);

/// Pointwise convergence against the analytic solution.
ConvergenceReport run_study(const StudyConfig& config);
/// Reference from (reference_m, reference_order) on level_max; rows for
/// level_min .. level_max - 1.
ConvergenceReport self_convergence(const StudyConfig& config);
/// Dispatches on config.reference.
ConvergenceReport run_convergence(const StudyConfig& config);

/// CSV "level,h,dofs,error,eoc,iters,seconds".
void write_report_csv(const ConvergenceReport& report, std::ostream& out);

struct GeometryStudyRow {
  int level = 0;
  double h = 0.0;
  GeometricErrorReport errors;
  std::optional<double> jacobian_eoc, element_normal_eoc, interpolated_normal_eoc, distance_eoc;
};

std::vector<GeometryStudyRow> geometry_study(std::shared_ptr<const Surface> surface, int order, int level_min,
                                             int level_max);
void write_geometry_csv(const std::vector<GeometryStudyRow>& rows, std::ostream& out);

}  // namespace curvebem
