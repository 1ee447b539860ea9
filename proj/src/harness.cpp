#include "curvebem/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>

#include "curvebem/errors.hpp"
#include "curvebem/solve.hpp"

namespace curvebem {

namespace {

int expected_dofs(int m, int level) {
  const long f = 20L << (2 * level);
  const long e = 30L << (2 * level);
  const long v = (10L << (2 * level)) + 2;
  const long n = m == 0 ? f : v + (m - 1) * e + (m - 1) * (m - 2) / 2 * f;
  return static_cast<int>(std::min<long>(n, std::numeric_limits<int>::max()));
}

struct LevelSolution {
  Complex value = 0.0;
  int iterations = 0;
  double true_residual = 0.0;
  std::optional<double> dense_difference;
  bool dense_fallback = false;
};

template <typename Scalar>
LevelSolution solve_and_evaluate(const StudyConfig& c, const OperatorSpec& spec, std::shared_ptr<const FeSpace> space,
                                 const Field<Scalar>& data) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Matrix A = std::get<Matrix>(assemble_operator(spec, *space, c.assembly));
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> b = assemble_rhs<Scalar>(spec, *space, data);
  const MassPreconditioner preconditioner(mass_matrix(*space));

  LevelSolution out;
  SolveReport<Scalar> report;
  try {
    report = gmres_solve<Scalar>(A, b, &preconditioner, {c.gmres_tolerance, c.gmres_max_iterations});
    out.iterations = report.iterations;
    if (c.compare_dense) {
      const SolveReport<Scalar> dense = dense_solve<Scalar>(A, b);
      out.dense_difference = (report.solution - dense.solution).cwiseAbs().maxCoeff();
    }
  } catch (const NotConvergedError& e) {
    out.iterations = static_cast<int>(e.residual_history().size()) - 1;
    report = dense_solve<Scalar>(A, b);
    out.dense_fallback = true;
  }
  out.true_residual = report.true_residual;
  const Density<Scalar> density{space, report.solution};
  out.value = evaluate_potential(spec, density, *c.eval_point);
  return out;
}

// Solve one (m, l, level) configuration and evaluate u_h at the point.
LevelSolution solve_level(const StudyConfig& c, const OperatorSpec& spec, std::shared_ptr<const CurvedMesh> mesh) {
  const auto space = build_space(mesh, c.m);
  if (c.equation == Equation::laplace) {
    return solve_and_evaluate<double>(c, spec, space, laplace_harmonic_test(c.harmonic).boundary);
  }
  const PlaneWave incident(*c.k, Vec3(1.0, 0.0, 0.0));
  const Field<Complex> data = [incident](const Vec3& x) { return -incident(x); };
  return solve_and_evaluate<Complex>(c, spec, space, data);
}

std::shared_ptr<const Surface> study_surface(const StudyConfig& c) {
  return std::make_shared<const Surface>(Surface::from_name(c.geometry, {}));
}

std::string format_double(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

// Runs levels in order; `reference` supplies u_ref.
void run_levels(ConvergenceReport& report, int level_min, int level_max) {
  const StudyConfig& c = report.config;
  const OperatorSpec spec = study_operator(c);
  const auto surface = study_surface(c);
  const double scale = std::abs(report.reference_value);
  if (scale == 0.0) report.warnings.push_back("reference value is zero; errors are absolute");

  for (int level = level_min; level <= level_max; ++level) {
    const int dofs = expected_dofs(c.m, level);
    if (dofs > c.dof_cap) {
      report.warnings.push_back("level " + std::to_string(level) + " needs " + std::to_string(dofs) +
                                " DOFs (cap " + std::to_string(c.dof_cap) + "); level range truncated");
      break;
    }
    LevelResult row;
    row.level = level;
    row.dofs = dofs;
    const auto start = std::chrono::steady_clock::now();
    try {
      const auto mesh = std::make_shared<const CurvedMesh>(build_curved_mesh(surface, c.order, level));
      row.h = mesh->h();
      const LevelSolution s = solve_level(c, spec, mesh);
      row.value = s.value;
      row.iterations = s.iterations;
      row.true_residual = s.true_residual;
      row.dense_difference = s.dense_difference;
      row.dense_fallback = s.dense_fallback;
      const double diff = std::abs(s.value - report.reference_value);
      row.error = scale > 0.0 ? diff / scale : diff;
      if (s.dense_fallback)
        report.warnings.push_back("level " + std::to_string(level) + ": GMRES did not converge, dense solution used");
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      row.error = std::numeric_limits<double>::quiet_NaN();
      row.failure = e.what();
      report.warnings.push_back("level " + std::to_string(level) + " failed: " + e.what());
    }
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!report.rows.empty()) {
      const LevelResult& prev = report.rows.back();
      if (prev.failure.empty() && row.failure.empty())
        row.eoc = estimated_order(prev.error, row.error, prev.h, row.h);
    }
    report.rows.push_back(row);
  }
}

void add_resonance_warning(ConvergenceReport& report) {
  const StudyConfig& c = report.config;
  if (c.equation != Equation::helmholtz || c.geometry != "sphere" || c.formulation == Formulation::cfie) return;
  const auto hits = sphere_dirichlet_resonances(*c.k);
  if (hits.empty()) return;
  std::string orders;
  for (int n : hits) orders += (orders.empty() ? "" : ",") + std::to_string(n);
  report.warnings.push_back("k = " + format_double(*c.k) +
                            " is an interior Dirichlet resonance of the unit sphere (j_n(k) ~ 0 for n = " + orders +
                            "); the density is not unique, the exterior field still is");
}

}  // namespace

bool ConvergenceReport::failed() const {
  for (const auto& r : rows)
    if (!r.failure.empty()) return true;
  return false;
}

std::optional<double> estimated_order(double e_prev, double e_cur, double h_prev, double h_cur) {
  if (!(e_prev > 0.0) || !(e_cur > 0.0) || !(h_prev > 0.0) || !(h_cur > 0.0) || h_prev == h_cur) return std::nullopt;
  return std::log(e_prev / e_cur) / std::log(h_prev / h_cur);
}

StudyConfig resolve_config(const StudyConfig& config) {
  StudyConfig c = config;
  if (c.geometry != "sphere" && c.geometry != "bean") throw ConfigError("unknown geometry '" + c.geometry + "'");
  if (c.m < 0 || c.m > 3) throw ConfigError("density degree m must lie in 0..3");
  if (c.order < 1 || c.order > 4) throw ConfigError("geometric order must lie in 1..4");
  if (c.level_min < 0 || c.level_max < c.level_min || c.level_max > 8) throw ConfigError("invalid level range");
  if (c.equation == Equation::helmholtz && !c.k) c.k = kPi;
  if (!c.eval_point)
    c.eval_point = c.equation == Equation::laplace ? Vec3(0.2, 0.1, 0.1) : Vec3(1.0, 2.0, 3.0);
  if (!(c.gmres_tolerance > 0.0) || c.gmres_max_iterations < 1) throw ConfigError("invalid GMRES settings");
  if (c.reference == ReferenceKind::analytic) {
    if (c.equation == Equation::helmholtz && c.geometry != "sphere")
      throw ConfigError("analytic Helmholtz reference exists only for the sphere; use --reference self");
    if (c.geometry == "sphere") {
      const double r = c.eval_point->norm();
      if (c.equation == Equation::laplace && r >= 1.0) throw ConfigError("Laplace evaluation point must lie inside the sphere");
      if (c.equation == Equation::helmholtz && r <= 1.0) throw ConfigError("Helmholtz evaluation point must lie outside the sphere");
    }
  } else {
    if (c.level_max <= c.level_min) throw ConfigError("self reference needs at least one level beyond the study levels");
    if (c.reference_m < 0 || c.reference_m > 3 || c.reference_order < 1 || c.reference_order > 4)
      throw ConfigError("invalid reference discretisation");
  }
  study_operator(c);  // validates equation/formulation/k/eta
  return c;
}

OperatorSpec study_operator(const StudyConfig& c) {
  return OperatorSpec::make(c.equation, c.formulation, c.equation == Equation::helmholtz ? c.k : std::nullopt, c.eta,
                            c.normal);
}

ConvergenceReport run_study(const StudyConfig& config) {
  ConvergenceReport report;
  report.config = resolve_config(config);
  if (report.config.reference != ReferenceKind::analytic) throw ConfigError("run_study needs an analytic reference");
  const StudyConfig& c = report.config;
  if (c.equation == Equation::laplace) {
    report.reference_value = laplace_harmonic_test(c.harmonic).exact(*c.eval_point);
  } else {
    report.reference_value = MieSeries(*c.k).scattered_field(*c.eval_point, Vec3(1.0, 0.0, 0.0));
  }
  add_resonance_warning(report);
  run_levels(report, c.level_min, c.level_max);
  return report;
}

ConvergenceReport self_convergence(const StudyConfig& config) {
  ConvergenceReport report;
  StudyConfig c = resolve_config(config);
  c.reference = ReferenceKind::self;
  while (c.level_max > c.level_min && expected_dofs(c.reference_m, c.level_max) > c.dof_cap) {
    report.warnings.push_back("reference level " + std::to_string(c.level_max) + " exceeds the DOF cap; lowered");
    --c.level_max;
  }
  if (c.level_max <= c.level_min) throw ConfigError("no level range left below the DOF cap for the self reference");
  report.config = c;
  add_resonance_warning(report);

  StudyConfig ref = c;
  ref.m = c.reference_m;
  ref.order = c.reference_order;
  const auto mesh = std::make_shared<const CurvedMesh>(build_curved_mesh(study_surface(ref), ref.order, ref.level_max));
  const LevelSolution s = solve_level(ref, study_operator(ref), mesh);
  report.reference_value = s.value;
  run_levels(report, c.level_min, c.level_max - 1);
  return report;
}

ConvergenceReport run_convergence(const StudyConfig& config) {
  return config.reference == ReferenceKind::self ? self_convergence(config) : run_study(config);
}

void write_report_csv(const ConvergenceReport& report, std::ostream& out) {
  out << "level,h,dofs,error,eoc,iters,seconds\n";
  char buf[256];
  for (const auto& r : report.rows) {
    std::string eoc;
    if (r.eoc) {
      std::snprintf(buf, sizeof buf, "%.4f", *r.eoc);
      eoc = buf;
    }
    std::snprintf(buf, sizeof buf, "%d,%.6e,%d,%.6e,%s,%d,%.3f\n", r.level, r.h, r.dofs, r.error, eoc.c_str(),
                  r.iterations, r.seconds);
    out << buf;
  }
}

std::vector<GeometryStudyRow> geometry_study(std::shared_ptr<const Surface> surface, int order, int level_min,
                                             int level_max) {
  if (order < 1 || order > 4) throw ConfigError("geometric order must lie in 1..4");
  if (level_min < 0 || level_max < level_min || level_max > 8) throw ConfigError("invalid level range");
  std::vector<GeometryStudyRow> rows;
  for (int level = level_min; level <= level_max; ++level) {
    const CurvedMesh mesh = build_curved_mesh(surface, order, level);
    GeometryStudyRow row;
    row.level = level;
    row.h = mesh.h();
    row.errors = geometric_error_report(mesh);
    if (!rows.empty()) {
      const auto& p = rows.back();
      row.jacobian_eoc = estimated_order(p.errors.jacobian, row.errors.jacobian, p.h, row.h);
      row.element_normal_eoc = estimated_order(p.errors.element_normal, row.errors.element_normal, p.h, row.h);
      row.interpolated_normal_eoc =
          estimated_order(p.errors.interpolated_normal, row.errors.interpolated_normal, p.h, row.h);
      row.distance_eoc = estimated_order(p.errors.distance, row.errors.distance, p.h, row.h);
    }
    rows.push_back(row);
  }
  return rows;
}

void write_geometry_csv(const std::vector<GeometryStudyRow>& rows, std::ostream& out) {
  out << "level,h,jacobian,jacobian_eoc,element_normal,element_normal_eoc,interpolated_normal,"
         "interpolated_normal_eoc,distance,distance_eoc,area\n";
  char buf[64];
  auto eoc = [&](const std::optional<double>& v) -> std::string {
    if (!v) return "";
    std::snprintf(buf, sizeof buf, "%.4f", *v);
    return buf;
  };
  auto sci = [&](double v) -> std::string {
    std::snprintf(buf, sizeof buf, "%.6e", v);
    return buf;
  };
  for (const auto& r : rows) {
    out << r.level << ',' << sci(r.h) << ',' << sci(r.errors.jacobian) << ',' << eoc(r.jacobian_eoc) << ','
        << sci(r.errors.element_normal) << ',' << eoc(r.element_normal_eoc) << ',' << sci(r.errors.interpolated_normal)
        << ',' << eoc(r.interpolated_normal_eoc) << ',' << sci(r.errors.distance) << ',' << eoc(r.distance_eoc) << ','
        << sci(r.errors.area) << '\n';
  }
}

}  // namespace curvebem
