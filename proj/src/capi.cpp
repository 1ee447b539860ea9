#include "curvebem/curvebem.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "curvebem/errors.hpp"
#include "curvebem/harness.hpp"
#include "curvebem/solve.hpp"

struct curvebem_config {
  curvebem::StudyConfig config;
};

struct curvebem_report {
  curvebem::ConvergenceReport report;
};

namespace {

thread_local std::string last_error;

curvebem_status fail(curvebem_status status, const std::string& message) {
  last_error = message;
  return status;
}

template <typename F>
curvebem_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return CURVEBEM_OK;
  } catch (const curvebem::Error& e) {
    return fail(static_cast<curvebem_status>(static_cast<int>(e.code())), e.what());
  } catch (const std::bad_alloc&) {
    return fail(CURVEBEM_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(CURVEBEM_ERR_UNKNOWN, e.what());
  }
}

bool equals(const char* a, const char* b) { return std::strcmp(a, b) == 0; }

std::ofstream open_output(const char* path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw curvebem::Error(curvebem::ErrorCode::io_error, std::string("cannot open '") + path + "' for writing");
  return out;
}

void check_written(std::ofstream& out, const char* path) {
  out.flush();
  if (!out) throw curvebem::Error(curvebem::ErrorCode::io_error, std::string("failed writing '") + path + "'");
}

template <typename Scalar>
void dump(const curvebem::StudyConfig& c, std::shared_ptr<const curvebem::FeSpace> space,
          const curvebem::Field<Scalar>& data, const char* matrix_path, const char* density_path) {
  using namespace curvebem;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const OperatorSpec spec = study_operator(c);
  const SystemMatrix system = assemble_operator(spec, *space, c.assembly);
  if (matrix_path) {
    auto out = open_output(matrix_path);
    write_matrix_binary(system, out);
    check_written(out, matrix_path);
  }
  if (density_path) {
    const Matrix& A = std::get<Matrix>(system);
    const auto b = assemble_rhs<Scalar>(spec, *space, data);
    const MassPreconditioner preconditioner(mass_matrix(*space));
    Density<Scalar> density{space, {}};
    try {
      density.coefficients = gmres_solve<Scalar>(A, b, &preconditioner, {c.gmres_tolerance, c.gmres_max_iterations}).solution;
    } catch (const NotConvergedError&) {
      density.coefficients = dense_solve<Scalar>(A, b).solution;
    }
    auto out = open_output(density_path);
    write_density_csv(density, out);
    check_written(out, density_path);
  }
}

}  // namespace

extern "C" {

const char* curvebem_version(void) { return "1.0.0"; }

const char* curvebem_last_error(void) { return last_error.c_str(); }

curvebem_status curvebem_config_create(curvebem_config** out) {
  if (!out) return fail(CURVEBEM_ERR_INVALID_ARGUMENT, "null output pointer");
  return guarded([&] { *out = new curvebem_config(); });
}

void curvebem_config_destroy(curvebem_config* config) { delete config; }

curvebem_status curvebem_config_set_string(curvebem_config* config, const char* key, const char* value) {
  using namespace curvebem;
  if (!config || !key || !value) return fail(CURVEBEM_ERR_INVALID_ARGUMENT, "null argument");
  StudyConfig& c = config->config;
  auto bad = [&] { return fail(CURVEBEM_ERR_INVALID_ARGUMENT, std::string("invalid value '") + value + "' for " + key); };
  if (equals(key, "geometry")) {
    if (!equals(value, "sphere") && !equals(value, "bean")) return bad();
    c.geometry = value;
  } else if (equals(key, "equation")) {
    if (equals(value, "laplace")) c.equation = Equation::laplace;
    else if (equals(value, "helmholtz")) c.equation = Equation::helmholtz;
    else return bad();
  } else if (equals(key, "formulation")) {
    if (equals(value, "sl")) c.formulation = Formulation::single_layer;
    else if (equals(value, "dl")) c.formulation = Formulation::double_layer;
    else if (equals(value, "cfie")) c.formulation = Formulation::cfie;
    else return bad();
  } else if (equals(key, "normal")) {
    if (equals(value, "element")) c.normal = NormalChoice::element;
    else if (equals(value, "interpolated")) c.normal = NormalChoice::interpolated;
    else return bad();
  } else if (equals(key, "reference")) {
    if (equals(value, "analytic")) c.reference = ReferenceKind::analytic;
    else if (equals(value, "self")) c.reference = ReferenceKind::self;
    else return bad();
  } else if (equals(key, "harmonic")) {
    if (equals(value, "x1")) c.harmonic = HarmonicTest::x1;
    else if (equals(value, "x1x2")) c.harmonic = HarmonicTest::x1x2;
    else if (equals(value, "r2")) c.harmonic = HarmonicTest::r2_harmonic;
    else return bad();
  } else {
    return fail(CURVEBEM_ERR_INVALID_ARGUMENT, std::string("unknown string key '") + key + "'");
  }
  last_error.clear();
  return CURVEBEM_OK;
}

curvebem_status curvebem_config_set_int(curvebem_config* config, const char* key, int value) {
  if (!config || !key) return fail(CURVEBEM_ERR_INVALID_ARGUMENT, "null argument");
  auto& c = config->config;
  if (equals(key, "m")) c.m = value;
  else if (equals(key, "order")) c.order = value;
  else if (equals(key, "level_min")) c.level_min = value;
  else if (equals(key, "level_max")) c.level_max = value;
  else if (equals(key, "reference_m")) c.reference_m = value;
  else if (equals(key, "reference_order")) c.reference_order = value;
  else if (equals(key, "max_iterations")) c.gmres_max_iterations = value;
  else if (equals(key, "threads")) c.assembly.threads = value;
  else if (equals(key, "dof_cap")) c.dof_cap = value;
  else if (equals(key, "compare_dense")) c.compare_dense = value != 0;
  else if (equals(key, "singular_order")) c.assembly.quadrature.singular_order = value;
  else if (equals(key, "regular_degree")) c.assembly.quadrature.regular_degree = value;
  else return fail(CURVEBEM_ERR_INVALID_ARGUMENT, std::string("unknown integer key '") + key + "'");
  last_error.clear();
  return CURVEBEM_OK;
}

curvebem_status curvebem_config_set_double(curvebem_config* config, const char* key, double value) {
  if (!config || !key) return fail(CURVEBEM_ERR_INVALID_ARGUMENT, "null argument");
  if (!std::isfinite(value)) return fail(CURVEBEM_ERR_INVALID_ARGUMENT, std::string("non-finite value for ") + key);
  auto& c = config->config;
  if (equals(key, "k")) c.k = value;
  else if (equals(key, "eta")) c.eta = value;
  else if (equals(key, "tolerance")) c.gmres_tolerance = value;
  else return fail(CURVEBEM_ERR_INVALID_ARGUMENT, std::string("unknown real key '") + key + "'");
  last_error.clear();
  return CURVEBEM_OK;
}

curvebem_status curvebem_config_set_eval_point(curvebem_config* config, double x, double y, double z) {
  if (!config) return fail(CURVEBEM_ERR_INVALID_ARGUMENT, "null argument");
  if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z))
    return fail(CURVEBEM_ERR_INVALID_ARGUMENT, "non-finite evaluation point");
  config->config.eval_point = curvebem::Vec3(x, y, z);
  last_error.clear();
  return CURVEBEM_OK;
}

curvebem_status curvebem_config_validate(const curvebem_config* config) {
  if (!config) return fail(CURVEBEM_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { curvebem::resolve_config(config->config); });
}

curvebem_status curvebem_study_run(const curvebem_config* config, curvebem_report** out) {
  if (!config || !out) return fail(CURVEBEM_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] { *out = new curvebem_report{curvebem::run_convergence(config->config)}; });
}

void curvebem_report_destroy(curvebem_report* report) { delete report; }

int curvebem_report_num_rows(const curvebem_report* report) {
  return report ? static_cast<int>(report->report.rows.size()) : 0;
}

curvebem_status curvebem_report_row(const curvebem_report* report, int index, curvebem_level_row* out) {
  if (!report || !out) return fail(CURVEBEM_ERR_INVALID_ARGUMENT, "null argument");
  if (index < 0 || index >= curvebem_report_num_rows(report)) return fail(CURVEBEM_ERR_INVALID_ARGUMENT, "row index out of range");
  const auto& r = report->report.rows[index];
  *out = curvebem_level_row{};
  out->level = r.level;
  out->h = r.h;
  out->dofs = r.dofs;
  out->error = r.error;
  out->has_eoc = r.eoc.has_value();
  out->eoc = r.eoc.value_or(0.0);
  out->iterations = r.iterations;
  out->seconds = r.seconds;
  out->value_re = r.value.real();
  out->value_im = r.value.imag();
  out->true_residual = r.true_residual;
  out->has_dense_difference = r.dense_difference.has_value();
  out->dense_difference = r.dense_difference.value_or(0.0);
  out->dense_fallback = r.dense_fallback;
  out->failed = !r.failure.empty();
  last_error.clear();
  return CURVEBEM_OK;
}

int curvebem_report_failed(const curvebem_report* report) { return report && report->report.failed() ? 1 : 0; }

curvebem_status curvebem_report_reference(const curvebem_report* report, double* re, double* im) {
  if (!report || !re || !im) return fail(CURVEBEM_ERR_INVALID_ARGUMENT, "null argument");
  *re = report->report.reference_value.real();
  *im = report->report.reference_value.imag();
  return CURVEBEM_OK;
}

int curvebem_report_num_warnings(const curvebem_report* report) {
  return report ? static_cast<int>(report->report.warnings.size()) : 0;
}

const char* curvebem_report_warning(const curvebem_report* report, int index) {
  if (!report || index < 0 || index >= curvebem_report_num_warnings(report)) return nullptr;
  return report->report.warnings[index].c_str();
}

curvebem_status curvebem_report_write_csv(const curvebem_report* report, const char* path) {
  if (!report || !path) return fail(CURVEBEM_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    auto out = open_output(path);
    curvebem::write_report_csv(report->report, out);
    check_written(out, path);
  });
}

curvebem_status curvebem_dump_level(const curvebem_config* config, int level, const char* matrix_path,
                                    const char* density_path) {
  using namespace curvebem;
  if (!config) return fail(CURVEBEM_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    StudyConfig c = config->config;
    // validated as a self-reference study so that any geometry is accepted
    c.reference = ReferenceKind::self;
    c.level_min = level;
    c.level_max = level + 1;
    c = resolve_config(c);
    auto surface = std::make_shared<const Surface>(Surface::from_name(c.geometry, {}));
    auto mesh = std::make_shared<const CurvedMesh>(build_curved_mesh(surface, c.order, level));
    auto space = build_space(mesh, c.m);
    if (space->num_dofs() > c.dof_cap) throw ConfigError("level exceeds the DOF cap");
    if (c.equation == Equation::laplace) {
      dump<double>(c, space, laplace_harmonic_test(c.harmonic).boundary, matrix_path, density_path);
    } else {
      const PlaneWave incident(*c.k, Vec3(1.0, 0.0, 0.0));
      dump<Complex>(c, space, Field<Complex>([incident](const Vec3& x) { return -incident(x); }), matrix_path, density_path);
    }
  });
}

curvebem_status curvebem_geometry_study(const char* geometry, int order, int level_min, int level_max,
                                        const char* csv_path) {
  using namespace curvebem;
  if (!geometry || !csv_path) return fail(CURVEBEM_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    auto surface = std::make_shared<const Surface>(Surface::from_name(geometry, {}));
    const auto rows = geometry_study(surface, order, level_min, level_max);
    auto out = open_output(csv_path);
    write_geometry_csv(rows, out);
    check_written(out, csv_path);
  });
}

curvebem_status curvebem_export_mesh(const char* geometry, int order, int level, const char* json_path) {
  using namespace curvebem;
  if (!geometry || !json_path) return fail(CURVEBEM_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    if (order < 1 || order > 4) throw ConfigError("geometric order must lie in 1..4");
    if (level < 0 || level > 8) throw ConfigError("level must lie in 0..8");
    auto surface = std::make_shared<const Surface>(Surface::from_name(geometry, {}));
    const CurvedMesh mesh = build_curved_mesh(surface, order, level);
    auto out = open_output(json_path);
    out << mesh_to_json(mesh);
    check_written(out, json_path);
  });
}

}  // extern "C"
