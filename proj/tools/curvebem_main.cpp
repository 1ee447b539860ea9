#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "curvebem/curvebem.h"

namespace {

constexpr int kExitSolver = 2;
constexpr int kExitConfig = 3;

int exit_code(curvebem_status status) {
  switch (status) {
    case CURVEBEM_OK: return 0;
    case CURVEBEM_ERR_INVALID_ARGUMENT:
    case CURVEBEM_ERR_IO: return kExitConfig;
    default: return kExitSolver;
  }
}

int report_failure(curvebem_status status) {
  std::fprintf(stderr, "curvebem: %s\n", curvebem_last_error());
  return exit_code(status);
}

bool parse_levels(const std::string& text, int& a, int& b) {
  const auto dots = text.find("..");
  try {
    if (dots == std::string::npos) {
      a = b = std::stoi(text);
    } else {
      a = std::stoi(text.substr(0, dots));
      b = std::stoi(text.substr(dots + 2));
    }
  } catch (const std::exception&) {
    return false;
  }
  return a >= 0 && b >= a;
}

bool parse_point(const std::string& text, double p[3]) {
  std::istringstream in(text);
  std::string part;
  int i = 0;
  while (std::getline(in, part, ',')) {
    if (i == 3) return false;
    try {
      std::size_t used = 0;
      p[i++] = std::stod(part, &used);
      if (used != part.size()) return false;
    } catch (const std::exception&) {
      return false;
    }
  }
  return i == 3;
}

struct StudyArgs {
  std::string geometry = "sphere", equation = "laplace", formulation = "sl", normal = "element";
  std::string reference = "analytic", harmonic = "x1", levels = "1..3", eval_point, out;
  std::string dump_matrix, dump_density;
  double k = 0.0, eta = 0.0, tolerance = 1e-12;
  int m = 0, order = 1, max_iterations = 1000, reference_m = 3, reference_order = 4;
  int singular_order = -1, regular_degree = -1;
  bool no_dense_check = false;
};

class Config {
 public:
  Config() { status_ = curvebem_config_create(&handle_); }
  ~Config() { curvebem_config_destroy(handle_); }
  Config(const Config&) = delete;
  Config& operator=(const Config&) = delete;
  curvebem_config* get() const { return handle_; }
  curvebem_status status() const { return status_; }

  void str(const char* key, const std::string& value) { step(curvebem_config_set_string(handle_, key, value.c_str())); }
  void num(const char* key, int value) { step(curvebem_config_set_int(handle_, key, value)); }
  void real(const char* key, double value) { step(curvebem_config_set_double(handle_, key, value)); }
  void point(const double p[3]) { step(curvebem_config_set_eval_point(handle_, p[0], p[1], p[2])); }

 private:
  void step(curvebem_status s) {
    if (status_ == CURVEBEM_OK) status_ = s;
  }
  curvebem_config* handle_ = nullptr;
  curvebem_status status_ = CURVEBEM_OK;
};

int run_study(const StudyArgs& a, const CLI::App& cmd) {
  int level_min = 0, level_max = 0;
  if (!parse_levels(a.levels, level_min, level_max)) {
    std::fprintf(stderr, "curvebem: --levels expects a..b, got '%s'\n", a.levels.c_str());
    return kExitConfig;
  }
  Config cfg;
  cfg.str("geometry", a.geometry);
  cfg.str("equation", a.equation);
  cfg.str("formulation", a.formulation);
  cfg.str("normal", a.normal);
  cfg.str("reference", a.reference);
  cfg.str("harmonic", a.harmonic);
  cfg.num("m", a.m);
  cfg.num("order", a.order);
  cfg.num("level_min", level_min);
  cfg.num("level_max", level_max);
  cfg.num("reference_m", a.reference_m);
  cfg.num("reference_order", a.reference_order);
  cfg.num("max_iterations", a.max_iterations);
  cfg.num("compare_dense", a.no_dense_check ? 0 : 1);
  cfg.num("singular_order", a.singular_order);
  cfg.num("regular_degree", a.regular_degree);
  cfg.real("tolerance", a.tolerance);
  if (cmd.count("--k")) cfg.real("k", a.k);
  if (cmd.count("--eta")) cfg.real("eta", a.eta);
  if (!a.eval_point.empty()) {
    double p[3];
    if (!parse_point(a.eval_point, p)) {
      std::fprintf(stderr, "curvebem: --eval-point expects x,y,z, got '%s'\n", a.eval_point.c_str());
      return kExitConfig;
    }
    cfg.point(p);
  }
  if (cfg.status() != CURVEBEM_OK) return report_failure(cfg.status());
  if (const auto s = curvebem_config_validate(cfg.get()); s != CURVEBEM_OK) return report_failure(s);

  curvebem_report* report = nullptr;
  if (const auto s = curvebem_study_run(cfg.get(), &report); s != CURVEBEM_OK) return report_failure(s);
  for (int i = 0; i < curvebem_report_num_warnings(report); ++i)
    std::fprintf(stderr, "warning: %s\n", curvebem_report_warning(report, i));
  int code = 0;
  if (const auto s = curvebem_report_write_csv(report, a.out.c_str()); s != CURVEBEM_OK) code = report_failure(s);

  double re = 0.0, im = 0.0;
  curvebem_report_reference(report, &re, &im);
  std::fprintf(stderr, "reference value %.15e %+.15ei\n", re, im);
  for (int i = 0; i < curvebem_report_num_rows(report); ++i) {
    curvebem_level_row row;
    curvebem_report_row(report, i, &row);
    std::fprintf(stderr, "level %d  dofs %6d  error %.3e", row.level, row.dofs, row.error);
    if (row.has_eoc) std::fprintf(stderr, "  eoc %5.2f", row.eoc);
    std::fprintf(stderr, "  iters %d  true residual %.1e", row.iterations, row.true_residual);
    if (row.has_dense_difference) std::fprintf(stderr, "  |gmres-dense| %.1e", row.dense_difference);
    std::fprintf(stderr, "  %.1fs\n", row.seconds);
  }
  const bool failed = curvebem_report_failed(report);
  curvebem_report_destroy(report);
  if (code == 0 && (!a.dump_matrix.empty() || !a.dump_density.empty())) {
    const auto s = curvebem_dump_level(cfg.get(), level_max, a.dump_matrix.empty() ? nullptr : a.dump_matrix.c_str(),
                                       a.dump_density.empty() ? nullptr : a.dump_density.c_str());
    if (s != CURVEBEM_OK) code = report_failure(s);
  }
  if (code == 0 && failed) code = kExitSolver;
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Curved-mesh Galerkin BEM convergence studies"};
  app.require_subcommand(1);

  StudyArgs a;
  auto* study = app.add_subcommand("study", "pointwise convergence study over a range of refinement levels");
  study->add_option("--geometry", a.geometry)->check(CLI::IsMember({"sphere", "bean"}));
  study->add_option("--equation", a.equation)->check(CLI::IsMember({"laplace", "helmholtz"}));
  study->add_option("--formulation", a.formulation)->check(CLI::IsMember({"sl", "dl", "cfie"}));
  study->add_option("--k", a.k, "wavenumber (default pi)");
  study->add_option("--eta", a.eta, "CFIE coupling (default k)");
  study->add_option("--m", a.m, "density degree")->check(CLI::Range(0, 3));
  study->add_option("--order", a.order, "geometric order")->check(CLI::Range(1, 4));
  study->add_option("--normal", a.normal)->check(CLI::IsMember({"element", "interpolated"}));
  study->add_option("--levels", a.levels, "refinement levels a..b");
  study->add_option("--eval-point", a.eval_point, "x,y,z");
  study->add_option("--reference", a.reference)->check(CLI::IsMember({"analytic", "self"}));
  study->add_option("--harmonic", a.harmonic, "Laplace data")->check(CLI::IsMember({"x1", "x1x2", "r2"}));
  study->add_option("--reference-m", a.reference_m)->check(CLI::Range(0, 3));
  study->add_option("--reference-order", a.reference_order)->check(CLI::Range(1, 4));
  study->add_option("--tol", a.tolerance, "GMRES tolerance");
  study->add_option("--max-iterations", a.max_iterations);
  study->add_option("--singular-order", a.singular_order, "override the singular quadrature order");
  study->add_option("--regular-degree", a.regular_degree, "override the regular quadrature degree");
  study->add_flag("--no-dense-check", a.no_dense_check, "skip the dense cross-check solve");
  study->add_option("--dump-matrix", a.dump_matrix, "write the finest system matrix (binary)");
  study->add_option("--dump-density", a.dump_density, "write the finest density (CSV)");
  study->add_option("--out", a.out, "CSV report path")->required();

  std::string g_geometry = "sphere", g_levels = "1..4", g_out;
  int g_order = 1;
  auto* geom = app.add_subcommand("geom-study", "geometric error suprema and rates");
  geom->add_option("--geometry", g_geometry)->check(CLI::IsMember({"sphere", "bean"}));
  geom->add_option("--order", g_order)->check(CLI::Range(1, 4));
  geom->add_option("--levels", g_levels);
  geom->add_option("--out", g_out)->required();

  std::string e_geometry = "sphere", e_out;
  int e_order = 1, e_level = 0;
  auto* exp = app.add_subcommand("export-mesh", "write a curved mesh as JSON");
  exp->add_option("--geometry", e_geometry)->check(CLI::IsMember({"sphere", "bean"}));
  exp->add_option("--order", e_order)->check(CLI::Range(1, 4));
  exp->add_option("--level", e_level)->check(CLI::Range(0, 8));
  exp->add_option("--out", e_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  if (*study) return run_study(a, *study);
  if (*geom) {
    int lo = 0, hi = 0;
    if (!parse_levels(g_levels, lo, hi)) {
      std::fprintf(stderr, "curvebem: --levels expects a..b, got '%s'\n", g_levels.c_str());
      return kExitConfig;
    }
    const auto s = curvebem_geometry_study(g_geometry.c_str(), g_order, lo, hi, g_out.c_str());
    return s == CURVEBEM_OK ? 0 : report_failure(s);
  }
  const auto s = curvebem_export_mesh(e_geometry.c_str(), e_order, e_level, e_out.c_str());
  return s == CURVEBEM_OK ? 0 : report_failure(s);
}
