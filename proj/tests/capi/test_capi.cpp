#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "curvebem/curvebem.h"

namespace fs = std::filesystem;

namespace {

struct Config {
  curvebem_config* ptr = nullptr;
  Config() { REQUIRE(curvebem_config_create(&ptr) == CURVEBEM_OK); }
  ~Config() { curvebem_config_destroy(ptr); }
};

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "curvebem_capi_test";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CURVEBEM_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("version and argument errors") {
  CHECK(std::string(curvebem_version()).size() > 0);
  CHECK(curvebem_config_create(nullptr) == CURVEBEM_ERR_INVALID_ARGUMENT);
  Config c;
  CHECK(curvebem_config_set_string(c.ptr, "geometry", "torus") == CURVEBEM_ERR_INVALID_ARGUMENT);
  CHECK(std::string(curvebem_last_error()).find("torus") != std::string::npos);
  CHECK(curvebem_config_set_int(c.ptr, "level_min", 3) == CURVEBEM_OK);
  CHECK(curvebem_config_set_int(c.ptr, "level_max", 2) == CURVEBEM_OK);
  CHECK(curvebem_config_validate(c.ptr) == CURVEBEM_ERR_INVALID_ARGUMENT);
  CHECK(curvebem_config_set_string(c.ptr, "formulation", "efie") == CURVEBEM_ERR_INVALID_ARGUMENT);
  CHECK(curvebem_config_set_int(c.ptr, "no_such_key", 1) == CURVEBEM_ERR_INVALID_ARGUMENT);
  CHECK(curvebem_config_set_double(c.ptr, "k", 2.0) == CURVEBEM_OK);
  curvebem_config_destroy(nullptr);
  curvebem_report_destroy(nullptr);
}

TEST_CASE("Laplace study through the C interface") {
  Config c;
  REQUIRE(curvebem_config_set_int(c.ptr, "order", 2) == CURVEBEM_OK);
  REQUIRE(curvebem_config_set_int(c.ptr, "level_min", 0) == CURVEBEM_OK);
  REQUIRE(curvebem_config_set_int(c.ptr, "level_max", 1) == CURVEBEM_OK);
  REQUIRE(curvebem_config_validate(c.ptr) == CURVEBEM_OK);
  curvebem_report* r = nullptr;
  REQUIRE(curvebem_study_run(c.ptr, &r) == CURVEBEM_OK);
  REQUIRE(curvebem_report_num_rows(r) == 2);
  CHECK(curvebem_report_failed(r) == 0);
  double re = 0, im = 1;
  CHECK(curvebem_report_reference(r, &re, &im) == CURVEBEM_OK);
  CHECK(re == 0.2);
  CHECK(im == 0.0);
  curvebem_level_row row0{}, row1{};
  CHECK(curvebem_report_row(r, 0, &row0) == CURVEBEM_OK);
  CHECK(curvebem_report_row(r, 1, &row1) == CURVEBEM_OK);
  CHECK(curvebem_report_row(r, 2, &row1) == CURVEBEM_ERR_INVALID_ARGUMENT);
  CHECK(row0.has_eoc == 0);
  CHECK(row1.has_eoc == 1);
  CHECK(row1.dofs == 80);
  CHECK(row1.error < row0.error);
  CHECK(std::abs(row1.value_re - 0.2) == doctest::Approx(row1.error * 0.2));

  const fs::path csv = scratch("laplace.csv");
  CHECK(curvebem_report_write_csv(r, csv.c_str()) == CURVEBEM_OK);
  CHECK(slurp(csv).rfind("level,h,dofs,error,eoc,iters,seconds\n", 0) == 0);
  CHECK(curvebem_report_write_csv(r, "/nonexistent/dir/x.csv") == CURVEBEM_ERR_IO);
  curvebem_report_destroy(r);
}

TEST_CASE("mesh export, geometry study and level dump") {
  const fs::path mesh = scratch("mesh.json"), geom = scratch("geom.csv");
  CHECK(curvebem_export_mesh("bean", 2, 1, mesh.c_str()) == CURVEBEM_OK);
  CHECK(slurp(mesh).find("\"surface_params\"") != std::string::npos);
  CHECK(curvebem_export_mesh("bean", 4, 0, mesh.c_str()) == CURVEBEM_ERR_INVALID_MESH);
  CHECK(curvebem_geometry_study("sphere", 1, 0, 2, geom.c_str()) == CURVEBEM_OK);
  CHECK(curvebem_geometry_study("sphere", 9, 0, 2, geom.c_str()) == CURVEBEM_ERR_INVALID_ARGUMENT);

  Config c;
  curvebem_config_set_string(c.ptr, "equation", "helmholtz");
  curvebem_config_set_string(c.ptr, "formulation", "cfie");
  curvebem_config_set_double(c.ptr, "k", 2.0);
  const fs::path matrix = scratch("A.bin"), density = scratch("density.csv");
  CHECK(curvebem_dump_level(c.ptr, 0, matrix.c_str(), density.c_str()) == CURVEBEM_OK);
  CHECK(fs::file_size(matrix) > 20u * 20u * 16u);
  CHECK(fs::exists(density));
}

TEST_CASE("command line exit codes") {
  const std::string out = scratch("cli.csv").string();
  CHECK(run_cli("study --equation laplace --formulation sl --m 0 --order 1 --levels 0..1 --out " + out) == 0);
  CHECK(slurp(out).rfind("level,h,dofs,error,eoc,iters,seconds", 0) == 0);
  CHECK(run_cli("study --bogus-flag") == 3);
  CHECK(run_cli("study --equation laplace --formulation sl --m 7 --order 1 --levels 0..1 --out " + out) == 3);
  CHECK(run_cli("geom-study --geometry sphere --order 1 --levels 0..1 --out " + scratch("g.csv").string()) == 0);
}
