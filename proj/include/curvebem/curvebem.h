/* C interface of the curvebem library. All objects are opaque handles owned
 * by the caller and released with the matching *_destroy function. Functions
 * return a status code; curvebem_last_error() describes the most recent
 * failure on the calling thread. */
#ifndef CURVEBEM_CURVEBEM_H
#define CURVEBEM_CURVEBEM_H

#if defined(_WIN32)
#define CURVEBEM_API __declspec(dllexport)
#else
#define CURVEBEM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum curvebem_status {
  CURVEBEM_OK = 0,
  CURVEBEM_ERR_INVALID_ARGUMENT = 1,
  CURVEBEM_ERR_PROJECTION = 2,
  CURVEBEM_ERR_INVALID_MESH = 3,
  CURVEBEM_ERR_DEGENERATE_ELEMENT = 4,
  CURVEBEM_ERR_SINGULAR_EVALUATION = 5,
  CURVEBEM_ERR_SINGULAR_SYSTEM = 6,
  CURVEBEM_ERR_NOT_CONVERGED = 7,
  CURVEBEM_ERR_DOMAIN = 8,
  CURVEBEM_ERR_NEAR_FIELD = 9,
  CURVEBEM_ERR_RANGE = 10,
  CURVEBEM_ERR_IO = 11,
  CURVEBEM_ERR_INTERNAL = 12,
  CURVEBEM_ERR_UNKNOWN = 99
} curvebem_status;

typedef struct curvebem_config curvebem_config;
typedef struct curvebem_report curvebem_report;

typedef struct curvebem_level_row {
  int level;
  double h;
  int dofs;
  double error; /* NaN when the level failed */
  int has_eoc;
  double eoc;
  int iterations;
  double seconds;
  double value_re;
  double value_im;
  double true_residual;
  int has_dense_difference;
  double dense_difference;
  int dense_fallback;
  int failed;
} curvebem_level_row;

CURVEBEM_API const char* curvebem_version(void);
CURVEBEM_API const char* curvebem_last_error(void);

CURVEBEM_API curvebem_status curvebem_config_create(curvebem_config** out);
CURVEBEM_API void curvebem_config_destroy(curvebem_config* config);

/* Keys: geometry (sphere|bean), equation (laplace|helmholtz),
 * formulation (sl|dl|cfie), normal (element|interpolated),
 * reference (analytic|self), harmonic (x1|x1x2|r2). */
CURVEBEM_API curvebem_status curvebem_config_set_string(curvebem_config* config, const char* key, const char* value);
/* Keys: m, order, level_min, level_max, reference_m, reference_order,
 * max_iterations, threads, dof_cap, compare_dense, singular_order,
 * regular_degree. */
CURVEBEM_API curvebem_status curvebem_config_set_int(curvebem_config* config, const char* key, int value);
/* Keys: k, eta, tolerance. */
CURVEBEM_API curvebem_status curvebem_config_set_double(curvebem_config* config, const char* key, double value);
CURVEBEM_API curvebem_status curvebem_config_set_eval_point(curvebem_config* config, double x, double y, double z);
/* Checks the configuration without running anything. */
CURVEBEM_API curvebem_status curvebem_config_validate(const curvebem_config* config);

/* Runs the convergence study. A report is produced even when individual
 * levels fail; check curvebem_report_failed. */
CURVEBEM_API curvebem_status curvebem_study_run(const curvebem_config* config, curvebem_report** out);
CURVEBEM_API void curvebem_report_destroy(curvebem_report* report);
CURVEBEM_API int curvebem_report_num_rows(const curvebem_report* report);
CURVEBEM_API curvebem_status curvebem_report_row(const curvebem_report* report, int index, curvebem_level_row* out);
CURVEBEM_API int curvebem_report_failed(const curvebem_report* report);
CURVEBEM_API curvebem_status curvebem_report_reference(const curvebem_report* report, double* re, double* im);
CURVEBEM_API int curvebem_report_num_warnings(const curvebem_report* report);
CURVEBEM_API const char* curvebem_report_warning(const curvebem_report* report, int index);
CURVEBEM_API curvebem_status curvebem_report_write_csv(const curvebem_report* report, const char* path);

/* Assembles and solves the configuration at one level and writes the system
 * matrix (binary) and/or the density (CSV). Either path may be NULL. */
CURVEBEM_API curvebem_status curvebem_dump_level(const curvebem_config* config, int level, const char* matrix_path,
                                                 const char* density_path);

CURVEBEM_API curvebem_status curvebem_geometry_study(const char* geometry, int order, int level_min, int level_max,
                                                     const char* csv_path);
CURVEBEM_API curvebem_status curvebem_export_mesh(const char* geometry, int order, int level, const char* json_path);

#ifdef __cplusplus
}
#endif

#endif
