#ifndef QTOMO_QTOMO_H
#define QTOMO_QTOMO_H

/* C interface to the qtomo state-tomography library.
 *
 * Every object is an opaque handle released with its *_free function
 * (which accepts NULL). Functions returning qt_status write their outputs only
 * on QT_OK; on failure qt_last_error() describes the problem. The message is
 * per thread and stays valid until the next failing call on that thread.
 *
 * Matrices cross the boundary row-major. Units: seconds, rad/s, and 1/s for
 * dephasing rates.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(QTOMO_BUILDING_LIBRARY)
#    define QTOMO_API __declspec(dllexport)
#  else
#    define QTOMO_API __declspec(dllimport)
#  endif
#else
#  define QTOMO_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qt_status {
  QT_OK = 0,
  QT_ERR_INVALID_ARGUMENT = 1,
  QT_ERR_NON_HERMITIAN = 2,
  QT_ERR_DIMENSION_MISMATCH = 3,
  QT_ERR_INVALID_STATE = 4,
  QT_ERR_NUMERICAL_DRIFT = 5,
  QT_ERR_DEGENERATE_PARAMS = 6,
  QT_ERR_FACTORIZATION = 7,
  QT_ERR_NON_FINITE_OBJECTIVE = 8,
  QT_ERR_GRID_MISMATCH = 9,
  QT_ERR_NO_CONVERGENCE = 10,
  QT_ERR_EMPTY_WINDOW = 11,
  QT_ERR_PARSE = 12,
  QT_ERR_SCHEMA = 13,
  QT_ERR_IO = 14,
  QT_ERR_INTERNAL = 15
} qt_status;

/* Detuning units for documents that carry ladder detunings. DEFAULT keeps
 * whatever the document declares. */
typedef enum qt_delta_units {
  QT_DELTA_DEFAULT = 0,
  QT_DELTA_ANGULAR = 1,
  QT_DELTA_ORDINARY = 2
} qt_delta_units;

typedef struct qt_state qt_state;
typedef struct qt_model qt_model;
typedef struct qt_config qt_config;
typedef struct qt_record qt_record;
typedef struct qt_result qt_result;
typedef struct qt_sweep qt_sweep;
typedef struct qt_convergence qt_convergence;

typedef struct qt_solver_options {
  int restarts;      /* multi-start count */
  uint64_t seed;     /* start-point stream */
  int threads;       /* 0: hardware concurrency */
  long max_evals;    /* per Subplex run */
  double x_tol;
  double f_tol;
  int unweighted;    /* nonzero: all weights 1 */
  int refine;        /* nonzero: least-squares refinement after the search */
} qt_solver_options;

QTOMO_API const char* qt_version(void);
QTOMO_API const char* qt_last_error(void);
QTOMO_API const char* qt_status_name(qt_status status);

/* 0 for QT_OK, 2 for input/validation failures, 3 for numerical failures. */
QTOMO_API int qt_status_exit_code(qt_status status);

QTOMO_API void qt_solver_options_init(qt_solver_options* options);

/* States */
QTOMO_API qt_status qt_state_create(int dim, const double* real, const double* imag, qt_state** out);
QTOMO_API qt_status qt_state_basis(int dim, int index, qt_state** out);
QTOMO_API qt_status qt_state_load(const char* path, qt_delta_units units, qt_state** out);
QTOMO_API qt_status qt_state_save(const qt_state* state, const char* path);
QTOMO_API int qt_state_dim(const qt_state* state);
QTOMO_API qt_status qt_state_entries(const qt_state* state, double* real, double* imag);
QTOMO_API qt_status qt_state_populations(const qt_state* state, double* out);
QTOMO_API qt_status qt_fidelity(const qt_state* a, const qt_state* b, double* out);
QTOMO_API void qt_state_free(qt_state* state);

/* Models */
QTOMO_API qt_status qt_model_ladder5(double omega, double delta1, double delta2, double gamma,
                                     qt_model** out);
QTOMO_API qt_status qt_model_generic(int dim, const double* real, const double* imag, double gamma,
                                     qt_model** out);
QTOMO_API qt_status qt_model_load(const char* path, qt_delta_units units, qt_model** out);
QTOMO_API qt_status qt_model_with_gamma(const qt_model* model, double gamma, qt_model** out);
QTOMO_API int qt_model_dim(const qt_model* model);
QTOMO_API double qt_model_gamma(const qt_model* model);
QTOMO_API qt_status qt_evolve(const qt_model* model, const qt_state* state, double t, qt_state** out);
QTOMO_API void qt_model_free(qt_model* model);

/* Experiment configs */
QTOMO_API qt_status qt_config_load(const char* path, qt_delta_units units, qt_config** out);
QTOMO_API qt_status qt_config_set_seed(qt_config* config, uint64_t seed);
QTOMO_API qt_status qt_config_set_noiseless(qt_config* config, int noiseless);
QTOMO_API void qt_config_free(qt_config* config);

/* Records */
QTOMO_API qt_status qt_simulate(const qt_config* config, const qt_state* state, qt_record** out);
QTOMO_API qt_status qt_record_load(const char* path, qt_record** out);
QTOMO_API qt_status qt_record_save(const qt_record* record, const char* path);
QTOMO_API int qt_record_dim(const qt_record* record);
QTOMO_API int qt_record_num_times(const qt_record* record);
QTOMO_API qt_status qt_record_times(const qt_record* record, double* out);
/* dim x num_times, row i = sublevel i */
QTOMO_API qt_status qt_record_means(const qt_record* record, double* out);
QTOMO_API qt_status qt_record_sigmas(const qt_record* record, double* out);
QTOMO_API int qt_record_warning_count(const qt_record* record);
QTOMO_API const char* qt_record_warning(const qt_record* record, int index);
QTOMO_API void qt_record_free(qt_record* record);

/* Reconstruction */
QTOMO_API qt_status qt_reconstruct(const qt_record* record, const qt_model* model,
                                   const qt_solver_options* options, qt_result** out);
QTOMO_API qt_status qt_result_state(const qt_result* result, qt_state** out);
QTOMO_API double qt_result_epsilon(const qt_result* result);
QTOMO_API long qt_result_evaluations(const qt_result* result);
/* reference may be NULL; with one, the document carries the fidelity. */
QTOMO_API qt_status qt_result_save(const qt_result* result, const qt_state* reference, const char* path);
QTOMO_API void qt_result_free(qt_result* result);

/* Dephasing sweep. Output files ending in .json get the JSON form, others CSV. */
QTOMO_API qt_status qt_sweep_gamma(const qt_record* record, const qt_model* model, const double* windows,
                                   int num_windows, const double* gammas, int num_gammas,
                                   const qt_solver_options* options, qt_sweep** out);
QTOMO_API int qt_sweep_num_windows(const qt_sweep* sweep);
QTOMO_API int qt_sweep_num_gammas(const qt_sweep* sweep);
/* num_windows x num_gammas; failed cells are +inf */
QTOMO_API qt_status qt_sweep_errors(const qt_sweep* sweep, double* out);
QTOMO_API qt_status qt_sweep_gamma_opt(const qt_sweep* sweep, double* out);
QTOMO_API qt_status qt_sweep_save(const qt_sweep* sweep, const char* path);
QTOMO_API void qt_sweep_free(qt_sweep* sweep);

/* Window convergence. reference may be NULL. */
QTOMO_API qt_status qt_converge(const qt_record* record, const qt_model* model, const double* windows,
                                int num_windows, const qt_state* reference,
                                const qt_solver_options* options, qt_convergence** out);
QTOMO_API int qt_convergence_size(const qt_convergence* conv);
/* infidelity is NaN without a reference */
QTOMO_API qt_status qt_convergence_point(const qt_convergence* conv, int index, double* window,
                                         double* epsilon, double* infidelity);
QTOMO_API qt_status qt_convergence_save(const qt_convergence* conv, const char* path);
QTOMO_API void qt_convergence_free(qt_convergence* conv);

#ifdef __cplusplus
}
#endif

#endif
