#include <qtomo/qtomo.h>

#include "dynamics.hpp"
#include "error.hpp"
#include "experiment.hpp"
#include "json_io.hpp"
#include "record_io.hpp"
#include "tomography.hpp"

#include <cmath>
#include <limits>
#include <new>
#include <optional>
#include <string>

using namespace qtomo;

struct qt_state {
  DensityMatrix rho;
};
struct qt_model {
  EvolutionModel model;
};
struct qt_config {
  ExperimentConfig cfg;
};
struct qt_record {
  MeasurementRecord record;
};
struct qt_result {
  ReconstructionResult result;
  int restarts;
  std::uint64_t seed;
  std::vector<std::string> warnings;
};
struct qt_sweep {
  GammaSweepResult sweep;
};
struct qt_convergence {
  std::vector<ConvergencePoint> points;
};

namespace {

thread_local std::string last_error;

qt_status status_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return QT_ERR_INVALID_ARGUMENT;
    case ErrorCode::NonHermitianInput: return QT_ERR_NON_HERMITIAN;
    case ErrorCode::DimensionMismatch: return QT_ERR_DIMENSION_MISMATCH;
    case ErrorCode::InvalidState: return QT_ERR_INVALID_STATE;
    case ErrorCode::NumericalDrift: return QT_ERR_NUMERICAL_DRIFT;
    case ErrorCode::DegenerateParams: return QT_ERR_DEGENERATE_PARAMS;
    case ErrorCode::FactorizationFailure: return QT_ERR_FACTORIZATION;
    case ErrorCode::NonFiniteObjective: return QT_ERR_NON_FINITE_OBJECTIVE;
    case ErrorCode::GridMismatch: return QT_ERR_GRID_MISMATCH;
    case ErrorCode::NoConvergence: return QT_ERR_NO_CONVERGENCE;
    case ErrorCode::EmptyWindow: return QT_ERR_EMPTY_WINDOW;
    case ErrorCode::ParseError: return QT_ERR_PARSE;
    case ErrorCode::SchemaError: return QT_ERR_SCHEMA;
    case ErrorCode::IoError: return QT_ERR_IO;
  }
  return QT_ERR_INTERNAL;
}

qt_status fail(qt_status status, std::string message) {
  last_error = std::move(message);
  return status;
}

template <class F>
qt_status guarded(F&& body) {
  try {
    body();
    return QT_OK;
  } catch (const Error& e) {
    return fail(status_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(QT_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(QT_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(QT_ERR_INTERNAL, "unknown exception");
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, what);
}

std::optional<DeltaUnits> units_of(qt_delta_units units) {
  switch (units) {
    case QT_DELTA_ANGULAR: return DeltaUnits::Angular;
    case QT_DELTA_ORDINARY: return DeltaUnits::Ordinary;
    case QT_DELTA_DEFAULT: return std::nullopt;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown delta units");
}

CMatrix read_matrix(int dim, const double* real, const double* imag) {
  require(dim > 0, "dimension must be positive");
  require(real != nullptr, "real part is required");
  CMatrix m(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) {
      const std::size_t k = static_cast<std::size_t>(i) * dim + j;
      m(i, j) = Complex(real[k], imag ? imag[k] : 0.0);
    }
  }
  return m;
}

ReconstructOptions options_of(const qt_solver_options* options) {
  qt_solver_options o;
  qt_solver_options_init(&o);
  if (options) o = *options;
  require(o.restarts >= 1, "restarts must be >= 1");
  require(o.threads >= 0, "threads must be >= 0");
  ReconstructOptions out;
  out.optimizer.restarts = o.restarts;
  out.optimizer.rng_seed = o.seed;
  out.optimizer.threads = o.threads;
  out.optimizer.simplex.max_evals = o.max_evals;
  out.optimizer.simplex.x_tol = o.x_tol;
  out.optimizer.simplex.f_tol = o.f_tol;
  out.optimizer.validate();
  out.norm = o.unweighted ? CostNorm::Unweighted : CostNorm::Weighted;
  out.refine = o.refine != 0;
  return out;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

extern "C" {

const char* qt_version(void) { return "0.1.0"; }

const char* qt_last_error(void) { return last_error.c_str(); }

const char* qt_status_name(qt_status status) {
  switch (status) {
    case QT_OK: return "ok";
    case QT_ERR_INVALID_ARGUMENT: return "invalid argument";
    case QT_ERR_NON_HERMITIAN: return "non-Hermitian input";
    case QT_ERR_DIMENSION_MISMATCH: return "dimension mismatch";
    case QT_ERR_INVALID_STATE: return "invalid state";
    case QT_ERR_NUMERICAL_DRIFT: return "numerical drift";
    case QT_ERR_DEGENERATE_PARAMS: return "degenerate parameters";
    case QT_ERR_FACTORIZATION: return "factorization failure";
    case QT_ERR_NON_FINITE_OBJECTIVE: return "non-finite objective";
    case QT_ERR_GRID_MISMATCH: return "grid mismatch";
    case QT_ERR_NO_CONVERGENCE: return "no convergence";
    case QT_ERR_EMPTY_WINDOW: return "empty window";
    case QT_ERR_PARSE: return "parse error";
    case QT_ERR_SCHEMA: return "schema error";
    case QT_ERR_IO: return "i/o error";
    case QT_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

int qt_status_exit_code(qt_status status) {
  switch (status) {
    case QT_OK: return 0;
    case QT_ERR_NUMERICAL_DRIFT:
    case QT_ERR_DEGENERATE_PARAMS:
    case QT_ERR_FACTORIZATION:
    case QT_ERR_NON_FINITE_OBJECTIVE:
    case QT_ERR_NO_CONVERGENCE:
    case QT_ERR_INTERNAL:
      return 3;
    default:
      return 2;
  }
}

void qt_solver_options_init(qt_solver_options* options) {
  if (!options) return;
  const SubplexConfig d;
  options->restarts = d.restarts;
  options->seed = d.rng_seed;
  options->threads = static_cast<int>(d.threads);
  options->max_evals = d.simplex.max_evals;
  options->x_tol = d.simplex.x_tol;
  options->f_tol = d.simplex.f_tol;
  options->unweighted = 0;
  options->refine = 1;
}

// States

qt_status qt_state_create(int dim, const double* real, const double* imag, qt_state** out) {
  return guarded([&] {
    require(out != nullptr, "out is null");
    *out = new qt_state{DensityMatrix(read_matrix(dim, real, imag))};
  });
}

qt_status qt_state_basis(int dim, int index, qt_state** out) {
  return guarded([&] {
    require(out != nullptr, "out is null");
    *out = new qt_state{DensityMatrix::basis_state(dim, index)};
  });
}

qt_status qt_state_load(const char* path, qt_delta_units units, qt_state** out) {
  return guarded([&] {
    require(path && out, "path and out are required");
    *out = new qt_state{load_state(path, units_of(units))};
  });
}

qt_status qt_state_save(const qt_state* state, const char* path) {
  return guarded([&] {
    require(state && path, "state and path are required");
    write_file_atomic(path, format_state_json(state->rho));
  });
}

int qt_state_dim(const qt_state* state) { return state ? state->rho.dim() : 0; }

qt_status qt_state_entries(const qt_state* state, double* real, double* imag) {
  return guarded([&] {
    require(state && real && imag, "state and outputs are required");
    const int n = state->rho.dim();
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        real[i * n + j] = state->rho(i, j).real();
        imag[i * n + j] = state->rho(i, j).imag();
      }
    }
  });
}

qt_status qt_state_populations(const qt_state* state, double* out) {
  return guarded([&] {
    require(state && out, "state and out are required");
    const RVector p = populations(state->rho);
    for (Eigen::Index i = 0; i < p.size(); ++i) out[i] = p[i];
  });
}

qt_status qt_fidelity(const qt_state* a, const qt_state* b, double* out) {
  return guarded([&] {
    require(a && b && out, "states and out are required");
    *out = uhlmann_fidelity(a->rho, b->rho);
  });
}

void qt_state_free(qt_state* state) { delete state; }

// Models

qt_status qt_model_ladder5(double omega, double delta1, double delta2, double gamma, qt_model** out) {
  return guarded([&] {
    require(out != nullptr, "out is null");
    require(std::isfinite(omega) && std::isfinite(delta1) && std::isfinite(delta2), "frequencies must be finite");
    require(gamma >= 0.0 && std::isfinite(gamma), "gamma must be finite and >= 0");
    *out = new qt_model{EvolutionModel(Ladder5{omega, delta1, delta2}, gamma)};
  });
}

qt_status qt_model_generic(int dim, const double* real, const double* imag, double gamma, qt_model** out) {
  return guarded([&] {
    require(out != nullptr, "out is null");
    require(gamma >= 0.0 && std::isfinite(gamma), "gamma must be finite and >= 0");
    *out = new qt_model{EvolutionModel(GenericHamiltonian{read_matrix(dim, real, imag)}, gamma)};
  });
}

qt_status qt_model_load(const char* path, qt_delta_units units, qt_model** out) {
  return guarded([&] {
    require(path && out, "path and out are required");
    *out = new qt_model{load_model(path, units_of(units))};
  });
}

qt_status qt_model_with_gamma(const qt_model* model, double gamma, qt_model** out) {
  return guarded([&] {
    require(model && out, "model and out are required");
    require(gamma >= 0.0 && std::isfinite(gamma), "gamma must be finite and >= 0");
    *out = new qt_model{model->model.with_gamma(gamma)};
  });
}

int qt_model_dim(const qt_model* model) { return model ? model->model.dim() : 0; }

double qt_model_gamma(const qt_model* model) {
  return model ? model->model.gamma() : std::numeric_limits<double>::quiet_NaN();
}

qt_status qt_evolve(const qt_model* model, const qt_state* state, double t, qt_state** out) {
  return guarded([&] {
    require(model && state && out, "model, state and out are required");
    require(t >= 0.0 && std::isfinite(t), "time must be finite and >= 0");
    *out = new qt_state{prepare_pulse_state(state->rho, model->model, t)};
  });
}

void qt_model_free(qt_model* model) { delete model; }

// Configs

qt_status qt_config_load(const char* path, qt_delta_units units, qt_config** out) {
  return guarded([&] {
    require(path && out, "path and out are required");
    *out = new qt_config{load_config(path, units_of(units))};
  });
}

qt_status qt_config_set_seed(qt_config* config, uint64_t seed) {
  return guarded([&] {
    require(config != nullptr, "config is null");
    config->cfg.rng_seed = seed;
  });
}

qt_status qt_config_set_noiseless(qt_config* config, int noiseless) {
  return guarded([&] {
    require(config != nullptr, "config is null");
    config->cfg.noiseless = noiseless != 0;
  });
}

void qt_config_free(qt_config* config) { delete config; }

// Records

qt_status qt_simulate(const qt_config* config, const qt_state* state, qt_record** out) {
  return guarded([&] {
    require(config && state && out, "config, state and out are required");
    *out = new qt_record{synthesize_record(state->rho, config->cfg)};
  });
}

qt_status qt_record_load(const char* path, qt_record** out) {
  return guarded([&] {
    require(path && out, "path and out are required");
    *out = new qt_record{load_record(path)};
  });
}

qt_status qt_record_save(const qt_record* record, const char* path) {
  return guarded([&] {
    require(record && path, "record and path are required");
    save_record(record->record, path);
  });
}

int qt_record_dim(const qt_record* record) { return record ? record->record.dim : 0; }

int qt_record_num_times(const qt_record* record) { return record ? record->record.num_times() : 0; }

qt_status qt_record_times(const qt_record* record, double* out) {
  return guarded([&] {
    require(record && out, "record and out are required");
    std::copy(record->record.times.begin(), record->record.times.end(), out);
  });
}

qt_status qt_record_means(const qt_record* record, double* out) {
  return guarded([&] {
    require(record && out, "record and out are required");
    const RMatrix& m = record->record.means;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) out[i * m.cols() + j] = m(i, j);
    }
  });
}

qt_status qt_record_sigmas(const qt_record* record, double* out) {
  return guarded([&] {
    require(record && out, "record and out are required");
    const RMatrix& m = record->record.sigmas;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) out[i * m.cols() + j] = m(i, j);
    }
  });
}

int qt_record_warning_count(const qt_record* record) {
  return record ? static_cast<int>(record->record.warnings.size()) : 0;
}

const char* qt_record_warning(const qt_record* record, int index) {
  if (!record || index < 0 || index >= static_cast<int>(record->record.warnings.size())) return nullptr;
  return record->record.warnings[static_cast<std::size_t>(index)].c_str();
}

void qt_record_free(qt_record* record) { delete record; }

// Reconstruction

qt_status qt_reconstruct(const qt_record* record, const qt_model* model, const qt_solver_options* options,
                         qt_result** out) {
  return guarded([&] {
    require(record && model && out, "record, model and out are required");
    const ReconstructOptions opts = options_of(options);
    ReconstructionResult r = reconstruct(record->record, model->model, opts);
    *out = new qt_result{std::move(r), opts.optimizer.restarts, opts.optimizer.rng_seed, record->record.warnings};
  });
}

qt_status qt_result_state(const qt_result* result, qt_state** out) {
  return guarded([&] {
    require(result && out, "result and out are required");
    *out = new qt_state{result->result.rho0};
  });
}

double qt_result_epsilon(const qt_result* result) {
  return result ? result->result.epsilon : std::numeric_limits<double>::quiet_NaN();
}

long qt_result_evaluations(const qt_result* result) { return result ? result->result.opt.evals : 0; }

qt_status qt_result_save(const qt_result* result, const qt_state* reference, const char* path) {
  return guarded([&] {
    require(result && path, "result and path are required");
    ResultExtras extras;
    extras.restarts = result->restarts;
    extras.seed = result->seed;
    extras.warnings = result->warnings;
    if (reference) extras.fidelity = uhlmann_fidelity(result->result.rho0, reference->rho);
    write_file_atomic(path, format_result_json(result->result, extras));
  });
}

void qt_result_free(qt_result* result) { delete result; }

// Sweeps

qt_status qt_sweep_gamma(const qt_record* record, const qt_model* model, const double* windows,
                         int num_windows, const double* gammas, int num_gammas,
                         const qt_solver_options* options, qt_sweep** out) {
  return guarded([&] {
    require(record && model && windows && gammas && out, "record, model, grids and out are required");
    require(num_windows > 0 && num_gammas > 0, "grids must be non-empty");
    std::vector<double> w(windows, windows + num_windows);
    std::vector<double> g(gammas, gammas + num_gammas);
    *out = new qt_sweep{sweep_gamma(record->record, model->model, std::move(w), std::move(g), options_of(options))};
  });
}

int qt_sweep_num_windows(const qt_sweep* sweep) {
  return sweep ? static_cast<int>(sweep->sweep.windows.size()) : 0;
}

int qt_sweep_num_gammas(const qt_sweep* sweep) {
  return sweep ? static_cast<int>(sweep->sweep.gammas.size()) : 0;
}

qt_status qt_sweep_errors(const qt_sweep* sweep, double* out) {
  return guarded([&] {
    require(sweep && out, "sweep and out are required");
    const RMatrix& s = sweep->sweep.error_surface;
    for (Eigen::Index k = 0; k < s.rows(); ++k) {
      for (Eigen::Index g = 0; g < s.cols(); ++g) out[k * s.cols() + g] = s(k, g);
    }
  });
}

qt_status qt_sweep_gamma_opt(const qt_sweep* sweep, double* out) {
  return guarded([&] {
    require(sweep && out, "sweep and out are required");
    std::copy(sweep->sweep.gamma_opt.begin(), sweep->sweep.gamma_opt.end(), out);
  });
}

qt_status qt_sweep_save(const qt_sweep* sweep, const char* path) {
  return guarded([&] {
    require(sweep && path, "sweep and path are required");
    const std::string p = path;
    write_file_atomic(p, ends_with(p, ".json") ? format_sweep_json(sweep->sweep) : format_sweep_csv(sweep->sweep));
  });
}

void qt_sweep_free(qt_sweep* sweep) { delete sweep; }

// Convergence

qt_status qt_converge(const qt_record* record, const qt_model* model, const double* windows, int num_windows,
                      const qt_state* reference, const qt_solver_options* options, qt_convergence** out) {
  return guarded([&] {
    require(record && model && windows && out, "record, model, windows and out are required");
    require(num_windows > 0, "windows must be non-empty");
    std::optional<DensityMatrix> ref;
    if (reference) ref = reference->rho;
    *out = new qt_convergence{convergence_study(record->record, model->model, options_of(options),
                                                std::vector<double>(windows, windows + num_windows), ref)};
  });
}

int qt_convergence_size(const qt_convergence* conv) {
  return conv ? static_cast<int>(conv->points.size()) : 0;
}

qt_status qt_convergence_point(const qt_convergence* conv, int index, double* window, double* epsilon,
                               double* infidelity) {
  return guarded([&] {
    require(conv != nullptr, "convergence is null");
    require(index >= 0 && index < static_cast<int>(conv->points.size()), "index out of range");
    const ConvergencePoint& p = conv->points[static_cast<std::size_t>(index)];
    if (window) *window = p.window;
    if (epsilon) *epsilon = p.epsilon;
    if (infidelity) *infidelity = p.infidelity.value_or(std::numeric_limits<double>::quiet_NaN());
  });
}

qt_status qt_convergence_save(const qt_convergence* conv, const char* path) {
  return guarded([&] {
    require(conv && path, "convergence and path are required");
    write_file_atomic(path, format_convergence_csv(conv->points));
  });
}

void qt_convergence_free(qt_convergence* conv) { delete conv; }

}  // extern "C"
