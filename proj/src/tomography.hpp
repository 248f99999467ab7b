#pragma once

// State reconstruction from time-resolved sublevel populations.

#include "dynamics.hpp"
#include "optimizer.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qtomo {

enum class SigmaKind { StandardDeviation, StandardError };

/// Mean populations and their spreads. Column j of `means` and `sigmas` holds
/// sublevel values at `times[j]`.
struct MeasurementRecord {
  int dim = 0;
  std::vector<double> times;
  RMatrix means;
  RMatrix sigmas;
  int repeats = 5;
  double atoms_per_shot = 8e4;
  SigmaKind sigma_kind = SigmaKind::StandardDeviation;
  /// Ingestion notes, e.g. which sigmas were raised to the floor.
  std::vector<std::string> warnings;

  int num_times() const noexcept { return static_cast<int>(times.size()); }

  /// Throws SchemaError naming the first violated invariant.
  void validate() const;

  /// Points with t <= window (to 1e-12 s). Throws EmptyWindow below two points.
  MeasurementRecord truncated(double window) const;
};

inline constexpr double kNormalizationSlack = 0.02;
inline constexpr double kMinimumSigma = 1e-4;

/// max(0.5 / sqrt(repeats * atoms_per_shot), 1e-4).
double sigma_floor(int repeats, double atoms_per_shot);

/// Raises every sigma below the floor to the floor; returns how many changed.
int apply_sigma_floor(MeasurementRecord& record);

/// Uniform propagation grid covering every record time.
struct TimeGrid {
  double dt = 0.0;
  std::vector<long> steps;
};

/// Grid spacing is the smallest gap (including t_0 - 0). Throws GridMismatch
/// if a time is not an integer multiple of it to 1e-12 s.
TimeGrid time_grid(std::span<const double> times);
TimeGrid time_grid(std::span<const double> times, double dt);

enum class CostNorm {
  /// eps = (1/n) sum_i sqrt(sum_j w_ij |pbar_ij - p_ij|^2 / sum_j w_ij), w = 1/sigma^2.
  Weighted,
  /// Same with every w_ij = 1.
  Unweighted,
};

/// Reference evaluation of the reconstruction error by propagating rho0.
double weighted_error(const DensityMatrix& rho0, const MeasurementRecord& record,
                      const EvolutionModel& model, CostNorm norm = CostNorm::Weighted);

/// The error as a function of state parameters, with the linear
/// state -> populations map precomputed. Immutable and safe to share across
/// threads.
class TomographyObjective {
 public:
  TomographyObjective(const MeasurementRecord& record, const EvolutionModel& model,
                      CostNorm norm = CostNorm::Weighted);

  int dim() const noexcept { return dim_; }
  int num_params() const noexcept { return dim_ * dim_; }

  /// Reconstruction error of the state encoded by `params`; NaN for the
  /// all-zero vector.
  double operator()(std::span<const double> params) const;
  double error(const DensityMatrix& rho) const;

  /// sqrt((1/n) sum_i sum_j w_ij r_ij^2 / sum_j w_ij): the sublevel terms
  /// pooled under one root. Unlike the error it has no ridges where a single
  /// sublevel fits exactly, and both vanish at the same states.
  double pooled_rms(std::span<const double> params) const;

  /// Residual vector whose squared norm is pooled_rms^2, and optionally its
  /// Jacobian with respect to the parameters. Empty for the all-zero vector.
  RVector residuals(std::span<const double> params, RMatrix* jacobian = nullptr) const;

  /// Unconstrained weighted least-squares Hermitian matrix (unit trace) that
  /// minimizes the pooled residuals. Not necessarily positive.
  CMatrix linear_estimate() const;

 private:
  template <bool Root>
  double evaluate(std::span<const double> params) const;
  bool coordinates(std::span<const double> params, RVector& coords, RMatrix* jacobian) const;
  template <bool Root>
  double from_coordinates(std::span<const double> coords) const;

  int dim_;
  int num_times_;
  // Rows (i, j) -> sublevel i at time j; columns are the real coordinates of
  // a Hermitian matrix (diagonal, then re/im of the upper triangle).
  RMatrix readout_;
  RMatrix targets_;
  RMatrix weights_;
  RVector weight_sums_;
};

struct ReconstructOptions {
  SubplexConfig optimizer;
  CostNorm norm = CostNorm::Weighted;
  double epsilon_ceiling = 1.0;
  /// Damped, iteratively reweighted Gauss-Newton refinement of the error,
  /// started from the best Subplex point and from the projected linear
  /// estimate, each followed by one more Subplex pass. A candidate replaces
  /// the Subplex result only when its error is lower.
  bool refine = true;
  int refine_iterations = 2000;
};

struct ReconstructionResult {
  DensityMatrix rho0;
  double epsilon = 0.0;
  OptResult opt;
  double gamma_used = 0.0;
  double window_start = 0.0;
  double window_end = 0.0;
};

/// Multi-start Subplex over the Cholesky-factor parameterization, then the
/// optional refinement.
ReconstructionResult reconstruct(const MeasurementRecord& record, const EvolutionModel& model,
                                 const ReconstructOptions& opts = {});

/// Single Subplex run from a given parameter vector (canonicalized first).
ReconstructionResult reconstruct_from(const MeasurementRecord& record,
                                      const EvolutionModel& model,
                                      std::span<const double> start,
                                      const ReconstructOptions& opts = {});

/// Closest density matrix in Frobenius norm to a Hermitian matrix: the
/// eigenvalues are projected onto the probability simplex.
DensityMatrix project_to_states(const CMatrix& hermitian);

/// Evolves `initial` for `duration` seconds under `model`.
DensityMatrix prepare_pulse_state(const DensityMatrix& initial, const EvolutionModel& model,
                                  double duration);

/// Duration of a pi/2 rotation at Rabi frequency `omega` (rad/s).
inline double pi_half_duration(double omega) { return 0.5 * 3.14159265358979323846 / omega; }

struct ConvergencePoint {
  double window = 0.0;
  double epsilon = 0.0;
  std::optional<double> infidelity;
  DensityMatrix rho0;

  /// 1 - F with a reference, epsilon otherwise.
  double value() const { return infidelity.value_or(epsilon); }
};

/// Reconstructs on every window [0, T]; sorted by T.
std::vector<ConvergencePoint> convergence_study(const MeasurementRecord& record,
                                               const EvolutionModel& model,
                                               const ReconstructOptions& opts,
                                               std::vector<double> windows,
                                               const std::optional<DensityMatrix>& reference = {});

struct GammaSweepResult {
  std::vector<double> windows;
  std::vector<double> gammas;
  /// error_surface(k, g): epsilon for window k at gammas[g]; +inf marks a failed cell.
  RMatrix error_surface;
  std::vector<double> gamma_opt;
  std::vector<int> gamma_opt_index;
};

/// Row argmin with ties resolved toward the smaller gamma.
int sweep_argmin(const RMatrix& surface, int row, std::span<const double> gammas);

/// Reconstructs each (window, gamma) cell with gamma held fixed.
GammaSweepResult sweep_gamma(const MeasurementRecord& record, const EvolutionModel& model,
                             std::vector<double> windows, std::vector<double> gammas,
                             const ReconstructOptions& opts);

/// `count` evenly spaced values from first to last inclusive.
std::vector<double> linspace(double first, double last, int count);

}  // namespace qtomo
