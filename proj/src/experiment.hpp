#pragma once

// Synthetic experiments: state preparation schedules and destructive,
// shot-noise-limited population sampling on a uniform time grid.

#include "dynamics.hpp"
#include "tomography.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace qtomo {

enum class DeltaUnits {
  /// Detunings are already angular frequencies (rad/s).
  Angular,
  /// Detunings are ordinary frequencies (Hz) and get multiplied by 2 pi.
  Ordinary,
};

/// Converts a detuning given in `units` to rad/s.
double detuning_to_angular(double value, DeltaUnits units);

/// Slow fluctuation of the bias field, modelled as an Ornstein-Uhlenbeck
/// offset b(t) held constant over each sample interval and added to the
/// ladder detunings as (delta1 + b, delta2 + 2b).
struct DetuningNoise {
  double rms = 0.0;                 // rad/s
  double correlation_time = 50e-6;  // s
  int realizations = 64;            // trajectories averaged per record
};

struct ExperimentConfig {
  HamiltonianSpec hamiltonian = Ladder5{};
  double gamma = 0.0;
  double sample_interval = 1.16e-6;
  int n_samples = 16;
  int repeats = 5;
  long atoms_per_shot = 80000;
  std::uint64_t rng_seed = 0;
  DeltaUnits delta_units = DeltaUnits::Ordinary;
  bool noiseless = false;
  std::optional<DetuningNoise> detuning_noise;

  void validate() const;
  EvolutionModel model() const { return EvolutionModel(hamiltonian, gamma); }
};

/// Population record of `rho_true` sampled at t_j = j * sample_interval.
/// Each point draws `repeats` multinomial shots of atoms_per_shot atoms;
/// means and sample standard deviations (n - 1 denominator) are reported and
/// sigmas are floored. Deterministic for a fixed rng_seed.
MeasurementRecord synthesize_record(const DensityMatrix& rho_true, const ExperimentConfig& cfg);

/// Exact populations of `rho_true` under cfg's model on cfg's grid, averaged
/// over detuning-noise trajectories when configured. Column j is time j.
RMatrix expected_populations(const DensityMatrix& rho_true, const ExperimentConfig& cfg);

/// Multinomial draw of `atoms` over probabilities `p` (renormalized).
std::vector<long> sample_multinomial(const RVector& p, long atoms, std::mt19937_64& rng);

struct PreparationSegment {
  double duration = 0.0;
  HamiltonianSpec hamiltonian = Ladder5{};
  double gamma = 0.0;
};

struct PreparationSchedule {
  DensityMatrix initial;
  std::vector<PreparationSegment> segments;
};

/// Folds prepare_pulse_state over the segments.
DensityMatrix run_preparation(const PreparationSchedule& schedule);

/// Piecewise-constant schedule at fixed Rabi frequency whose detunings are
/// drawn uniformly in [-spread, spread] (rad/s) around the base values for
/// each of `segments` segments of `segment_duration` seconds.
PreparationSchedule random_detuning_schedule(const DensityMatrix& initial, const Ladder5& base,
                                             int segments, double segment_duration,
                                             double spread, std::mt19937_64& rng);

}  // namespace qtomo
