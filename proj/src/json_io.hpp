#pragma once

// JSON documents: models, experiment configs, preparation schedules, states
// and reconstruction outputs; plus the long-format CSV tables.

#include "experiment.hpp"
#include "tomography.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qtomo {

// Hamiltonian objects are either
//   {"type": "ladder5", "omega": rad/s, "delta1": d1, "delta2": d2}
// with detunings in the document's delta_units, or
//   {"type": "generic", "real": [[...]], "imag": [[...]]} in rad/s.
// A model is {"hamiltonian": {...}, "gamma": 1/s, "delta_units": "ordinary"}.
// An explicit `units` argument overrides the document's delta_units.

EvolutionModel parse_model(std::string_view text, std::optional<DeltaUnits> units = {});
EvolutionModel load_model(const std::filesystem::path& path, std::optional<DeltaUnits> units = {});

/// A model document plus sample_interval, n_samples, repeats,
/// atoms_per_shot, rng_seed, noiseless and an optional
/// "detuning_noise": {"rms", "correlation_time", "realizations"}.
ExperimentConfig parse_config(std::string_view text, std::optional<DeltaUnits> units = {});
ExperimentConfig load_config(const std::filesystem::path& path, std::optional<DeltaUnits> units = {});

/// {"initial_state": "mF=+2" | "basis:k" | {"real", "imag"}, "dim": 5,
///  "segments": [{"duration", "omega", "delta1", "delta2", "gamma"}]}.
PreparationSchedule parse_schedule(std::string_view text, std::optional<DeltaUnits> units = {});

/// Reads a state from a state document ({"rho": {"real", "imag"}}), a
/// reconstruction result ("rho0") or a preparation schedule (prepared).
DensityMatrix parse_state(std::string_view text, std::optional<DeltaUnits> units = {});
DensityMatrix load_state(const std::filesystem::path& path, std::optional<DeltaUnits> units = {});

std::string format_state_json(const DensityMatrix& rho);

struct ResultExtras {
  std::optional<double> fidelity;
  std::vector<std::string> warnings;
  int restarts = 0;
  std::uint64_t seed = 0;
};

std::string format_result_json(const ReconstructionResult& result, const ResultExtras& extras = {});

/// window_s,gamma,epsilon,is_opt rows, one per sweep cell.
std::string format_sweep_csv(const GammaSweepResult& sweep);
std::string format_sweep_json(const GammaSweepResult& sweep);

/// window_s,epsilon,infidelity rows; infidelity is empty without a reference.
std::string format_convergence_csv(const std::vector<ConvergencePoint>& points);

}  // namespace qtomo
