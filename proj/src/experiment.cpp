#include "experiment.hpp"

#include "error.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace qtomo {

double detuning_to_angular(double value, DeltaUnits units) {
  return units == DeltaUnits::Ordinary ? 2.0 * std::numbers::pi * value : value;
}

void ExperimentConfig::validate() const {
  if (!(sample_interval > 0.0) || !std::isfinite(sample_interval)) {
    throw Error(ErrorCode::InvalidArgument, "sample_interval must be positive");
  }
  if (n_samples < 2) throw Error(ErrorCode::InvalidArgument, "n_samples must be >= 2");
  if (repeats < 1) throw Error(ErrorCode::InvalidArgument, "repeats must be >= 1");
  if (atoms_per_shot < 1) throw Error(ErrorCode::InvalidArgument, "atoms_per_shot must be >= 1");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw Error(ErrorCode::InvalidArgument, "gamma must be finite and >= 0");
  }
  if (detuning_noise) {
    if (!std::holds_alternative<Ladder5>(hamiltonian)) {
      throw Error(ErrorCode::InvalidArgument, "detuning noise requires the ladder Hamiltonian");
    }
    if (!(detuning_noise->rms >= 0.0) || !(detuning_noise->correlation_time > 0.0) ||
        detuning_noise->realizations < 1) {
      throw Error(ErrorCode::InvalidArgument, "invalid detuning noise parameters");
    }
  }
}

std::vector<long> sample_multinomial(const RVector& p, long atoms, std::mt19937_64& rng) {
  const auto n = static_cast<std::size_t>(p.size());
  std::vector<long> counts(n, 0);
  double mass = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) mass += std::max(p[i], 0.0);
  if (!(mass > 0.0)) throw Error(ErrorCode::InvalidArgument, "probabilities sum to zero");
  long left = atoms;
  double left_mass = mass;
  for (std::size_t i = 0; i + 1 < n && left > 0; ++i) {
    const double pi = std::max(p[static_cast<Eigen::Index>(i)], 0.0);
    const double q = left_mass > 0.0 ? std::clamp(pi / left_mass, 0.0, 1.0) : 0.0;
    std::binomial_distribution<long> draw(left, q);
    counts[i] = draw(rng);
    left -= counts[i];
    left_mass -= pi;
  }
  counts[n - 1] += left;
  return counts;
}

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream};
  return std::mt19937_64(seq);
}

RMatrix noisy_detuning_populations(const DensityMatrix& rho_true, const ExperimentConfig& cfg,
                                   std::mt19937_64& rng) {
  const Ladder5 base = std::get<Ladder5>(cfg.hamiltonian);
  const DetuningNoise& noise = *cfg.detuning_noise;
  const int n = rho_true.dim();
  const double decay = std::exp(-cfg.sample_interval / noise.correlation_time);
  const double kick = std::sqrt(1.0 - decay * decay) * noise.rms;
  std::normal_distribution<double> normal(0.0, 1.0);

  RMatrix sum = RMatrix::Zero(n, cfg.n_samples);
  for (int r = 0; r < noise.realizations; ++r) {
    double b = noise.rms * normal(rng);
    DensityMatrix rho = rho_true;
    sum.col(0) += populations(rho);
    for (int j = 1; j < cfg.n_samples; ++j) {
      const EvolutionModel segment(Ladder5{base.rabi_omega, base.delta1 + b, base.delta2 + 2.0 * b},
                                   cfg.gamma);
      rho = evolve(rho, make_propagator(segment, cfg.sample_interval), 1);
      sum.col(j) += populations(rho);
      b = decay * b + kick * normal(rng);
    }
  }
  return sum / noise.realizations;
}

}  // namespace

RMatrix expected_populations(const DensityMatrix& rho_true, const ExperimentConfig& cfg) {
  cfg.validate();
  const EvolutionModel model = cfg.model();
  if (rho_true.dim() != model.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "state and Hamiltonian dimensions differ");
  }
  if (cfg.detuning_noise) {
    std::mt19937_64 rng = make_engine(cfg.rng_seed, 1);
    return noisy_detuning_populations(rho_true, cfg, rng);
  }
  std::vector<long> steps(static_cast<std::size_t>(cfg.n_samples));
  for (int j = 0; j < cfg.n_samples; ++j) steps[static_cast<std::size_t>(j)] = j;
  const auto states = evolve_trajectory(rho_true, make_propagator(model, cfg.sample_interval), steps);
  RMatrix p(rho_true.dim(), cfg.n_samples);
  for (int j = 0; j < cfg.n_samples; ++j) p.col(j) = populations(states[static_cast<std::size_t>(j)]);
  return p;
}

MeasurementRecord synthesize_record(const DensityMatrix& rho_true, const ExperimentConfig& cfg) {
  const RMatrix exact = expected_populations(rho_true, cfg);
  const int n = rho_true.dim();
  const int m = cfg.n_samples;

  MeasurementRecord record;
  record.dim = n;
  record.repeats = cfg.repeats;
  record.atoms_per_shot = static_cast<double>(cfg.atoms_per_shot);
  record.times.resize(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) record.times[static_cast<std::size_t>(j)] = j * cfg.sample_interval;

  if (cfg.noiseless) {
    record.means = exact;
    record.sigmas = RMatrix::Constant(n, m, sigma_floor(cfg.repeats, record.atoms_per_shot));
    return record;
  }

  std::mt19937_64 rng = make_engine(cfg.rng_seed, 2);
  record.means.resize(n, m);
  record.sigmas.resize(n, m);
  const double atoms = record.atoms_per_shot;
  RMatrix shots(n, cfg.repeats);
  for (int j = 0; j < m; ++j) {
    for (int r = 0; r < cfg.repeats; ++r) {
      const auto counts = sample_multinomial(exact.col(j), cfg.atoms_per_shot, rng);
      for (int i = 0; i < n; ++i) shots(i, r) = static_cast<double>(counts[static_cast<std::size_t>(i)]) / atoms;
    }
    for (int i = 0; i < n; ++i) {
      const double mean = shots.row(i).mean();
      double var = 0.0;
      if (cfg.repeats > 1) {
        var = (shots.row(i).array() - mean).square().sum() / (cfg.repeats - 1);
      }
      record.means(i, j) = mean;
      record.sigmas(i, j) = std::sqrt(var);
    }
  }
  if (const int floored = apply_sigma_floor(record); floored > 0) {
    std::ostringstream os;
    os << floored << " sigma entries raised to the shot-noise floor "
       << sigma_floor(record.repeats, record.atoms_per_shot);
    record.warnings.push_back(os.str());
  }
  return record;
}

DensityMatrix run_preparation(const PreparationSchedule& schedule) {
  DensityMatrix rho = schedule.initial;
  for (const auto& seg : schedule.segments) {
    rho = prepare_pulse_state(rho, EvolutionModel(seg.hamiltonian, seg.gamma), seg.duration);
  }
  return rho;
}

PreparationSchedule random_detuning_schedule(const DensityMatrix& initial, const Ladder5& base,
                                             int segments, double segment_duration,
                                             double spread, std::mt19937_64& rng) {
  if (segments < 0 || !(segment_duration >= 0.0) || !(spread >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "invalid random schedule parameters");
  }
  std::uniform_real_distribution<double> offset(-spread, spread);
  PreparationSchedule schedule{initial, {}};
  for (int s = 0; s < segments; ++s) {
    const double d1 = base.delta1 + offset(rng);
    const double d2 = base.delta2 + offset(rng);
    schedule.segments.push_back({segment_duration, Ladder5{base.rabi_omega, d1, d2}, 0.0});
  }
  return schedule;
}

}  // namespace qtomo
