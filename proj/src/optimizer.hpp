#pragma once

// Derivative-free minimization: Nelder-Mead, Rowan's Subplex and a seeded
// multi-start driver around it.

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace qtomo {

/// Objective over real vectors. Must be callable concurrently when used with
/// multi_start on more than one thread.
using Objective = std::function<double(std::span<const double>)>;

struct SimplexConfig {
  double reflection = 1.0;
  double expansion = 2.0;
  double contraction = 0.5;
  double shrink = 0.5;
  double x_tol = 1e-8;
  double f_tol = 1e-12;
  long max_evals = 200000;

  void validate() const;
};

struct SubplexConfig {
  SimplexConfig simplex;
  int nsmin = 2;
  int nsmax = 5;
  double initial_step = 0.1;
  int restarts = 32;
  std::uint64_t rng_seed = 0;
  /// Inner simplex runs stop once their size shrinks by this factor (psi).
  double step_reduction = 0.25;
  /// Bound on the per-cycle step rescaling (omega).
  double step_bound = 0.1;
  /// Worker threads for multi_start; 0 picks the hardware concurrency.
  unsigned threads = 0;

  void validate() const;
};

enum class Termination { XTol, FTol, MaxEvals };

const char* to_string(Termination t) noexcept;

struct OptResult {
  std::vector<double> best_x;
  double best_f = 0.0;
  long evals = 0;
  Termination converged_by = Termination::MaxEvals;
  std::vector<double> per_restart_f;
  /// (evaluations so far, best value so far), one entry per iteration/cycle.
  std::vector<std::pair<long, double>> trace;
};

/// Whole-space Nelder-Mead with the initial simplex x0 + initial_step * e_i.
OptResult nelder_mead(const Objective& f, std::span<const double> x0,
                      const SimplexConfig& cfg, double initial_step = 0.1);

/// Subplex; nsmin/nsmax are clamped to the problem dimension. When a single
/// subspace covers every coordinate this is exactly nelder_mead.
OptResult subplex(const Objective& f, std::span<const double> x0,
                  const SubplexConfig& cfg);

/// Draws one starting point per call.
using StartSampler = std::function<std::vector<double>(std::mt19937_64&)>;

/// Runs subplex from cfg.restarts points drawn from `sampler` with an engine
/// seeded by cfg.rng_seed. Starts are drawn sequentially before any run, so
/// results are independent of the thread count.
OptResult multi_start(const Objective& f, const StartSampler& sampler,
                      const SubplexConfig& cfg);

/// Coordinate blocks chosen by Subplex for a progress vector, in processing
/// order. Exposed for testing.
std::vector<std::vector<int>> subplex_partition(std::span<const double> progress,
                                                int nsmin, int nsmax);

}  // namespace qtomo
