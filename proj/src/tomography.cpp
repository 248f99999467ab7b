#include "tomography.hpp"

#include "error.hpp"
#include "parameterization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace qtomo {

namespace {

constexpr double kTimeTolerance = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

// ---------------------------------------------------------------------------
// MeasurementRecord

void MeasurementRecord::validate() const {
  if (dim <= 0) throw SchemaError("dim", "dimension must be positive");
  const auto m = static_cast<Eigen::Index>(times.size());
  if (m < 2) throw SchemaError("times", "at least two time points are required");
  if (means.rows() != dim || means.cols() != m) {
    throw SchemaError("means", "shape must be dim x number of times");
  }
  if (sigmas.rows() != dim || sigmas.cols() != m) {
    throw SchemaError("sigmas", "shape must be dim x number of times");
  }
  for (Eigen::Index j = 0; j < m; ++j) {
    const double t = times[static_cast<std::size_t>(j)];
    if (!std::isfinite(t) || t < 0.0) throw SchemaError("times", "times must be finite and >= 0");
    if (j > 0 && !(t > times[static_cast<std::size_t>(j - 1)])) {
      throw SchemaError("times", "times must be strictly increasing");
    }
  }
  if (!means.allFinite()) throw SchemaError("means", "populations must be finite");
  if (!sigmas.allFinite() || (sigmas.array() <= 0.0).any()) {
    throw SchemaError("sigmas", "standard deviations must be finite and strictly positive");
  }
  for (Eigen::Index j = 0; j < m; ++j) {
    if (std::abs(means.col(j).sum() - 1.0) > kNormalizationSlack) {
      std::ostringstream os;
      os << "populations at t = " << times[static_cast<std::size_t>(j)]
         << " s do not sum to 1 within " << kNormalizationSlack;
      throw SchemaError("normalization", os.str());
    }
  }
  if (repeats < 1) throw SchemaError("repeats", "repeats must be >= 1");
  if (!(atoms_per_shot > 0.0)) throw SchemaError("atoms_per_shot", "must be positive");
}

MeasurementRecord MeasurementRecord::truncated(double window) const {
  int keep = 0;
  while (keep < num_times() && times[static_cast<std::size_t>(keep)] <= window + kTimeTolerance) ++keep;
  if (keep < 2) {
    std::ostringstream os;
    os << "window " << window << " s contains fewer than two time points";
    throw Error(ErrorCode::EmptyWindow, os.str());
  }
  MeasurementRecord out = *this;
  out.times.resize(static_cast<std::size_t>(keep));
  out.means = means.leftCols(keep);
  out.sigmas = sigmas.leftCols(keep);
  return out;
}

double sigma_floor(int repeats, double atoms_per_shot) {
  return std::max(0.5 / std::sqrt(static_cast<double>(repeats) * atoms_per_shot), kMinimumSigma);
}

int apply_sigma_floor(MeasurementRecord& record) {
  const double floor = sigma_floor(record.repeats, record.atoms_per_shot);
  int changed = 0;
  for (Eigen::Index j = 0; j < record.sigmas.cols(); ++j) {
    for (Eigen::Index i = 0; i < record.sigmas.rows(); ++i) {
      double& s = record.sigmas(i, j);
      if (std::isfinite(s) && s >= 0.0 && s < floor) {
        s = floor;
        ++changed;
      }
    }
  }
  return changed;
}

// ---------------------------------------------------------------------------
// Grid

TimeGrid time_grid(std::span<const double> times, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorCode::InvalidArgument, "grid step must be positive");
  TimeGrid grid{dt, {}};
  grid.steps.reserve(times.size());
  for (double t : times) {
    const double k = std::round(t / dt);
    if (std::abs(k * dt - t) > kTimeTolerance) {
      std::ostringstream os;
      os << "time " << t << " s is not a multiple of the grid step " << dt << " s";
      throw Error(ErrorCode::GridMismatch, os.str());
    }
    grid.steps.push_back(static_cast<long>(k));
  }
  return grid;
}

TimeGrid time_grid(std::span<const double> times) {
  double dt = kInf;
  double prev = 0.0;
  for (double t : times) {
    const double gap = t - prev;
    if (gap > 0.0) dt = std::min(dt, gap);
    prev = t;
  }
  if (!std::isfinite(dt)) throw Error(ErrorCode::GridMismatch, "record times do not define a grid step");
  return time_grid(times, dt);
}

// ---------------------------------------------------------------------------
// Cost

namespace {

RMatrix weights_for(const MeasurementRecord& record, CostNorm norm) {
  if (norm == CostNorm::Unweighted) return RMatrix::Ones(record.dim, record.num_times());
  return record.sigmas.array().square().inverse().matrix();
}

double combine(const RMatrix& predicted, const RMatrix& measured, const RMatrix& weights) {
  const int n = static_cast<int>(measured.rows());
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    double num = 0.0;
    double den = 0.0;
    for (Eigen::Index j = 0; j < measured.cols(); ++j) {
      const double r = predicted(i, j) - measured(i, j);
      num += weights(i, j) * r * r;
      den += weights(i, j);
    }
    total += std::sqrt(num / den);
  }
  return total / n;
}

void check_model(const MeasurementRecord& record, const EvolutionModel& model) {
  if (record.dim != model.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "record and model dimensions differ");
  }
}

}  // namespace

double weighted_error(const DensityMatrix& rho0, const MeasurementRecord& record,
                      const EvolutionModel& model, CostNorm norm) {
  check_model(record, model);
  if (rho0.dim() != record.dim) throw Error(ErrorCode::DimensionMismatch, "state and record dimensions differ");
  const TimeGrid grid = time_grid(record.times);
  const Propagator prop = make_propagator(model, grid.dt);
  const auto states = evolve_trajectory(rho0, prop, grid.steps);
  RMatrix predicted(record.dim, record.num_times());
  for (int j = 0; j < record.num_times(); ++j) predicted.col(j) = populations(states[static_cast<std::size_t>(j)]);
  return combine(predicted, record.means, weights_for(record, norm));
}

TomographyObjective::TomographyObjective(const MeasurementRecord& record,
                                         const EvolutionModel& model, CostNorm norm)
    : dim_(record.dim), num_times_(record.num_times()) {
  check_model(record, model);
  record.validate();
  const int n = dim_;
  const int n2 = n * n;
  const TimeGrid grid = time_grid(record.times);
  const Propagator prop = make_propagator(model, grid.dt);

  readout_.resize(static_cast<Eigen::Index>(n) * num_times_, n2);
  CMatrix power = CMatrix::Identity(n2, n2);
  long at = 0;
  for (int j = 0; j < num_times_; ++j) {
    for (; at < grid.steps[static_cast<std::size_t>(j)]; ++at) power = prop.step() * power;
    for (int i = 0; i < n; ++i) {
      const auto row = power.row(i * n + i);
      const Eigen::Index out = static_cast<Eigen::Index>(j) * n + i;
      int c = 0;
      for (int a = 0; a < n; ++a) readout_(out, c++) = row(a * n + a).real();
      for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
          // rho(a,b) sits at b*n + a; rho(b,a) = conj(rho(a,b)) at a*n + b
          const Complex ab = row(b * n + a);
          const Complex ba = row(a * n + b);
          readout_(out, c++) = ab.real() + ba.real();
          readout_(out, c++) = ba.imag() - ab.imag();
        }
      }
    }
  }
  targets_ = record.means;
  weights_ = weights_for(record, norm);
  weight_sums_ = weights_.rowwise().sum();
}

template <bool Root>
double TomographyObjective::from_coordinates(std::span<const double> coords) const {
  const Eigen::Map<const RVector> x(coords.data(), static_cast<Eigen::Index>(coords.size()));
  const RVector predicted = readout_ * x;
  double total = 0.0;
  for (int i = 0; i < dim_; ++i) {
    double num = 0.0;
    for (int j = 0; j < num_times_; ++j) {
      const double r = predicted[static_cast<Eigen::Index>(j) * dim_ + i] - targets_(i, j);
      num += weights_(i, j) * r * r;
    }
    total += Root ? std::sqrt(num / weight_sums_[i]) : num / weight_sums_[i];
  }
  return total / dim_;
}

double TomographyObjective::operator()(std::span<const double> params) const {
  return evaluate<true>(params);
}

double TomographyObjective::pooled_rms(std::span<const double> params) const {
  return std::sqrt(evaluate<false>(params));
}

bool TomographyObjective::coordinates(std::span<const double> params, RVector& coords,
                                      RMatrix* jacobian) const {
  const int n = dim_;
  const int n2 = n * n;
  if (params.size() != static_cast<std::size_t>(n2)) {
    throw Error(ErrorCode::DimensionMismatch, "parameter vector length must be dim^2");
  }
  // rho = T^dagger T / Tr with T lower triangular, evaluated directly into
  // the Hermitian coordinates.
  CMatrix t = CMatrix::Zero(n, n);
  std::size_t at = 0;
  for (int i = 0; i < n; ++i) t(i, i) = params[at++];
  for (int i = 1; i < n; ++i) {
    for (int j = 0; j < i; ++j) {
      t(i, j) = Complex(params[at], params[at + 1]);
      at += 2;
    }
  }
  coords.resize(n2);
  double trace = 0.0;
  int c = 0;
  for (int a = 0; a < n; ++a) {
    double s = 0.0;
    for (int k = a; k < n; ++k) s += std::norm(t(k, a));
    coords[c++] = s;
    trace += s;
  }
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      Complex s(0.0, 0.0);
      for (int k = b; k < n; ++k) s += std::conj(t(k, a)) * t(k, b);
      coords[c++] = s.real();
      coords[c++] = s.imag();
    }
  }
  if (!(trace >= 1e-300) || !std::isfinite(trace)) return false;
  coords /= trace;
  if (jacobian == nullptr) return true;

  // d(u/tr) = (du - c dtr) / tr for each parameter touching T(p, q) by e.
  RMatrix& jac = *jacobian;
  jac.resize(n2, n2);
  auto column = [&](int col, int p, int q, Complex e) {
    int r = 0;
    double dtrace = 0.0;
    for (int a = 0; a < n; ++a) {
      const double du = a == q ? 2.0 * (std::conj(e) * t(p, a)).real() : 0.0;
      jac(r++, col) = du;
      dtrace += du;
    }
    for (int a = 0; a < n; ++a) {
      for (int b = a + 1; b < n; ++b) {
        Complex du(0.0, 0.0);
        if (a == q) du += std::conj(e) * t(p, b);
        if (b == q) du += std::conj(t(p, a)) * e;
        jac(r++, col) = du.real();
        jac(r++, col) = du.imag();
      }
    }
    jac.col(col) = (jac.col(col) - coords * dtrace) / trace;
  };
  int col = 0;
  for (int i = 0; i < n; ++i) column(col++, i, i, Complex(1.0, 0.0));
  for (int i = 1; i < n; ++i) {
    for (int j = 0; j < i; ++j) {
      column(col++, i, j, Complex(1.0, 0.0));
      column(col++, i, j, Complex(0.0, 1.0));
    }
  }
  return true;
}

template <bool Root>
double TomographyObjective::evaluate(std::span<const double> params) const {
  RVector coords;
  if (!coordinates(params, coords, nullptr)) return std::numeric_limits<double>::quiet_NaN();
  return from_coordinates<Root>(std::span<const double>(coords.data(), static_cast<std::size_t>(coords.size())));
}

RVector TomographyObjective::residuals(std::span<const double> params, RMatrix* jacobian) const {
  RVector coords;
  RMatrix dcoords;
  if (!coordinates(params, coords, jacobian ? &dcoords : nullptr)) return RVector();
  RVector scale(readout_.rows());
  for (int j = 0; j < num_times_; ++j) {
    for (int i = 0; i < dim_; ++i) {
      scale[static_cast<Eigen::Index>(j) * dim_ + i] = std::sqrt(weights_(i, j) / (weight_sums_[i] * dim_));
    }
  }
  RVector r = readout_ * coords;
  for (int j = 0; j < num_times_; ++j) {
    for (int i = 0; i < dim_; ++i) {
      const Eigen::Index row = static_cast<Eigen::Index>(j) * dim_ + i;
      r[row] = scale[row] * (r[row] - targets_(i, j));
    }
  }
  if (jacobian) *jacobian = scale.asDiagonal() * (readout_ * dcoords);
  return r;
}

CMatrix TomographyObjective::linear_estimate() const {
  const int n = dim_;
  RVector scale(readout_.rows());
  RVector target(readout_.rows());
  for (int j = 0; j < num_times_; ++j) {
    for (int i = 0; i < n; ++i) {
      const Eigen::Index row = static_cast<Eigen::Index>(j) * n + i;
      scale[row] = std::sqrt(weights_(i, j) / weight_sums_[i]);
      target[row] = scale[row] * targets_(i, j);
    }
  }
  const RMatrix a = scale.asDiagonal() * readout_;
  const RVector x = a.completeOrthogonalDecomposition().solve(target);
  CMatrix h = CMatrix::Zero(n, n);
  int c = 0;
  for (int i = 0; i < n; ++i) h(i, i) = x[c++];
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      h(i, j) = Complex(x[c], x[c + 1]);
      h(j, i) = std::conj(h(i, j));
      c += 2;
    }
  }
  const double trace = h.trace().real();
  if (std::isfinite(trace) && std::abs(trace) > 1e-12) h /= trace;
  return h;
}

double TomographyObjective::error(const DensityMatrix& rho) const {
  if (rho.dim() != dim_) throw Error(ErrorCode::DimensionMismatch, "state and record dimensions differ");
  const int n = dim_;
  std::vector<double> coords;
  coords.reserve(static_cast<std::size_t>(n * n));
  for (int a = 0; a < n; ++a) coords.push_back(rho(a, a).real());
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      coords.push_back(rho(a, b).real());
      coords.push_back(rho(a, b).imag());
    }
  }
  return from_coordinates<true>(coords);
}

// ---------------------------------------------------------------------------
// Reconstruction

namespace {

ReconstructionResult finish_reconstruction(const MeasurementRecord& record,
                                           const EvolutionModel& model,
                                           const ReconstructOptions& opts, OptResult opt) {
  DensityMatrix rho0 = params_to_rho(record.dim, opt.best_x);
  const double eps = weighted_error(rho0, record, model, opts.norm);
  if (!(eps <= opts.epsilon_ceiling)) {
    std::ostringstream os;
    os << "best reconstruction error " << eps << " exceeds the ceiling " << opts.epsilon_ceiling;
    throw Error(ErrorCode::NoConvergence, os.str());
  }
  return ReconstructionResult{std::move(rho0), eps,          std::move(opt), model.gamma(),
                              0.0,             record.times.back()};
}

// Levenberg-Marquardt on eps itself. With S_i the weighted mean squared
// residual of sublevel i, eps = (1/n) sum_i sqrt(S_i) is majorized at the
// current point by sum_i S_i / (2 n sqrt(S_i^k)) + const, a least-squares
// problem: each iteration rescales the residual rows of sublevel i by
// (2 sqrt(S_i^k))^(-1/2) and takes a damped Gauss-Newton step on them. Steps
// are accepted only if eps decreases. Returns the refined point.
std::vector<double> refine_least_squares(const TomographyObjective& objective,
                                         std::vector<double> x, int iterations) {
  const auto n = static_cast<Eigen::Index>(x.size());
  const int dim = objective.dim();
  RMatrix jac;
  RVector r = objective.residuals(x, &jac);
  if (r.size() == 0) return x;
  const Eigen::Index times = r.size() / dim;

  // per-sublevel S_i (residual rows are ordered time-major)
  auto level_sums = [&](const RVector& res) {
    RVector sums = RVector::Zero(dim);
    for (Eigen::Index j = 0; j < times; ++j) {
      for (int i = 0; i < dim; ++i) sums[i] += res[j * dim + i] * res[j * dim + i];
    }
    return (sums * static_cast<double>(dim)).eval();
  };
  auto eps_of = [&](const RVector& sums) { return sums.cwiseSqrt().sum() / dim; };

  RVector sums = level_sums(r);
  double cost = eps_of(sums);
  double lambda = 1e-3;
  std::vector<double> trial(x.size());
  for (int it = 0; it < iterations && cost > 0.0; ++it) {
    const double floor = 1e-12 * std::max(sums.maxCoeff(), 1e-300);
    RVector row_scale(r.size());
    for (Eigen::Index j = 0; j < times; ++j) {
      for (int i = 0; i < dim; ++i) row_scale[j * dim + i] = 1.0 / std::sqrt(2.0 * std::sqrt(std::max(sums[i], floor)));
    }
    const RMatrix js = row_scale.asDiagonal() * jac;
    const RVector rs = row_scale.cwiseProduct(r);
    const RMatrix jtj = js.transpose() * js;
    const RVector g = js.transpose() * rs;
    bool accepted = false;
    while (lambda < 1e12) {
      RMatrix a = jtj;
      for (Eigen::Index k = 0; k < n; ++k) a(k, k) += lambda * std::max(jtj(k, k), 1e-12);
      const RVector step = a.ldlt().solve(-g);
      for (Eigen::Index k = 0; k < n; ++k) trial[static_cast<std::size_t>(k)] = x[static_cast<std::size_t>(k)] + step[k];
      RMatrix trial_jac;
      const RVector tr = objective.residuals(trial, &trial_jac);
      const RVector trial_sums = tr.size() ? level_sums(tr) : RVector();
      const double trial_cost = tr.size() ? eps_of(trial_sums) : std::numeric_limits<double>::infinity();
      if (std::isfinite(trial_cost) && trial_cost < cost) {
        const double gain = cost - trial_cost;
        x = trial;
        r = tr;
        sums = trial_sums;
        jac = std::move(trial_jac);
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        if (gain <= 1e-15 * cost) return x;
        cost = trial_cost;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) break;
  }
  return x;
}

}  // namespace

namespace {

void refine(const TomographyObjective& objective, const Objective& f, const ReconstructOptions& opts,
            OptResult& best) {
  if (!opts.refine) return;
  const int n = objective.dim();
  std::vector<std::vector<double>> starts{best.best_x};
  try {
    const DensityMatrix linear = project_to_states(objective.linear_estimate());
    starts.push_back(rho_to_params(linear).values);
  } catch (const Error&) {
    // no usable linear estimate; refine the Subplex point only
  }
  for (const auto& start : starts) {
    const std::vector<double> x =
        canonical_params(n, refine_least_squares(objective, start, opts.refine_iterations));
    if (!std::isfinite(f(x))) continue;
    OptResult polished = subplex(f, x, opts.optimizer);
    best.evals += polished.evals;
    if (polished.best_f < best.best_f) {
      best.best_x = canonical_params(n, polished.best_x);
      best.best_f = polished.best_f;
      best.converged_by = polished.converged_by;
      best.trace.emplace_back(best.evals, best.best_f);
    }
  }
}

}  // namespace

ReconstructionResult reconstruct(const MeasurementRecord& record, const EvolutionModel& model,
                                 const ReconstructOptions& opts) {
  const TomographyObjective objective(record, model, opts.norm);
  const int n = record.dim;
  const Objective f = [&objective](std::span<const double> x) { return objective(x); };
  const StartSampler sampler = [n](std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> x(static_cast<std::size_t>(param_count(n)));
    for (double& v : x) v = normal(rng);
    return canonical_params(n, x);
  };
  OptResult best = multi_start(f, sampler, opts.optimizer);
  refine(objective, f, opts, best);
  return finish_reconstruction(record, model, opts, std::move(best));
}

ReconstructionResult reconstruct_from(const MeasurementRecord& record,
                                      const EvolutionModel& model,
                                      std::span<const double> start,
                                      const ReconstructOptions& opts) {
  const TomographyObjective objective(record, model, opts.norm);
  const Objective f = [&objective](std::span<const double> x) { return objective(x); };
  const std::vector<double> x0 = canonical_params(record.dim, start);
  OptResult best = subplex(f, x0, opts.optimizer);
  refine(objective, f, opts, best);
  return finish_reconstruction(record, model, opts, std::move(best));
}

DensityMatrix project_to_states(const CMatrix& hermitian) {
  const CMatrix h = 0.5 * (hermitian + hermitian.adjoint());
  if (!h.allFinite()) throw Error(ErrorCode::InvalidArgument, "matrix has non-finite entries");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  const RVector v = es.eigenvalues();
  const Eigen::Index n = v.size();
  // Euclidean projection onto {p >= 0, sum p = 1}.
  std::vector<double> sorted(v.data(), v.data() + n);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double shift = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    cumulative += sorted[static_cast<std::size_t>(k)];
    const double candidate = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (sorted[static_cast<std::size_t>(k)] - candidate > 0.0) shift = candidate;
  }
  const RVector p = (v.array() - shift).max(0.0).matrix();
  CMatrix rho = es.eigenvectors() * p.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
  rho = 0.5 * (rho + rho.adjoint());
  return DensityMatrix(rho / rho.trace().real());
}

DensityMatrix prepare_pulse_state(const DensityMatrix& initial, const EvolutionModel& model,
                                  double duration) {
  if (!(duration >= 0.0) || !std::isfinite(duration)) {
    throw Error(ErrorCode::InvalidArgument, "duration must be finite and >= 0");
  }
  if (duration == 0.0) return initial;
  return evolve(initial, make_propagator(model, duration), 1);
}

std::vector<ConvergencePoint> convergence_study(const MeasurementRecord& record,
                                               const EvolutionModel& model,
                                               const ReconstructOptions& opts,
                                               std::vector<double> windows,
                                               const std::optional<DensityMatrix>& reference) {
  if (reference && reference->dim() != record.dim) {
    throw Error(ErrorCode::DimensionMismatch, "reference and record dimensions differ");
  }
  std::stable_sort(windows.begin(), windows.end());
  std::vector<ConvergencePoint> out;
  out.reserve(windows.size());
  for (double window : windows) {
    if (!std::isfinite(window) || window > record.times.back() + kTimeTolerance) {
      throw Error(ErrorCode::InvalidArgument, "window extends past the record");
    }
    ReconstructionResult r = reconstruct(record.truncated(window), model, opts);
    std::optional<double> infidelity;
    if (reference) infidelity = 1.0 - uhlmann_fidelity(r.rho0, *reference);
    out.push_back(ConvergencePoint{window, r.epsilon, infidelity, std::move(r.rho0)});
  }
  return out;
}

int sweep_argmin(const RMatrix& surface, int row, std::span<const double> gammas) {
  int best = -1;
  for (int g = 0; g < static_cast<int>(surface.cols()); ++g) {
    const double e = surface(row, g);
    if (best < 0) {
      best = g;
      continue;
    }
    const double b = surface(row, best);
    if (e < b || (e == b && gammas[static_cast<std::size_t>(g)] < gammas[static_cast<std::size_t>(best)])) best = g;
  }
  return best;
}

GammaSweepResult sweep_gamma(const MeasurementRecord& record, const EvolutionModel& model,
                             std::vector<double> windows, std::vector<double> gammas,
                             const ReconstructOptions& opts) {
  if (gammas.empty()) throw Error(ErrorCode::InvalidArgument, "gamma grid is empty");
  if (windows.empty()) throw Error(ErrorCode::InvalidArgument, "window list is empty");
  for (double g : gammas) {
    if (!(g >= 0.0) || !std::isfinite(g)) throw Error(ErrorCode::InvalidArgument, "gammas must be finite and >= 0");
  }
  for (double w : windows) {
    if (!std::isfinite(w) || w > record.times.back() + kTimeTolerance) {
      throw Error(ErrorCode::InvalidArgument, "window extends past the record");
    }
  }
  GammaSweepResult out;
  out.windows = std::move(windows);
  out.gammas = std::move(gammas);
  const auto nw = static_cast<Eigen::Index>(out.windows.size());
  const auto ng = static_cast<Eigen::Index>(out.gammas.size());
  out.error_surface = RMatrix::Constant(nw, ng, kInf);
  for (Eigen::Index k = 0; k < nw; ++k) {
    const MeasurementRecord window = record.truncated(out.windows[static_cast<std::size_t>(k)]);
    for (Eigen::Index g = 0; g < ng; ++g) {
      try {
        const EvolutionModel cell = model.with_gamma(out.gammas[static_cast<std::size_t>(g)]);
        out.error_surface(k, g) = reconstruct(window, cell, opts).epsilon;
      } catch (const Error&) {
        // failed cells stay at +inf
      }
    }
    const int best = sweep_argmin(out.error_surface, static_cast<int>(k), out.gammas);
    out.gamma_opt_index.push_back(best);
    out.gamma_opt.push_back(out.gammas[static_cast<std::size_t>(best)]);
  }
  return out;
}

std::vector<double> linspace(double first, double last, int count) {
  if (count < 1) throw Error(ErrorCode::InvalidArgument, "linspace needs at least one point");
  if (count == 1) return {first};
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    out[static_cast<std::size_t>(i)] = first + (last - first) * i / (count - 1);
  }
  out.back() = last;
  return out;
}

}  // namespace qtomo
