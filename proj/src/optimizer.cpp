#include "optimizer.hpp"

#include "error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <thread>

namespace qtomo {

namespace {

using Vec = Eigen::VectorXd;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct BudgetExhausted {};

// Counts evaluations against the budget and applies the non-finite policy:
// one non-finite value reads as +inf, a second one in a row aborts.
class CountedObjective {
 public:
  CountedObjective(const Objective& f, long max_evals) : f_(f), max_evals_(max_evals) {}

  double operator()(const Vec& x) {
    if (evals_ >= max_evals_) throw BudgetExhausted{};
    ++evals_;
    const double v = f_(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
    if (!std::isfinite(v)) {
      if (previous_non_finite_) {
        throw Error(ErrorCode::NonFiniteObjective, "objective returned non-finite values repeatedly");
      }
      previous_non_finite_ = true;
      return kInf;
    }
    previous_non_finite_ = false;
    return v;
  }

  long evals() const { return evals_; }

 private:
  const Objective& f_;
  long max_evals_;
  long evals_ = 0;
  bool previous_non_finite_ = false;
};

struct SimplexStop {
  double diameter;  // absolute
  double spread;    // absolute
};

struct SimplexOutcome {
  Vec x;
  double f;
  Termination why;
};

using Trace = std::vector<std::pair<long, double>>;

// Nelder-Mead over `dim` coordinates. `eval` maps a point of this space to
// the objective through `counted`.
template <class Eval>
SimplexOutcome run_simplex(Eval&& eval, const CountedObjective& counted, const Vec& x0,
                           double f0, const Vec& steps, const SimplexConfig& c,
                           const SimplexStop& stop, Trace* trace) {
  const Eigen::Index n = x0.size();
  std::vector<Vec> pts(static_cast<std::size_t>(n + 1), x0);
  std::vector<double> fv(static_cast<std::size_t>(n + 1), f0);
  std::vector<std::size_t> order(pts.size());

  std::size_t best = 0;
  auto best_outcome = [&](Termination why) {
    return SimplexOutcome{pts[best], fv[best], why};
  };

  try {
    for (Eigen::Index i = 0; i < n; ++i) {
      Vec p = x0;
      p[i] += steps[i];
      const double fp = eval(p);
      pts[static_cast<std::size_t>(i + 1)] = std::move(p);
      fv[static_cast<std::size_t>(i + 1)] = fp;
      if (fv[static_cast<std::size_t>(i + 1)] < fv[best]) best = static_cast<std::size_t>(i + 1);
    }

    for (;;) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
      {
        std::vector<Vec> p2;
        std::vector<double> f2;
        p2.reserve(pts.size());
        f2.reserve(pts.size());
        for (std::size_t k : order) {
          p2.push_back(std::move(pts[k]));
          f2.push_back(fv[k]);
        }
        pts = std::move(p2);
        fv = std::move(f2);
        best = 0;
      }
      if (trace) trace->emplace_back(counted.evals(), fv[0]);

      double diameter = 0.0;
      for (std::size_t k = 1; k < pts.size(); ++k) {
        diameter = std::max(diameter, (pts[k] - pts[0]).cwiseAbs().maxCoeff());
      }
      if (diameter <= stop.diameter) return best_outcome(Termination::XTol);
      if (fv.back() - fv.front() <= stop.spread) return best_outcome(Termination::FTol);

      const std::size_t worst = pts.size() - 1;
      Vec centroid = Vec::Zero(n);
      for (std::size_t k = 0; k < worst; ++k) centroid += pts[k];
      centroid /= static_cast<double>(n);

      const Vec xr = centroid + c.reflection * (centroid - pts[worst]);
      const double fr = eval(xr);
      if (fr < fv[0]) {
        const Vec xe = centroid + c.expansion * (xr - centroid);
        const double fe = eval(xe);
        if (fe < fr) {
          pts[worst] = xe;
          fv[worst] = fe;
        } else {
          pts[worst] = xr;
          fv[worst] = fr;
        }
        continue;
      }
      if (fr < fv[worst - 1]) {
        pts[worst] = xr;
        fv[worst] = fr;
        continue;
      }
      bool accepted = false;
      if (fr < fv[worst]) {
        const Vec xc = centroid + c.contraction * (xr - centroid);
        const double fc = eval(xc);
        if (fc <= fr) {
          pts[worst] = xc;
          fv[worst] = fc;
          accepted = true;
        }
      } else {
        const Vec xc = centroid + c.contraction * (pts[worst] - centroid);
        const double fc = eval(xc);
        if (fc < fv[worst]) {
          pts[worst] = xc;
          fv[worst] = fc;
          accepted = true;
        }
      }
      if (!accepted) {
        for (std::size_t k = 1; k < pts.size(); ++k) {
          Vec p = pts[0] + c.shrink * (pts[k] - pts[0]);
          const double fp = eval(p);
          pts[k] = std::move(p);
          fv[k] = fp;
        }
      }
    }
  } catch (const BudgetExhausted&) {
    best = static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin());
    return best_outcome(Termination::MaxEvals);
  }
}

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

bool splittable(int m, int nsmin, int nsmax) {
  if (m == 0) return true;
  if (m < nsmin) return false;
  const int parts = (m + nsmax - 1) / nsmax;
  return parts * nsmin <= m;
}

}  // namespace

const char* to_string(Termination t) noexcept {
  switch (t) {
    case Termination::XTol: return "XTol";
    case Termination::FTol: return "FTol";
    case Termination::MaxEvals: return "MaxEvals";
  }
  return "Unknown";
}

void SimplexConfig::validate() const {
  const bool ok = reflection > 0.0 && expansion > 1.0 && contraction > 0.0 &&
                  contraction < 1.0 && shrink > 0.0 && shrink < 1.0 && x_tol > 0.0 &&
                  f_tol > 0.0 && max_evals > 0 && expansion > reflection;
  if (!ok) throw Error(ErrorCode::InvalidArgument, "invalid simplex coefficients or tolerances");
}

void SubplexConfig::validate() const {
  simplex.validate();
  if (nsmin < 1 || nsmax < nsmin) {
    throw Error(ErrorCode::InvalidArgument, "subspace bounds must satisfy 1 <= nsmin <= nsmax");
  }
  if (!(initial_step > 0.0) || !std::isfinite(initial_step)) {
    throw Error(ErrorCode::InvalidArgument, "initial step must be positive");
  }
  if (restarts < 1) throw Error(ErrorCode::InvalidArgument, "restarts must be >= 1");
  if (!(step_reduction > 0.0 && step_reduction < 1.0) ||
      !(step_bound > 0.0 && step_bound < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "step adaptation factors must lie in (0, 1)");
  }
}

OptResult nelder_mead(const Objective& f, std::span<const double> x0, const SimplexConfig& cfg,
                      double initial_step) {
  cfg.validate();
  if (x0.empty()) throw Error(ErrorCode::InvalidArgument, "empty starting point");
  if (!(initial_step > 0.0)) throw Error(ErrorCode::InvalidArgument, "initial step must be positive");
  const Vec start = Eigen::Map<const Vec>(x0.data(), static_cast<Eigen::Index>(x0.size()));
  if (!start.allFinite()) throw Error(ErrorCode::InvalidArgument, "starting point must be finite");

  CountedObjective counted(f, cfg.max_evals);
  OptResult out;
  double f0 = kInf;
  try {
    f0 = counted(start);
  } catch (const BudgetExhausted&) {
  }
  if (counted.evals() == 0) {
    out.best_x = to_std(start);
    out.best_f = kInf;
    out.converged_by = Termination::MaxEvals;
    out.per_restart_f = {out.best_f};
    return out;
  }
  const Vec steps = Vec::Constant(start.size(), initial_step);
  auto eval = [&](const Vec& x) { return counted(x); };
  const SimplexOutcome r = run_simplex(eval, counted, start, f0, steps, cfg,
                                       SimplexStop{cfg.x_tol, cfg.f_tol}, &out.trace);
  out.best_x = to_std(r.x);
  out.best_f = r.f;
  out.evals = counted.evals();
  out.converged_by = r.why;
  out.per_restart_f = {r.f};
  return out;
}

std::vector<std::vector<int>> subplex_partition(std::span<const double> progress, int nsmin,
                                                int nsmax) {
  const int n = static_cast<int>(progress.size());
  nsmin = std::min(nsmin, n);
  nsmax = std::min(nsmax, n);
  if (n == 0 || nsmin < 1 || nsmax < nsmin || !splittable(n, nsmin, nsmax)) {
    throw Error(ErrorCode::InvalidArgument, "dimension cannot be split into subspaces");
  }
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(progress[static_cast<std::size_t>(a)]) >
           std::abs(progress[static_cast<std::size_t>(b)]);
  });
  std::vector<double> mag(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) mag[static_cast<std::size_t>(i)] =
      std::abs(progress[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);

  std::vector<std::vector<int>> parts;
  int i = 0;
  while (i < n) {
    const int remaining = n - i;
    int chosen = -1;
    double best_goodness = -kInf;
    for (int k = nsmin; k <= std::min(nsmax, remaining); ++k) {
      if (!splittable(remaining - k, nsmin, nsmax)) continue;
      double head = 0.0;
      double tail = 0.0;
      for (int m = i; m < i + k; ++m) head += mag[static_cast<std::size_t>(m)];
      for (int m = i + k; m < n; ++m) tail += mag[static_cast<std::size_t>(m)];
      double goodness = head / k;
      if (remaining > k) goodness -= tail / (remaining - k);
      if (goodness > best_goodness) {
        best_goodness = goodness;
        chosen = k;
      }
    }
    parts.emplace_back(order.begin() + i, order.begin() + i + chosen);
    i += chosen;
  }
  return parts;
}

OptResult subplex(const Objective& f, std::span<const double> x0, const SubplexConfig& cfg) {
  cfg.validate();
  const int n = static_cast<int>(x0.size());
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "empty starting point");
  const int nsmin = std::min(cfg.nsmin, n);
  const int nsmax = std::min(cfg.nsmax, n);
  if (nsmax >= n) return nelder_mead(f, x0, cfg.simplex, cfg.initial_step);

  Vec x = Eigen::Map<const Vec>(x0.data(), n);
  if (!x.allFinite()) throw Error(ErrorCode::InvalidArgument, "starting point must be finite");

  const double psi = cfg.step_reduction;
  const double omega = cfg.step_bound;
  CountedObjective counted(f, cfg.simplex.max_evals);
  OptResult out;

  auto finish = [&](Termination why, double fx) {
    out.best_x = to_std(x);
    out.best_f = fx;
    out.evals = counted.evals();
    out.converged_by = why;
    out.per_restart_f = {fx};
    return out;
  };

  double fx = kInf;
  try {
    fx = counted(x);
  } catch (const BudgetExhausted&) {
    return finish(Termination::MaxEvals, fx);
  }
  out.trace.emplace_back(counted.evals(), fx);

  Vec step = Vec::Constant(n, cfg.initial_step);
  Vec progress = step;
  Vec full = x;

  for (;;) {
    const Vec xprev = x;
    const double fprev = fx;
    const auto parts = subplex_partition(
        std::span<const double>(progress.data(), static_cast<std::size_t>(n)), nsmin, nsmax);

    for (const auto& part : parts) {
      const auto k = static_cast<Eigen::Index>(part.size());
      Vec sub(k);
      Vec sub_steps(k);
      for (Eigen::Index m = 0; m < k; ++m) {
        sub[m] = x[part[static_cast<std::size_t>(m)]];
        sub_steps[m] = step[part[static_cast<std::size_t>(m)]];
      }
      full = x;
      auto eval = [&](const Vec& y) {
        for (Eigen::Index m = 0; m < k; ++m) full[part[static_cast<std::size_t>(m)]] = y[m];
        return counted(full);
      };
      const double size0 = sub_steps.cwiseAbs().maxCoeff();
      const SimplexOutcome r =
          run_simplex(eval, counted, sub, fx, sub_steps, cfg.simplex,
                      SimplexStop{psi * size0, cfg.simplex.f_tol}, nullptr);
      if (r.f <= fx) {
        for (Eigen::Index m = 0; m < k; ++m) x[part[static_cast<std::size_t>(m)]] = r.x[m];
        fx = r.f;
      }
      if (r.why == Termination::MaxEvals) {
        out.trace.emplace_back(counted.evals(), fx);
        return finish(Termination::MaxEvals, fx);
      }
    }
    out.trace.emplace_back(counted.evals(), fx);

    const Vec dx = x - xprev;
    bool small_step = true;
    for (int i = 0; i < n; ++i) {
      const double scale = std::max(1.0, std::abs(x[i]));
      if (std::max(std::abs(dx[i]), psi * std::abs(step[i])) > cfg.simplex.x_tol * scale) {
        small_step = false;
        break;
      }
    }
    if (small_step) return finish(Termination::XTol, fx);
    // A cycle without any progress only means the steps were too coarse; the
    // rescaling below shrinks them.
    const double gain = fprev - fx;
    if (gain > 0.0 && gain <= cfg.simplex.f_tol) return finish(Termination::FTol, fx);

    double scale = psi;
    if (parts.size() > 1) {
      const double ratio = dx.lpNorm<1>() / step.lpNorm<1>();
      scale = std::clamp(ratio, omega, 1.0 / omega);
    }
    for (int i = 0; i < n; ++i) {
      const double mag = std::abs(step[i]) * scale;
      step[i] = dx[i] != 0.0 ? std::copysign(mag, dx[i]) : -step[i] * scale;
    }
    progress = dx;
  }
}

OptResult multi_start(const Objective& f, const StartSampler& sampler, const SubplexConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.rng_seed);
  std::vector<std::vector<double>> starts;
  starts.reserve(static_cast<std::size_t>(cfg.restarts));
  for (int r = 0; r < cfg.restarts; ++r) starts.push_back(sampler(rng));

  const std::size_t count = starts.size();
  std::vector<OptResult> results(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        results[i] = subplex(f, starts[i], cfg);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  unsigned threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  OptResult out;
  out.per_restart_f.assign(count, kInf);
  std::size_t best = count;
  for (std::size_t i = 0; i < count; ++i) {
    if (errors[i]) continue;
    out.evals += results[i].evals;
    out.per_restart_f[i] = results[i].best_f;
    if (best == count || results[i].best_f < results[best].best_f) best = i;
  }
  if (best == count) std::rethrow_exception(errors.front());
  out.best_x = results[best].best_x;
  out.best_f = results[best].best_f;
  out.converged_by = results[best].converged_by;
  out.trace = std::move(results[best].trace);
  return out;
}

}  // namespace qtomo
