#include "error.hpp"
#include "optimizer.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

using namespace qtomo;

namespace {

double sphere(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

double rosenbrock(std::span<const double> x) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    s += 100.0 * std::pow(x[i + 1] - x[i] * x[i], 2) + std::pow(1.0 - x[i], 2);
  }
  return s;
}

// sum_i (i+1) (x_i - 1)^2
double separable(std::span<const double> x) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += static_cast<double>(i + 1) * (x[i] - 1.0) * (x[i] - 1.0);
  return s;
}

bool same_result(const OptResult& a, const OptResult& b) {
  return a.best_x == b.best_x && a.best_f == b.best_f && a.evals == b.evals &&
         a.converged_by == b.converged_by && a.per_restart_f == b.per_restart_f && a.trace == b.trace;
}

StartSampler uniform_box(int n, double lo, double hi) {
  return [=](std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> x(static_cast<std::size_t>(n));
    for (double& v : x) v = u(rng);
    return x;
  };
}

}  // namespace

TEST(NelderMead, Sphere) {
  const std::vector<double> x0{1.0, 1.0, 1.0};
  const OptResult r = nelder_mead(sphere, x0, SimplexConfig{});
  EXPECT_LT(r.best_f, 1e-10);
  for (double v : r.best_x) EXPECT_LT(std::abs(v), 1e-4);
}

TEST(NelderMead, Rosenbrock2D) {
  const std::vector<double> x0{-1.2, 1.0};
  const OptResult r = nelder_mead(rosenbrock, x0, SimplexConfig{});
  EXPECT_LT(r.best_f, 1e-6);
  EXPECT_NEAR(r.best_x[0], 1.0, 1e-3);
  EXPECT_NEAR(r.best_x[1], 1.0, 1e-3);
}

TEST(NelderMead, ConstantConvergesByFTol) {
  const std::vector<double> x0{0.3, -0.2};
  const OptResult r = nelder_mead([](std::span<const double>) { return 4.0; }, x0, SimplexConfig{});
  EXPECT_EQ(r.converged_by, Termination::FTol);
  EXPECT_EQ(r.best_f, 4.0);
}

TEST(NelderMead, NonFinitePolicy) {
  // a single NaN region is treated as +inf; the search moves away from it
  const std::vector<double> x0{2.0, 2.0};
  const OptResult r = nelder_mead(
      [](std::span<const double> x) { return x[0] > 2.05 ? std::nan("") : sphere(x); }, x0, SimplexConfig{});
  EXPECT_LT(r.best_f, 1e-8);
  // an objective that is never finite cannot be minimized
  try {
    nelder_mead([](std::span<const double>) { return std::nan(""); }, x0, SimplexConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonFiniteObjective);
  }
}

TEST(NelderMead, ConfigValidation) {
  SimplexConfig c;
  c.expansion = 0.5;
  EXPECT_THROW(c.validate(), Error);
  c = SimplexConfig{};
  c.contraction = 1.0;
  EXPECT_THROW(c.validate(), Error);
  c = SimplexConfig{};
  c.x_tol = 0.0;
  EXPECT_THROW(c.validate(), Error);
  SubplexConfig s;
  s.restarts = 0;
  EXPECT_THROW(s.validate(), Error);
}

TEST(Subplex, SeparableQuadraticBeatsNelderMead) {
  const std::vector<double> x0(25, 0.0);
  SubplexConfig cfg;
  const OptResult sp = subplex(separable, x0, cfg);
  const OptResult nm = nelder_mead(separable, x0, cfg.simplex, cfg.initial_step);
  EXPECT_LT(sp.best_f, 1e-8);
  EXPECT_LT(sp.evals, nm.evals);
}

TEST(Subplex, SmallDimensionIsNelderMead) {
  const std::vector<double> x0{-1.2, 1.0, 0.5};
  SubplexConfig cfg;
  const OptResult sp = subplex(rosenbrock, x0, cfg);
  const OptResult nm = nelder_mead(rosenbrock, x0, cfg.simplex, cfg.initial_step);
  EXPECT_TRUE(same_result(sp, nm));
}

TEST(Subplex, RosenbrockChain10) {
  const std::vector<double> x0(10, 0.0);
  SubplexConfig cfg;
  cfg.simplex.max_evals = 100000;
  const OptResult r = subplex(rosenbrock, x0, cfg);
  EXPECT_LE(r.evals, 100000);
  EXPECT_LT(r.best_f, 1e-4);
}

TEST(Subplex, PartitionCoversEveryCoordinateOnce) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n : {2, 5, 7, 13, 25}) {
    std::vector<double> progress(static_cast<std::size_t>(n));
    for (double& v : progress) v = u(rng);
    const auto parts = subplex_partition(progress, 2, 5);
    std::multiset<int> seen;
    for (const auto& p : parts) {
      EXPECT_GE(static_cast<int>(p.size()), std::min(2, n));
      EXPECT_LE(static_cast<int>(p.size()), 5);
      seen.insert(p.begin(), p.end());
    }
    EXPECT_EQ(static_cast<int>(seen.size()), n);
    EXPECT_EQ(std::set<int>(seen.begin(), seen.end()).size(), seen.size());
  }
}

TEST(Subplex, PartitionGroupsLargestProgressFirst) {
  const std::vector<double> progress{0.1, 5.0, 0.2, 4.0, 0.3, 0.15};
  const auto parts = subplex_partition(progress, 2, 3);
  ASSERT_FALSE(parts.empty());
  std::set<int> first(parts[0].begin(), parts[0].end());
  EXPECT_TRUE(first.count(1));
  EXPECT_TRUE(first.count(3));
}

TEST(MultiStart, SingleRestartMatchesSubplex) {
  SubplexConfig cfg;
  cfg.restarts = 1;
  cfg.rng_seed = 42;
  const StartSampler sampler = uniform_box(6, -2.0, 2.0);
  std::mt19937_64 rng(42);
  const std::vector<double> x0 = sampler(rng);
  const OptResult ms = multi_start(rosenbrock, sampler, cfg);
  const OptResult sp = subplex(rosenbrock, x0, cfg);
  EXPECT_EQ(ms.best_x, sp.best_x);
  EXPECT_EQ(ms.best_f, sp.best_f);
  EXPECT_EQ(ms.evals, sp.evals);
}

TEST(MultiStart, FindsGlobalBasinOfMultimodal) {
  const auto f = [](std::span<const double> x) { return std::sin(5.0 * x[0]) + 0.1 * x[0] * x[0]; };
  SubplexConfig cfg;
  cfg.restarts = 32;
  cfg.rng_seed = 5;
  const OptResult r = multi_start(f, uniform_box(1, -10.0, 10.0), cfg);
  double grid_best = 1e300;
  for (int k = -10000; k <= 10000; ++k) {
    const double x = k * 1e-3;
    grid_best = std::min(grid_best, f(std::span<const double>(&x, 1)));
  }
  EXPECT_NEAR(r.best_f, grid_best, 1e-4);
}

TEST(OptimizerProperty, TraceIsMonotone) {
  std::mt19937_64 rng(20);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x0(8);
    for (double& v : x0) v = u(rng);
    for (const OptResult& r : {nelder_mead(rosenbrock, x0, SimplexConfig{}), subplex(rosenbrock, x0, SubplexConfig{})}) {
      for (std::size_t k = 1; k < r.trace.size(); ++k) {
        ASSERT_GE(r.trace[k].first, r.trace[k - 1].first);
        ASSERT_LE(r.trace[k].second, r.trace[k - 1].second);
      }
      ASSERT_FALSE(r.trace.empty());
      ASSERT_EQ(r.trace.back().second, r.best_f);
    }
  }
}

TEST(OptimizerProperty, BudgetRespected) {
  for (long budget : {10L, 57L, 300L, 2000L}) {
    SubplexConfig cfg;
    cfg.simplex.max_evals = budget;
    const std::vector<double> x0(12, -0.5);
    const OptResult sp = subplex(rosenbrock, x0, cfg);
    const OptResult nm = nelder_mead(rosenbrock, x0, cfg.simplex);
    ASSERT_LE(sp.evals, budget + 13);
    ASSERT_LE(nm.evals, budget + 13);
    ASSERT_EQ(sp.converged_by, Termination::MaxEvals);
  }
}

TEST(OptimizerProperty, Determinism) {
  SubplexConfig cfg;
  cfg.restarts = 6;
  cfg.rng_seed = 99;
  cfg.threads = 1;
  const OptResult a = multi_start(rosenbrock, uniform_box(5, -2.0, 2.0), cfg);
  const OptResult b = multi_start(rosenbrock, uniform_box(5, -2.0, 2.0), cfg);
  EXPECT_TRUE(same_result(a, b));
  cfg.threads = 3;
  const OptResult c = multi_start(rosenbrock, uniform_box(5, -2.0, 2.0), cfg);
  EXPECT_TRUE(same_result(a, c));
  cfg.rng_seed = 100;
  const OptResult d = multi_start(rosenbrock, uniform_box(5, -2.0, 2.0), cfg);
  EXPECT_NE(a.per_restart_f, d.per_restart_f);
}

TEST(OptimizerProperty, ScaleSanity) {
  // objectives with a single minimum, so both runs must reach the same value
  const double c = 10.0;
  const auto check = [c](const auto& f, std::vector<double> x0) {
    std::vector<double> y0 = x0;
    for (double& v : y0) v /= c;
    const auto scaled = [&](std::span<const double> y) {
      std::vector<double> x(y.begin(), y.end());
      for (double& v : x) v *= c;
      return f(x);
    };
    SubplexConfig cfg;
    const OptResult a = subplex(f, x0, cfg);
    const OptResult b = subplex(scaled, y0, cfg);
    EXPECT_NEAR(a.best_f, b.best_f, 1e-6);
  };
  check(rosenbrock, {-1.2, 1.0});
  check(rosenbrock, {2.0, -1.5});
  check(separable, std::vector<double>(12, -0.7));
  check(sphere, {3.0, -2.0, 0.5, 1.0, 4.0, -1.0, 2.5});
}
