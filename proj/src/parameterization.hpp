#pragma once

// Unconstrained real coordinates for density matrices.
//
// A vector of n^2 reals fills a lower-triangular factor T: the first n values
// are the (real) diagonal, followed by (re, im) pairs for the strictly lower
// entries in row-major order. The state is T^dagger T / Tr(T^dagger T), so any
// finite non-zero vector is a valid density matrix and c * p maps to the same
// state for every c != 0.

#include "dynamics.hpp"

#include <span>
#include <vector>

namespace qtomo {

struct StateParams {
  int dim = 0;
  std::vector<double> values;
};

inline constexpr int param_count(int dim) { return dim * dim; }

/// Lower-triangular factor encoded by `values` (unnormalized).
CMatrix params_to_factor(int dim, std::span<const double> values);

DensityMatrix params_to_rho(const StateParams& p);
DensityMatrix params_to_rho(int dim, std::span<const double> values);

/// Representative of the gauge orbit of `values`: unit Euclidean norm and
/// every row of T flipped so its diagonal entry is non-negative. Both
/// operations leave params_to_rho unchanged.
std::vector<double> canonical_params(int dim, std::span<const double> values);

/// Inverse up to gauge: returns the unit-trace factor with positive diagonal.
/// Rank-deficient input is regularized with a 1e-12 diagonal jitter.
StateParams rho_to_params(const DensityMatrix& rho);

}  // namespace qtomo
