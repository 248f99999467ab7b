#include "parameterization.hpp"

#include "error.hpp"

#include <cmath>

namespace qtomo {

namespace {

constexpr double kDegenerateTrace = 1e-300;
constexpr double kJitter = 1e-12;

}  // namespace

CMatrix params_to_factor(int dim, std::span<const double> values) {
  if (dim <= 0) throw Error(ErrorCode::InvalidArgument, "dimension must be positive");
  if (values.size() != static_cast<std::size_t>(param_count(dim))) {
    throw Error(ErrorCode::DimensionMismatch, "parameter vector length must be dim^2");
  }
  CMatrix t = CMatrix::Zero(dim, dim);
  std::size_t at = 0;
  for (int i = 0; i < dim; ++i) t(i, i) = values[at++];
  for (int i = 1; i < dim; ++i) {
    for (int j = 0; j < i; ++j) {
      t(i, j) = Complex(values[at], values[at + 1]);
      at += 2;
    }
  }
  return t;
}

DensityMatrix params_to_rho(int dim, std::span<const double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "parameters must be finite");
  }
  const CMatrix t = params_to_factor(dim, values);
  CMatrix rho = t.adjoint() * t;
  const double tr = rho.trace().real();
  if (!(tr >= kDegenerateTrace) || !std::isfinite(tr)) {
    throw Error(ErrorCode::DegenerateParams, "parameter vector encodes a zero factor");
  }
  rho /= tr;
  // T^dagger T is Hermitian up to rounding in the off-diagonal sums.
  rho = 0.5 * (rho + rho.adjoint()).eval();
  return trusted_density(std::move(rho));
}

DensityMatrix params_to_rho(const StateParams& p) {
  return params_to_rho(p.dim, p.values);
}

std::vector<double> canonical_params(int dim, std::span<const double> values) {
  const CMatrix t = params_to_factor(dim, values);
  double norm = 0.0;
  for (double v : values) norm += v * v;
  norm = std::sqrt(norm);
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw Error(ErrorCode::DegenerateParams, "cannot canonicalize a zero parameter vector");
  }
  std::vector<double> out(values.begin(), values.end());
  std::size_t at = static_cast<std::size_t>(dim);
  for (int i = 0; i < dim; ++i) {
    const double sign = t(i, i).real() < 0.0 ? -1.0 : 1.0;
    out[static_cast<std::size_t>(i)] *= sign / norm;
  }
  for (int i = 1; i < dim; ++i) {
    const double sign = t(i, i).real() < 0.0 ? -1.0 : 1.0;
    for (int j = 0; j < i; ++j) {
      out[at] *= sign / norm;
      out[at + 1] *= sign / norm;
      at += 2;
    }
  }
  return out;
}

StateParams rho_to_params(const DensityMatrix& rho) {
  const int n = rho.dim();
  // rho = T^dagger T with T lower triangular is an upper Cholesky factor of
  // the index-reversed matrix: J rho J = L L^dagger gives T = (J L J)^dagger.
  const CMatrix reversed = rho.matrix().colwise().reverse().rowwise().reverse();

  auto factor = [&](const CMatrix& m, CMatrix& lower) {
    Eigen::LLT<CMatrix> llt(m);
    if (llt.info() != Eigen::Success) return false;
    lower = llt.matrixL();
    if (!lower.allFinite()) return false;
    for (int i = 0; i < n; ++i) {
      if (!(lower(i, i).real() > 0.0)) return false;
    }
    return true;
  };

  CMatrix lower;
  if (!factor(reversed, lower)) {
    const CMatrix jittered = reversed + kJitter * CMatrix::Identity(n, n);
    if (!factor(jittered, lower)) {
      throw Error(ErrorCode::FactorizationFailure, "state is numerically indefinite");
    }
  }
  const CMatrix upper = lower.colwise().reverse().rowwise().reverse();
  CMatrix t = upper.adjoint();
  t /= std::sqrt((t.adjoint() * t).trace().real());

  StateParams p{n, std::vector<double>(static_cast<std::size_t>(param_count(n)))};
  std::size_t at = 0;
  for (int i = 0; i < n; ++i) p.values[at++] = t(i, i).real();
  for (int i = 1; i < n; ++i) {
    for (int j = 0; j < i; ++j) {
      p.values[at++] = t(i, j).real();
      p.values[at++] = t(i, j).imag();
    }
  }
  return p;
}

}  // namespace qtomo
