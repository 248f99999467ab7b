#include "dynamics.hpp"

#include "error.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <sstream>

namespace qtomo {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonHermitianInput: return "NonHermitianInput";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidState: return "InvalidState";
    case ErrorCode::NumericalDrift: return "NumericalDrift";
    case ErrorCode::DegenerateParams: return "DegenerateParams";
    case ErrorCode::FactorizationFailure: return "FactorizationFailure";
    case ErrorCode::NonFiniteObjective: return "NonFiniteObjective";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

namespace {

double hermiticity_defect(const CMatrix& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

RVector hermitian_eigenvalues(const CMatrix& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

CMatrix hermitian_part(const CMatrix& m) { return 0.5 * (m + m.adjoint()); }

}  // namespace

// ---------------------------------------------------------------------------
// DensityMatrix

DensityMatrix::DensityMatrix(CMatrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() == 0 || entries_.rows() != entries_.cols()) {
    throw Error(ErrorCode::InvalidState, "density matrix must be square and non-empty");
  }
  if (!entries_.allFinite()) {
    throw Error(ErrorCode::InvalidState, "density matrix has non-finite entries");
  }
  if (hermiticity_defect(entries_) > tolerance::kHermitian) {
    throw Error(ErrorCode::InvalidState, "density matrix is not Hermitian");
  }
  const Complex tr = entries_.trace();
  if (std::abs(tr - Complex(1.0, 0.0)) > tolerance::kTrace) {
    std::ostringstream os;
    os << "density matrix trace " << tr.real() << " differs from 1";
    throw Error(ErrorCode::InvalidState, os.str());
  }
  if (hermitian_eigenvalues(hermitian_part(entries_)).minCoeff() < -tolerance::kPositivity) {
    throw Error(ErrorCode::InvalidState, "density matrix is not positive semi-definite");
  }
}

DensityMatrix trusted_density(CMatrix entries) {
  return DensityMatrix(std::move(entries), DensityMatrix::Trusted{});
}

DensityMatrix DensityMatrix::basis_state(int dim, int index) {
  if (dim <= 0 || index < 0 || index >= dim) {
    throw Error(ErrorCode::InvalidArgument, "basis index out of range");
  }
  CMatrix m = CMatrix::Zero(dim, dim);
  m(index, index) = 1.0;
  return trusted_density(std::move(m));
}

DensityMatrix DensityMatrix::maximally_mixed(int dim) {
  if (dim <= 0) throw Error(ErrorCode::InvalidArgument, "dimension must be positive");
  return trusted_density(CMatrix::Identity(dim, dim) / static_cast<double>(dim));
}

DensityMatrix DensityMatrix::pure(const CVector& psi) {
  const double norm = psi.norm();
  if (psi.size() == 0 || !(norm > 0.0) || !std::isfinite(norm)) {
    throw Error(ErrorCode::InvalidArgument, "state vector must be finite and non-zero");
  }
  const CVector u = psi / norm;
  return trusted_density(hermitian_part(u * u.adjoint()));
}

RVector DensityMatrix::eigenvalues() const {
  return hermitian_eigenvalues(hermitian_part(entries_));
}

// ---------------------------------------------------------------------------
// Hamiltonians and models

int hamiltonian_dim(const HamiltonianSpec& spec) {
  if (std::holds_alternative<Ladder5>(spec)) return 5;
  return static_cast<int>(std::get<GenericHamiltonian>(spec).entries.rows());
}

CMatrix build_hamiltonian(const HamiltonianSpec& spec) {
  if (const auto* ladder = std::get_if<Ladder5>(&spec)) {
    const double omega = ladder->rabi_omega;
    const double inner = std::sqrt(1.5) * omega;
    CMatrix h = CMatrix::Zero(5, 5);
    h(0, 0) = -ladder->delta2;
    h(1, 1) = -ladder->delta1;
    h(3, 3) = ladder->delta1;
    h(4, 4) = ladder->delta2;
    h(0, 1) = h(1, 0) = omega;
    h(1, 2) = h(2, 1) = inner;
    h(2, 3) = h(3, 2) = inner;
    h(3, 4) = h(4, 3) = omega;
    return h;
  }
  const CMatrix& h = std::get<GenericHamiltonian>(spec).entries;
  if (h.rows() == 0 || h.rows() != h.cols()) {
    throw Error(ErrorCode::InvalidArgument, "Hamiltonian must be square and non-empty");
  }
  if (!h.allFinite()) throw Error(ErrorCode::InvalidArgument, "Hamiltonian has non-finite entries");
  if (hermiticity_defect(h) > tolerance::kHermitian) {
    throw Error(ErrorCode::NonHermitianInput, "Hamiltonian is not Hermitian");
  }
  return h;
}

EvolutionModel::EvolutionModel(HamiltonianSpec hamiltonian, double gamma)
    : spec_(std::move(hamiltonian)), h_(build_hamiltonian(spec_)), gamma_(gamma) {
  if (!(gamma_ >= 0.0) || !std::isfinite(gamma_)) {
    throw Error(ErrorCode::InvalidArgument, "dephasing rate must be finite and >= 0");
  }
}

EvolutionModel EvolutionModel::with_gamma(double gamma) const {
  return EvolutionModel(spec_, gamma);
}

// ---------------------------------------------------------------------------
// Generator

CMatrix lindblad_rhs(const CMatrix& rho, const EvolutionModel& model) {
  const int n = model.dim();
  if (rho.rows() != n || rho.cols() != n) {
    throw Error(ErrorCode::DimensionMismatch, "state and Hamiltonian dimensions differ");
  }
  const CMatrix& h = model.hamiltonian();
  const Complex minus_i(0.0, -1.0);
  CMatrix out = minus_i * (h * rho - rho * h);
  // sum_j (-{P_j, rho} + 2 P_j rho P_j) = 2 (diag(rho) - rho)
  const double g2 = 2.0 * model.gamma();
  for (int k = 0; k < n; ++k) {
    for (int j = 0; j < n; ++j) {
      if (j != k) out(j, k) -= g2 * rho(j, k);
    }
  }
  return out;
}

CMatrix lindblad_rhs(const DensityMatrix& rho, const EvolutionModel& model) {
  return lindblad_rhs(rho.matrix(), model);
}

CMatrix liouvillian(const EvolutionModel& model) {
  const int n = model.dim();
  const CMatrix& h = model.hamiltonian();
  const CMatrix id = CMatrix::Identity(n, n);
  const Complex minus_i(0.0, -1.0);
  // vec(A X B) = (B^T kron A) vec(X)
  CMatrix l = CMatrix::Zero(n * n, n * n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      // block (a, b) of I kron H is delta_ab H; of H^T kron I is H(b, a) I
      CMatrix block = (a == b ? h : CMatrix::Zero(n, n)) - h(b, a) * id;
      l.block(a * n, b * n, n, n) = minus_i * block;
    }
  }
  const double g2 = 2.0 * model.gamma();
  for (int k = 0; k < n; ++k) {
    for (int j = 0; j < n; ++j) {
      if (j != k) l(k * n + j, k * n + j) -= g2;
    }
  }
  return l;
}

CVector vectorize(const CMatrix& m) {
  return Eigen::Map<const CVector>(m.data(), m.size());
}

CMatrix unvectorize(const CVector& v, int dim) {
  if (v.size() != static_cast<Eigen::Index>(dim) * dim) {
    throw Error(ErrorCode::DimensionMismatch, "vector length is not dim^2");
  }
  return Eigen::Map<const CMatrix>(v.data(), dim, dim);
}

Propagator make_propagator(const EvolutionModel& model, double dt) {
  if (!(dt >= 0.0) || !std::isfinite(dt)) {
    throw Error(ErrorCode::InvalidArgument, "time step must be finite and >= 0");
  }
  const int n2 = model.dim() * model.dim();
  if (dt == 0.0) return Propagator(model, dt, CMatrix::Identity(n2, n2));
  CMatrix scaled = liouvillian(model) * dt;
  CMatrix step = scaled.exp();
  return Propagator(model, dt, std::move(step));
}

namespace {

DensityMatrix finish_state(const CVector& v, int n) {
  CMatrix rho = hermitian_part(unvectorize(v, n));
  const double tr = rho.trace().real();
  if (!std::isfinite(tr) || std::abs(tr - 1.0) > tolerance::kDrift) {
    throw Error(ErrorCode::NumericalDrift, "trace drifted during propagation");
  }
  rho /= tr;
  if (hermitian_eigenvalues(rho).minCoeff() < -tolerance::kDrift) {
    throw Error(ErrorCode::NumericalDrift, "positivity lost during propagation");
  }
  return trusted_density(std::move(rho));
}

void check_dims(const DensityMatrix& rho, const Propagator& prop) {
  if (rho.dim() != prop.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "state and propagator dimensions differ");
  }
}

}  // namespace

DensityMatrix evolve(const DensityMatrix& rho0, const Propagator& prop, long steps) {
  check_dims(rho0, prop);
  if (steps < 0) throw Error(ErrorCode::InvalidArgument, "step count must be >= 0");
  if (steps == 0) return rho0;
  CVector v = vectorize(rho0.matrix());
  for (long s = 0; s < steps; ++s) v = prop.step() * v;
  return finish_state(v, rho0.dim());
}

std::vector<DensityMatrix> evolve_trajectory(const DensityMatrix& rho0,
                                             const Propagator& prop,
                                             const std::vector<long>& steps) {
  check_dims(rho0, prop);
  std::vector<DensityMatrix> out;
  out.reserve(steps.size());
  CVector v = vectorize(rho0.matrix());
  long at = 0;
  for (long target : steps) {
    if (target < at) throw Error(ErrorCode::InvalidArgument, "step counts must be non-decreasing");
    for (; at < target; ++at) v = prop.step() * v;
    out.push_back(target == 0 ? rho0 : finish_state(v, rho0.dim()));
  }
  return out;
}

RVector populations(const DensityMatrix& rho) {
  const CVector d = rho.matrix().diagonal();
  RVector p(d.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (std::abs(d[i].imag()) > tolerance::kDiagonalImag) {
      throw Error(ErrorCode::InvalidState, "diagonal entry has an imaginary part");
    }
    p[i] = d[i].real();
  }
  return p;
}

namespace {

CMatrix psd_sqrt(const CMatrix& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(m));
  const RVector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

double uhlmann_fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
  if (rho.dim() != sigma.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "fidelity of states with different dimensions");
  }
  // Trace norm of sqrt(rho) sqrt(sigma): its singular values are the square
  // roots of the eigenvalues of sqrt(rho) sigma sqrt(rho), without taking
  // square roots of rounding noise for (near-)pure states.
  const CMatrix product = psd_sqrt(rho.matrix()) * psd_sqrt(sigma.matrix());
  const double tr = Eigen::JacobiSVD<CMatrix>(product).singularValues().sum();
  const double f = tr * tr;
  constexpr double kSlack = 1e-9;
  if (f > 1.0 + kSlack || f < -kSlack || !std::isfinite(f)) {
    throw Error(ErrorCode::NumericalDrift, "fidelity outside [0, 1]");
  }
  return std::clamp(f, 0.0, 1.0);
}

}  // namespace qtomo
