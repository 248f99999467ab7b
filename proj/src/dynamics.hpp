#pragma once

// Quantum states, the known evolution model and its Lindblad propagator.
//
// Conventions used throughout the library:
//   * frequencies are angular (rad/s), times are in seconds, H is H/hbar;
//   * for the five-level ladder the basis runs m_F = +2, +1, 0, -1, -2;
//   * superoperators act on column-stacked vectors, vec(rho)[k*n + j] = rho(j,k).

#include <Eigen/Dense>

#include <complex>
#include <variant>
#include <vector>

namespace qtomo {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

namespace tolerance {
inline constexpr double kHermitian = 1e-12;
inline constexpr double kTrace = 1e-10;
inline constexpr double kPositivity = 1e-10;
inline constexpr double kDrift = 1e-8;
inline constexpr double kDiagonalImag = 1e-12;
}  // namespace tolerance

/// Hermitian, positive semi-definite, unit-trace n x n matrix.
///
/// Instances are immutable; every public constructor validates the invariants
/// and throws InvalidState on violation.
class DensityMatrix {
 public:
  explicit DensityMatrix(CMatrix entries);

  /// Pure state |k><k| in an n-level space.
  static DensityMatrix basis_state(int dim, int index);
  /// Maximally mixed state I/n.
  static DensityMatrix maximally_mixed(int dim);
  /// |psi><psi| for a (not necessarily normalized) state vector.
  static DensityMatrix pure(const CVector& psi);

  int dim() const noexcept { return static_cast<int>(entries_.rows()); }
  const CMatrix& matrix() const noexcept { return entries_; }
  Complex operator()(int row, int col) const { return entries_(row, col); }

  /// Ascending eigenvalues.
  RVector eigenvalues() const;

 private:
  struct Trusted {};
  DensityMatrix(CMatrix entries, Trusted) : entries_(std::move(entries)) {}
  friend DensityMatrix trusted_density(CMatrix);

  CMatrix entries_;
};

/// Builds a DensityMatrix without invariant checks. Only for callers that
/// guarantee the invariants by construction (e.g. T^dagger T / Tr).
DensityMatrix trusted_density(CMatrix entries);

/// The RF-dressed F = 2 ladder in the rotating frame. All fields in rad/s.
struct Ladder5 {
  double rabi_omega = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
};

/// An arbitrary Hermitian H/hbar in rad/s.
struct GenericHamiltonian {
  CMatrix entries;
};

using HamiltonianSpec = std::variant<Ladder5, GenericHamiltonian>;

int hamiltonian_dim(const HamiltonianSpec& spec);

/// Expands a spec to its matrix. Throws NonHermitianInput for generic inputs
/// that are not Hermitian to 1e-12.
CMatrix build_hamiltonian(const HamiltonianSpec& spec);

/// Hamiltonian plus homogeneous pure dephasing at rate `gamma` (1/s) on every
/// sublevel projector.
class EvolutionModel {
 public:
  EvolutionModel(HamiltonianSpec hamiltonian, double gamma);

  int dim() const noexcept { return static_cast<int>(h_.rows()); }
  double gamma() const noexcept { return gamma_; }
  const HamiltonianSpec& spec() const noexcept { return spec_; }
  const CMatrix& hamiltonian() const noexcept { return h_; }

  EvolutionModel with_gamma(double gamma) const;

 private:
  HamiltonianSpec spec_;
  CMatrix h_;
  double gamma_;
};

/// d rho / dt = -i[H, rho] + sum_j gamma(-{P_j, rho} + 2 P_j rho P_j).
CMatrix lindblad_rhs(const CMatrix& rho, const EvolutionModel& model);
CMatrix lindblad_rhs(const DensityMatrix& rho, const EvolutionModel& model);

/// n^2 x n^2 generator acting on column-stacked density matrices.
CMatrix liouvillian(const EvolutionModel& model);

CVector vectorize(const CMatrix& m);
CMatrix unvectorize(const CVector& v, int dim);

/// exp(L dt) for a fixed model, reusable across a uniform time grid.
class Propagator {
 public:
  const EvolutionModel& model() const noexcept { return model_; }
  double dt() const noexcept { return dt_; }
  const CMatrix& step() const noexcept { return step_; }
  int dim() const noexcept { return model_.dim(); }

 private:
  Propagator(EvolutionModel model, double dt, CMatrix step)
      : model_(std::move(model)), dt_(dt), step_(std::move(step)) {}
  friend Propagator make_propagator(const EvolutionModel&, double);

  EvolutionModel model_;
  double dt_;
  CMatrix step_;
};

/// dt >= 0; dt == 0 yields the identity map.
Propagator make_propagator(const EvolutionModel& model, double dt);

/// rho(steps * dt). Symmetrizes and renormalizes after de-vectorization and
/// throws NumericalDrift if the trace moved by more than 1e-8 or an
/// eigenvalue fell below -1e-8.
DensityMatrix evolve(const DensityMatrix& rho0, const Propagator& prop,
                     long steps);

/// States at the cumulative step counts in `steps` (non-decreasing).
std::vector<DensityMatrix> evolve_trajectory(const DensityMatrix& rho0,
                                             const Propagator& prop,
                                             const std::vector<long>& steps);

/// Diagonal of rho; throws InvalidState if any diagonal has an imaginary part
/// above 1e-12.
RVector populations(const DensityMatrix& rho);

/// (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.
double uhlmann_fidelity(const DensityMatrix& rho, const DensityMatrix& sigma);

}  // namespace qtomo
