#pragma once

// Reference implementations used only by the tests. Written independently of
// the library: explicit matrices, projector sums and fixed-step RK4.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

using C = std::complex<double>;
using M = Eigen::MatrixXcd;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// m_F = +2 ... -2; off-diagonal couplings Omega * sqrt(F(F+1) - m(m-1)) / 2.
inline M ladder(double omega, double d1, double d2) {
  M h = M::Zero(5, 5);
  const double diag[5] = {-d2, -d1, 0.0, d1, d2};
  const double c[4] = {1.0, std::sqrt(1.5), std::sqrt(1.5), 1.0};
  for (int i = 0; i < 5; ++i) h(i, i) = diag[i];
  for (int i = 0; i < 4; ++i) {
    h(i, i + 1) = c[i] * omega;
    h(i + 1, i) = c[i] * omega;
  }
  return h;
}

// -i[H, rho] + gamma sum_j (2 P_j rho P_j - P_j rho - rho P_j)
inline M rhs(const M& h, double gamma, const M& rho) {
  const int n = static_cast<int>(rho.rows());
  M out = C(0.0, -1.0) * (h * rho - rho * h);
  for (int j = 0; j < n; ++j) {
    M p = M::Zero(n, n);
    p(j, j) = 1.0;
    out += gamma * (2.0 * p * rho * p - p * rho - rho * p);
  }
  return out;
}

// Same generator with the projector sum expanded: coherences decay at 2 gamma.
inline M rhs_expanded(const M& h, double gamma, const M& rho) {
  M out = C(0.0, -1.0) * (h * rho - rho * h);
  for (Eigen::Index j = 0; j < rho.rows(); ++j)
    for (Eigen::Index k = 0; k < rho.cols(); ++k)
      if (j != k) out(j, k) -= 2.0 * gamma * rho(j, k);
  return out;
}

inline M rk4(const M& h, double gamma, M rho, double t, double dt) {
  const long steps = std::lround(t / dt);
  for (long s = 0; s < steps; ++s) {
    const M k1 = rhs_expanded(h, gamma, rho);
    const M k2 = rhs_expanded(h, gamma, rho + 0.5 * dt * k1);
    const M k3 = rhs_expanded(h, gamma, rho + 0.5 * dt * k2);
    const M k4 = rhs_expanded(h, gamma, rho + dt * k3);
    rho += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return rho;
}

// Populations at t_j = j * dt_sample, j = 0..count-1, by RK4 with step h_step.
inline std::vector<Eigen::VectorXd> rk4_populations(const M& h, double gamma, const M& rho0, double dt_sample,
                                                    int count, double h_step) {
  std::vector<Eigen::VectorXd> out;
  M rho = rho0;
  for (int j = 0; j < count; ++j) {
    if (j > 0) rho = rk4(h, gamma, rho, dt_sample, h_step);
    out.push_back(rho.diagonal().real());
  }
  return out;
}

// exp(-i H t) through the Hermitian eigendecomposition.
inline M unitary(const M& h, double t) {
  Eigen::SelfAdjointEigenSolver<M> es(h);
  Eigen::VectorXcd phases(h.rows());
  for (Eigen::Index k = 0; k < h.rows(); ++k) phases[k] = std::exp(C(0.0, -es.eigenvalues()[k] * t));
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

inline M random_hermitian(int n, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  M a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = C(nd(rng), nd(rng));
  return 0.5 * scale * (a + a.adjoint());
}

// Hilbert-Schmidt random mixed state G G^dagger / Tr.
inline M random_density(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  M g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = C(nd(rng), nd(rng));
  M rho = g * g.adjoint();
  return rho / rho.trace().real();
}

inline M random_pure(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Eigen::VectorXcd psi(n);
  for (int i = 0; i < n; ++i) psi[i] = C(nd(rng), nd(rng));
  psi.normalize();
  return psi * psi.adjoint();
}

inline double max_abs(const M& a) { return a.cwiseAbs().maxCoeff(); }

}  // namespace oracle
