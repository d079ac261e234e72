#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "spinsim/device.hpp"
#include "spinsim/qcore.hpp"

namespace spinsim::testing {

inline CMatrix ginibre(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  CMatrix g(dim, dim);
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c) g(r, c) = Complex(n(rng), n(rng));
  return g;
}

/// Full-rank random density matrix (Hilbert-Schmidt measure).
inline DensityMatrix random_density(int n_qubits, std::mt19937_64& rng) {
  const CMatrix g = ginibre(1 << n_qubits, rng);
  CMatrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  rho = 0.5 * (rho + rho.adjoint()).eval();
  return DensityMatrix(rho);
}

inline CVector random_ket(int n_qubits, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  CVector v(1 << n_qubits);
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = Complex(n(rng), n(rng));
  return v / v.norm();
}

/// Haar-distributed unitary from the QR decomposition of a Ginibre matrix.
inline CMatrix random_unitary(int dim, std::mt19937_64& rng) {
  const CMatrix g = ginibre(dim, rng);
  Eigen::HouseholderQR<CMatrix> qr(g);
  CMatrix q = qr.householderQ();
  const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < dim; ++i) q.col(i) *= r(i, i) / std::abs(r(i, i));
  return q;
}

inline double max_abs_diff(const CMatrix& a, const CMatrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

/// Ideal readout and deterministic initialisation on top of the defaults.
inline DeviceConfig ideal_readout_config() {
  DeviceConfig c = default_device_config();
  for (ReadoutParams* r : {&c.readout_sequential, &c.readout_simultaneous}) {
    r->snr1 = 1e12;
    r->snr2 = 1e12;
    r->crosstalk12 = 0.0;
    r->crosstalk21 = 0.0;
    r->spin_error = 0.0;
  }
  c.init.p_even12 = 1.0;
  c.init.p_even34 = 1.0;
  return c;
}

/// Bloch vector length of a one-qubit state.
inline double bloch_norm(const DensityMatrix& rho) {
  const double x = pauli_expectation(rho, PauliString::parse("X"));
  const double y = pauli_expectation(rho, PauliString::parse("Y"));
  const double z = pauli_expectation(rho, PauliString::parse("Z"));
  return std::sqrt(x * x + y * y + z * z);
}

}  // namespace spinsim::testing
