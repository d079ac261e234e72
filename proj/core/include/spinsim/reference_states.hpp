#pragma once

// Target states of the three-qubit experiments on (Q2, Q3, Q4).

#include "spinsim/qcore.hpp"

namespace spinsim {

/// (|0> + i|1>)/sqrt(2) for sign = +1, (|0> - i|1>)/sqrt(2) for sign = -1.
CVector ket_y(int sign);

/// Tensor product of single-qubit kets, first argument leftmost.
CVector kron(const CVector& a, const CVector& b);

/// (|i>|0>|i> - |-i>|1>|-i>)/sqrt(2)
CVector cluster_ket();
/// (|-i>|0>|-i> - |i>|1>|i>)/sqrt(2)
CVector cluster_prime_ket();
/// (|000> + |111>)/sqrt(2)
CVector ghz_ket();
/// |111>, the heralded initial state of Q2..Q4.
CVector init_ket();
/// |+++>
CVector plus_ket();

DensityMatrix rho_cluster();
DensityMatrix rho_cluster_prime();
DensityMatrix rho_ghz();
DensityMatrix rho_init();

/// sqrt(X) on qubits 0 and 2 of a three-qubit register; maps the cluster state onto GHZ.
CMatrix ghz_frame_unitary();

}  // namespace spinsim
