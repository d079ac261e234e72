#include "spinsim/reference_states.hpp"

#include <cmath>

namespace spinsim {

CVector ket_y(int sign) {
  CVector v(2);
  v << 1.0, Complex(0.0, sign > 0 ? 1.0 : -1.0);
  return v / std::sqrt(2.0);
}

CVector kron(const CVector& a, const CVector& b) {
  CVector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

namespace {

CVector basis(int bit) {
  CVector v = CVector::Zero(2);
  v(bit) = 1.0;
  return v;
}

CVector cluster_like(int sign) {
  const CVector a = kron(kron(ket_y(sign), basis(0)), ket_y(sign));
  const CVector b = kron(kron(ket_y(-sign), basis(1)), ket_y(-sign));
  return (a - b) / std::sqrt(2.0);
}

}  // namespace

CVector cluster_ket() { return cluster_like(+1); }
CVector cluster_prime_ket() { return cluster_like(-1); }

CVector ghz_ket() {
  CVector v = CVector::Zero(8);
  v(0) = v(7) = 1.0 / std::sqrt(2.0);
  return v;
}

CVector init_ket() {
  CVector v = CVector::Zero(8);
  v(7) = 1.0;
  return v;
}

CVector plus_ket() { return CVector::Constant(8, 1.0 / std::sqrt(8.0)); }

DensityMatrix rho_cluster() { return DensityMatrix::from_pure(cluster_ket()); }
DensityMatrix rho_cluster_prime() { return DensityMatrix::from_pure(cluster_prime_ket()); }
DensityMatrix rho_ghz() { return DensityMatrix::from_pure(ghz_ket()); }
DensityMatrix rho_init() { return DensityMatrix::from_pure(init_ket()); }

CMatrix ghz_frame_unitary() {
  const Unitary sx = make_gate(GateKind::SqrtX);
  const int t[] = {0};
  const int u[] = {2};
  return embed(sx, u, 3) * embed(sx, t, 3);
}

}  // namespace spinsim
