#pragma once

// Dense complex linear algebra for registers of at most four qubits.
//
// Conventions used throughout the library:
//   * qubit 0 is the leftmost tensor factor (most significant bit of a basis
//     index), so |b0 b1 b2> has index b0*4 + b1*2 + b2;
//   * spin-down is the computational |1>;
//   * gates are defined up to a global phase.

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

namespace spinsim {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline constexpr int kMaxQubits = 4;
inline constexpr double kHermitianTol = 1e-10;
inline constexpr double kTraceTol = 1e-10;
inline constexpr double kPsdTol = 1e-9;

/// Number of qubits for a Hilbert-space dimension; throws unless dim is 2^n, 1 <= n <= 4.
int qubits_for_dim(Eigen::Index dim);

/// Hermitian, unit-trace matrix of dimension 2^n.
///
/// Positivity is not enforced on construction because linear-inversion
/// tomography legitimately produces slightly negative spectra; use
/// is_positive_semidefinite() where physicality matters.
class DensityMatrix {
 public:
  DensityMatrix();  // one-qubit |0><0|
  explicit DensityMatrix(CMatrix m);

  static DensityMatrix basis_state(int n_qubits, std::uint32_t index);
  static DensityMatrix from_pure(const CVector& psi);
  static DensityMatrix maximally_mixed(int n_qubits);

  int dim() const { return static_cast<int>(m_.rows()); }
  int n_qubits() const { return n_qubits_; }
  const CMatrix& matrix() const { return m_; }
  Complex operator()(int r, int c) const { return m_(r, c); }

  double min_eigenvalue() const;
  bool is_positive_semidefinite(double tol = kPsdTol) const;

  /// Skips the invariant check. For internal hot loops that preserve the
  /// invariants by construction (unitary conjugation, phase damping).
  static DensityMatrix unchecked(CMatrix m);

 private:
  CMatrix m_;
  int n_qubits_ = 1;
};

enum class Pauli : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

char pauli_char(Pauli p);
Pauli pauli_from_char(char c);
CMatrix pauli_matrix(Pauli p);

class PauliString {
 public:
  PauliString() = default;
  explicit PauliString(std::vector<Pauli> ops);
  /// Parses labels like "XYZ" or "IXI"; throws on other characters.
  static PauliString parse(std::string_view label);

  int n_qubits() const { return static_cast<int>(ops_.size()); }
  Pauli operator[](int q) const { return ops_[static_cast<std::size_t>(q)]; }
  const std::vector<Pauli>& ops() const { return ops_; }
  bool is_identity() const;
  std::string label() const;
  CMatrix matrix() const;

  /// Index in the base-4 enumeration I<X<Y<Z with qubit 0 most significant.
  int index() const;
  static PauliString from_index(int n_qubits, int index);

  friend bool operator==(const PauliString&, const PauliString&) = default;
  friend auto operator<=>(const PauliString& a, const PauliString& b) { return a.ops_ <=> b.ops_; }

 private:
  std::vector<Pauli> ops_;
};

/// All 4^n strings in index order, identity first.
std::vector<PauliString> all_pauli_strings(int n_qubits);

/// Square matrix with U^dagger U = I within 1e-10.
class Unitary {
 public:
  explicit Unitary(CMatrix m);
  int dim() const { return static_cast<int>(m_.rows()); }
  int n_qubits() const;
  const CMatrix& matrix() const { return m_; }

 private:
  CMatrix m_;
};

enum class GateKind { SqrtX, PiX, VirtualZ, ControlledPhase };

GateKind gate_kind_from_string(std::string_view name);
std::string to_string(GateKind kind);

/// SqrtX = exp(-i pi X / 4), PiX = exp(-i pi X / 2), VirtualZ(phi) = diag(1, e^{i phi}),
/// ControlledPhase(phi) = diag(1, 1, 1, e^{i phi}).
Unitary make_gate(GateKind kind, double phi = 0.0);

/// |Tr(U^dagger V)| / dim; equals 1 iff U and V agree up to a global phase.
double phase_insensitive_overlap(const CMatrix& u, const CMatrix& v);

/// Full-register operator for `u` acting on `targets` (in the order given).
CMatrix embed(const Unitary& u, std::span<const int> targets, int n_qubits);

DensityMatrix embed_and_apply(const DensityMatrix& rho, const Unitary& u, std::span<const int> targets);

/// Tr(rho P). Throws on dimension mismatch.
double pauli_expectation(const DensityMatrix& rho, const PauliString& p);

/// <psi|rho|psi> for a normalized target.
double fidelity_pure(const DensityMatrix& rho, const CVector& target);

/// Tr(rho^2).
double purity(const DensityMatrix& rho);

/// rho -> lambda * rho + (1 - lambda) * I / d.
DensityMatrix depolarize(const DensityMatrix& rho, double lambda);

/// Partial trace keeping the listed qubits in the order given.
DensityMatrix reduce(const DensityMatrix& rho, std::span<const int> keep);

nlohmann::json to_json(const DensityMatrix& rho);
DensityMatrix density_matrix_from_json(const nlohmann::json& j);

}  // namespace spinsim
