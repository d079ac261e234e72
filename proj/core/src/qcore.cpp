#include "spinsim/qcore.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace spinsim {

namespace {

int bit_of(std::uint32_t index, int qubit, int n_qubits) {
  return static_cast<int>((index >> (n_qubits - 1 - qubit)) & 1u);
}

void check_hermitian_unit_trace(const CMatrix& m) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument("density matrix must be square");
  }
  const double herm = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (herm > kHermitianTol) {
    throw std::invalid_argument("density matrix is not Hermitian (deviation " + std::to_string(herm) + ")");
  }
  const double tr = std::abs(m.trace() - Complex(1.0, 0.0));
  if (tr > kTraceTol) {
    throw std::invalid_argument("density matrix trace differs from 1 by " + std::to_string(tr));
  }
}

}  // namespace

int qubits_for_dim(Eigen::Index dim) {
  for (int n = 1; n <= kMaxQubits; ++n) {
    if (dim == (Eigen::Index{1} << n)) return n;
  }
  throw std::invalid_argument("dimension " + std::to_string(dim) + " is not 2^n for 1 <= n <= 4");
}

DensityMatrix::DensityMatrix() : m_(CMatrix::Zero(2, 2)) { m_(0, 0) = 1.0; }

DensityMatrix::DensityMatrix(CMatrix m) : m_(std::move(m)) {
  n_qubits_ = qubits_for_dim(m_.rows());
  check_hermitian_unit_trace(m_);
}

DensityMatrix DensityMatrix::unchecked(CMatrix m) {
  DensityMatrix out;
  out.n_qubits_ = qubits_for_dim(m.rows());
  out.m_ = std::move(m);
  return out;
}

DensityMatrix DensityMatrix::basis_state(int n_qubits, std::uint32_t index) {
  const int d = 1 << n_qubits;
  qubits_for_dim(d);
  if (index >= static_cast<std::uint32_t>(d)) {
    throw std::invalid_argument("basis index out of range");
  }
  CMatrix m = CMatrix::Zero(d, d);
  m(index, index) = 1.0;
  return unchecked(std::move(m));
}

DensityMatrix DensityMatrix::from_pure(const CVector& psi) {
  const double norm = psi.norm();
  if (std::abs(norm - 1.0) > 1e-9) {
    throw std::invalid_argument("state vector is not normalized");
  }
  return DensityMatrix(psi * psi.adjoint());
}

DensityMatrix DensityMatrix::maximally_mixed(int n_qubits) {
  const int d = 1 << n_qubits;
  qubits_for_dim(d);
  return unchecked(CMatrix::Identity(d, d) / static_cast<double>(d));
}

double DensityMatrix::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(m_, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool DensityMatrix::is_positive_semidefinite(double tol) const { return min_eigenvalue() >= -tol; }

char pauli_char(Pauli p) { return "IXYZ"[static_cast<int>(p)]; }

Pauli pauli_from_char(char c) {
  switch (c) {
    case 'I': return Pauli::I;
    case 'X': return Pauli::X;
    case 'Y': return Pauli::Y;
    case 'Z': return Pauli::Z;
    default: throw std::invalid_argument(std::string("invalid Pauli label '") + c + "'");
  }
}

CMatrix pauli_matrix(Pauli p) {
  CMatrix m(2, 2);
  const Complex i(0.0, 1.0);
  switch (p) {
    case Pauli::I: m << 1.0, 0.0, 0.0, 1.0; break;
    case Pauli::X: m << 0.0, 1.0, 1.0, 0.0; break;
    case Pauli::Y: m << 0.0, -i, i, 0.0; break;
    case Pauli::Z: m << 1.0, 0.0, 0.0, -1.0; break;
  }
  return m;
}

PauliString::PauliString(std::vector<Pauli> ops) : ops_(std::move(ops)) {
  if (ops_.empty() || static_cast<int>(ops_.size()) > kMaxQubits) {
    throw std::invalid_argument("Pauli string must have 1..4 labels");
  }
}

PauliString PauliString::parse(std::string_view label) {
  std::vector<Pauli> ops;
  ops.reserve(label.size());
  for (char c : label) ops.push_back(pauli_from_char(c));
  return PauliString(std::move(ops));
}

bool PauliString::is_identity() const {
  return std::all_of(ops_.begin(), ops_.end(), [](Pauli p) { return p == Pauli::I; });
}

std::string PauliString::label() const {
  std::string s;
  for (Pauli p : ops_) s.push_back(pauli_char(p));
  return s;
}

CMatrix PauliString::matrix() const {
  CMatrix m = CMatrix::Identity(1, 1);
  for (Pauli p : ops_) {
    const CMatrix f = pauli_matrix(p);
    CMatrix next(m.rows() * 2, m.cols() * 2);
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) next.block(2 * r, 2 * c, 2, 2) = m(r, c) * f;
    m = std::move(next);
  }
  return m;
}

int PauliString::index() const {
  int idx = 0;
  for (Pauli p : ops_) idx = idx * 4 + static_cast<int>(p);
  return idx;
}

PauliString PauliString::from_index(int n_qubits, int index) {
  std::vector<Pauli> ops(static_cast<std::size_t>(n_qubits));
  for (int q = n_qubits - 1; q >= 0; --q) {
    ops[static_cast<std::size_t>(q)] = static_cast<Pauli>(index % 4);
    index /= 4;
  }
  return PauliString(std::move(ops));
}

std::vector<PauliString> all_pauli_strings(int n_qubits) {
  std::vector<PauliString> out;
  const int count = 1 << (2 * n_qubits);
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) out.push_back(PauliString::from_index(n_qubits, k));
  return out;
}

Unitary::Unitary(CMatrix m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols()) throw std::invalid_argument("unitary must be square");
  const CMatrix id = CMatrix::Identity(m_.rows(), m_.cols());
  const double dev = (m_.adjoint() * m_ - id).cwiseAbs().maxCoeff();
  if (dev > 1e-10) {
    throw std::invalid_argument("matrix is not unitary (deviation " + std::to_string(dev) + ")");
  }
}

int Unitary::n_qubits() const { return qubits_for_dim(m_.rows()); }

GateKind gate_kind_from_string(std::string_view name) {
  if (name == "sqrtX") return GateKind::SqrtX;
  if (name == "piX") return GateKind::PiX;
  if (name == "virtualZ") return GateKind::VirtualZ;
  if (name == "controlledPhase") return GateKind::ControlledPhase;
  throw std::invalid_argument("unknown gate kind '" + std::string(name) + "'");
}

std::string to_string(GateKind kind) {
  switch (kind) {
    case GateKind::SqrtX: return "sqrtX";
    case GateKind::PiX: return "piX";
    case GateKind::VirtualZ: return "virtualZ";
    case GateKind::ControlledPhase: return "controlledPhase";
  }
  return "unknown";
}

Unitary make_gate(GateKind kind, double phi) {
  if (!std::isfinite(phi)) throw std::invalid_argument("gate phase must be finite");
  const Complex i(0.0, 1.0);
  CMatrix m;
  switch (kind) {
    case GateKind::SqrtX: {
      const double c = std::cos(std::numbers::pi / 4), s = std::sin(std::numbers::pi / 4);
      m.resize(2, 2);
      m << c, -i * s, -i * s, c;
      break;
    }
    case GateKind::PiX:
      m.resize(2, 2);
      m << 0.0, -i, -i, 0.0;
      break;
    case GateKind::VirtualZ:
      m = CMatrix::Identity(2, 2);
      m(1, 1) = std::exp(i * phi);
      break;
    case GateKind::ControlledPhase:
      m = CMatrix::Identity(4, 4);
      m(3, 3) = std::exp(i * phi);
      break;
  }
  return Unitary(std::move(m));
}

double phase_insensitive_overlap(const CMatrix& u, const CMatrix& v) {
  if (u.rows() != v.rows() || u.cols() != v.cols()) throw std::invalid_argument("dimension mismatch");
  return std::abs((u.adjoint() * v).trace()) / static_cast<double>(u.rows());
}

CMatrix embed(const Unitary& u, std::span<const int> targets, int n_qubits) {
  const int k = static_cast<int>(targets.size());
  if (u.dim() != (1 << k)) throw std::invalid_argument("unitary dimension does not match target count");
  for (std::size_t a = 0; a < targets.size(); ++a) {
    if (targets[a] < 0 || targets[a] >= n_qubits) throw std::invalid_argument("target qubit out of range");
    for (std::size_t b = a + 1; b < targets.size(); ++b) {
      if (targets[a] == targets[b]) throw std::invalid_argument("duplicate target qubit");
    }
  }
  const int d = 1 << n_qubits;
  std::uint32_t target_mask = 0;
  for (int t : targets) target_mask |= 1u << (n_qubits - 1 - t);

  auto sub_index = [&](std::uint32_t full) {
    std::uint32_t s = 0;
    for (int t : targets) s = (s << 1) | static_cast<std::uint32_t>(bit_of(full, t, n_qubits));
    return s;
  };

  CMatrix full = CMatrix::Zero(d, d);
  for (std::uint32_t r = 0; r < static_cast<std::uint32_t>(d); ++r) {
    for (std::uint32_t c = 0; c < static_cast<std::uint32_t>(d); ++c) {
      if ((r & ~target_mask) != (c & ~target_mask)) continue;
      full(r, c) = u.matrix()(sub_index(r), sub_index(c));
    }
  }
  return full;
}

DensityMatrix embed_and_apply(const DensityMatrix& rho, const Unitary& u, std::span<const int> targets) {
  const CMatrix full = embed(u, targets, rho.n_qubits());
  CMatrix out = full * rho.matrix() * full.adjoint();
  // Re-symmetrize to keep rounding from accumulating an anti-Hermitian part.
  out = 0.5 * (out + out.adjoint()).eval();
  return DensityMatrix::unchecked(std::move(out));
}

double pauli_expectation(const DensityMatrix& rho, const PauliString& p) {
  const int n = rho.n_qubits();
  if (p.n_qubits() != n) throw std::invalid_argument("Pauli string length does not match state");
  std::uint32_t flip = 0;
  for (int q = 0; q < n; ++q) {
    if (p[q] == Pauli::X || p[q] == Pauli::Y) flip |= 1u << (n - 1 - q);
  }
  const Complex i(0.0, 1.0);
  Complex acc = 0.0;
  const auto d = static_cast<std::uint32_t>(rho.dim());
  for (std::uint32_t k = 0; k < d; ++k) {
    // P|k> = c_k |k ^ flip>, so <k|rho P|k> = c_k rho(k, k ^ flip).
    Complex c = 1.0;
    for (int q = 0; q < n; ++q) {
      const int b = bit_of(k, q, n);
      switch (p[q]) {
        case Pauli::I:
        case Pauli::X: break;
        case Pauli::Y: c *= b == 0 ? i : -i; break;
        case Pauli::Z: c *= b == 0 ? 1.0 : -1.0; break;
      }
    }
    acc += c * rho(static_cast<int>(k), static_cast<int>(k ^ flip));
  }
  return std::clamp(acc.real(), -1.0, 1.0);
}

double fidelity_pure(const DensityMatrix& rho, const CVector& target) {
  if (target.size() != rho.dim()) throw std::invalid_argument("target dimension does not match state");
  if (std::abs(target.norm() - 1.0) > 1e-9) throw std::invalid_argument("target state is not normalized");
  const Complex f = target.adjoint() * rho.matrix() * target;
  return f.real();
}

double purity(const DensityMatrix& rho) {
  // Tr(rho^2) = sum |rho_ij|^2 for Hermitian rho.
  return rho.matrix().cwiseAbs2().sum();
}

DensityMatrix depolarize(const DensityMatrix& rho, double lambda) {
  const int d = rho.dim();
  CMatrix m = lambda * rho.matrix() + (1.0 - lambda) * CMatrix::Identity(d, d) / static_cast<double>(d);
  return DensityMatrix::unchecked(std::move(m));
}

DensityMatrix reduce(const DensityMatrix& rho, std::span<const int> keep) {
  const int n = rho.n_qubits();
  const int k = static_cast<int>(keep.size());
  if (k < 1 || k > n) throw std::invalid_argument("invalid qubit subset");
  std::uint32_t keep_mask = 0;
  for (int q : keep) {
    if (q < 0 || q >= n) throw std::invalid_argument("qubit index out of range");
    if (keep_mask & (1u << (n - 1 - q))) throw std::invalid_argument("duplicate qubit");
    keep_mask |= 1u << (n - 1 - q);
  }
  auto sub_index = [&](std::uint32_t full) {
    std::uint32_t s = 0;
    for (int q : keep) s = (s << 1) | static_cast<std::uint32_t>(bit_of(full, q, n));
    return s;
  };
  const int dk = 1 << k;
  CMatrix out = CMatrix::Zero(dk, dk);
  const auto d = static_cast<std::uint32_t>(rho.dim());
  for (std::uint32_t r = 0; r < d; ++r) {
    for (std::uint32_t c = 0; c < d; ++c) {
      if ((r & ~keep_mask) != (c & ~keep_mask)) continue;
      out(sub_index(r), sub_index(c)) += rho(static_cast<int>(r), static_cast<int>(c));
    }
  }
  return DensityMatrix::unchecked(std::move(out));
}

nlohmann::json to_json(const DensityMatrix& rho) {
  nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
  for (int r = 0; r < rho.dim(); ++r) {
    nlohmann::json rr = nlohmann::json::array(), ii = nlohmann::json::array();
    for (int c = 0; c < rho.dim(); ++c) {
      rr.push_back(rho(r, c).real());
      ii.push_back(rho(r, c).imag());
    }
    re.push_back(std::move(rr));
    im.push_back(std::move(ii));
  }
  return {{"dim", rho.dim()}, {"re", std::move(re)}, {"im", std::move(im)}};
}

DensityMatrix density_matrix_from_json(const nlohmann::json& j) {
  const int d = j.at("dim").get<int>();
  const auto& re = j.at("re");
  const auto& im = j.at("im");
  if (static_cast<int>(re.size()) != d || static_cast<int>(im.size()) != d) {
    throw std::invalid_argument("density matrix JSON row count does not match dim");
  }
  CMatrix m(d, d);
  for (int r = 0; r < d; ++r) {
    if (static_cast<int>(re[r].size()) != d || static_cast<int>(im[r].size()) != d) {
      throw std::invalid_argument("density matrix JSON column count does not match dim");
    }
    for (int c = 0; c < d; ++c) m(r, c) = Complex(re[r][c].get<double>(), im[r][c].get<double>());
  }
  return DensityMatrix(std::move(m));
}

}  // namespace spinsim
