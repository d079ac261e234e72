#include "spinsim/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "spinsim/parallel.hpp"
#include "spinsim/reference_states.hpp"
#include "spinsim/rng.hpp"

namespace spinsim {

namespace {

constexpr int kStrings = 64;
constexpr double kDim = 8.0;

const std::vector<CMatrix>& pauli_basis() {
  static const std::vector<CMatrix> basis = [] {
    std::vector<CMatrix> out;
    for (const auto& p : all_pauli_strings(3)) out.push_back(p.matrix());
    return out;
  }();
  return basis;
}

int string_index(Pauli a, Pauli b, Pauli c) { return PauliString({a, b, c}).index(); }

// Eigenvalues of Z2 and Z3Z4 for an outcome index 2 * parity12 + parity34. Q1 is held in
// |1>, so an even Q1-Q2 pair means Q2 = |1> and Z2 = -1.
constexpr std::array<int, 4> kZ2 = {-1, -1, +1, +1};
constexpr std::array<int, 4> kZ34 = {+1, -1, +1, -1};

void check_three_qubit(const DensityMatrix& rho) {
  if (rho.n_qubits() != 3) throw std::invalid_argument("expected a three-qubit state");
}

}  // namespace

ExpectationSet::ExpectationSet() {
  value.fill(0.0);
  weight.fill(0.0);
  value[0] = 1.0;
}

double ExpectationSet::at(const std::string& label) const {
  const PauliString p = PauliString::parse(label);
  if (p.n_qubits() != 3) throw std::invalid_argument("expected a three-qubit label");
  return (*this)[p];
}

bool ExpectationSet::complete() const {
  for (int k = 1; k < kStrings; ++k) {
    if (!(weight[static_cast<std::size_t>(k)] > 0)) return false;
  }
  return true;
}

ExpectationSet ExpectationSet::exact(const DensityMatrix& rho) {
  check_three_qubit(rho);
  ExpectationSet e;
  const auto& basis = pauli_basis();
  for (int k = 1; k < kStrings; ++k) {
    e.value[static_cast<std::size_t>(k)] = (basis[static_cast<std::size_t>(k)] * rho.matrix()).trace().real();
    e.weight[static_cast<std::size_t>(k)] = 1.0;
  }
  return e;
}

std::vector<SettingCounts> count_records(const std::vector<ShotRecord>& records, std::size_t n_settings) {
  std::vector<SettingCounts> counts(n_settings, SettingCounts{0, 0, 0, 0});
  for (const auto& r : records) {
    if (r.setting_id < 0 || static_cast<std::size_t>(r.setting_id) >= n_settings) {
      throw std::out_of_range("setting id " + std::to_string(r.setting_id) + " out of range");
    }
    counts[static_cast<std::size_t>(r.setting_id)][static_cast<std::size_t>(2 * r.parity12 + r.parity34)] += 1.0;
  }
  return counts;
}

std::array<Contribution, 3> setting_contributions(const ProjectionSetting& s) {
  const Axis& a2 = s.axes[0];
  if (s.is_two_qubit()) {
    const TwoQubitProjection& p = *s.two_q;
    const int sign34 = p.sign_c * p.sign_d;
    const Pauli q3 = p.target() == 0 ? p.axis() : Pauli::I;
    const Pauli q4 = p.target() == 1 ? p.axis() : Pauli::I;
    return {Contribution{string_index(a2.pauli, Pauli::I, Pauli::I), true, false, a2.sign},
            Contribution{string_index(Pauli::I, q3, q4), false, true, sign34},
            Contribution{string_index(a2.pauli, q3, q4), true, true, a2.sign * sign34}};
  }
  const Axis& a3 = s.axes[1];
  const Axis& a4 = s.axes[2];
  return {Contribution{string_index(a2.pauli, Pauli::I, Pauli::I), true, false, a2.sign},
          Contribution{string_index(Pauli::I, a3.pauli, a4.pauli), false, true, a3.sign * a4.sign},
          Contribution{string_index(a2.pauli, a3.pauli, a4.pauli), true, true, a2.sign * a3.sign * a4.sign}};
}

ExpectationSet estimate_expectations(const std::vector<SettingCounts>& counts,
                                     const std::vector<ProjectionSetting>& settings) {
  if (counts.size() != settings.size()) throw std::invalid_argument("counts and settings lengths differ");
  std::array<double, kStrings> sum{};
  std::array<double, kStrings> n{};
  for (std::size_t i = 0; i < settings.size(); ++i) {
    const SettingCounts& c = counts[i];
    const double total = c[0] + c[1] + c[2] + c[3];
    if (total <= 0) continue;
    for (const Contribution& k : setting_contributions(settings[i])) {
      double acc = 0.0;
      for (std::size_t o = 0; o < 4; ++o) {
        const int z = (k.uses_z2 ? kZ2[o] : 1) * (k.uses_z34 ? kZ34[o] : 1);
        acc += c[o] * z;
      }
      sum[static_cast<std::size_t>(k.string_index)] += k.sign * acc;
      n[static_cast<std::size_t>(k.string_index)] += total;
    }
  }
  ExpectationSet e;
  for (int k = 1; k < kStrings; ++k) {
    const auto u = static_cast<std::size_t>(k);
    if (!(n[u] > 0)) {
      throw std::invalid_argument("Pauli string " + PauliString::from_index(3, k).label() + " is not covered");
    }
    e.value[u] = sum[u] / n[u];
    e.weight[u] = n[u];
  }
  return e;
}

DensityMatrix linear_inversion(const ExpectationSet& e) {
  if (!e.complete()) throw std::invalid_argument("expectation set is incomplete");
  const auto& basis = pauli_basis();
  CMatrix rho = CMatrix::Zero(8, 8);
  for (int k = 0; k < kStrings; ++k) rho += e.value[static_cast<std::size_t>(k)] * basis[static_cast<std::size_t>(k)];
  rho /= kDim;
  return DensityMatrix(std::move(rho));
}

DensityMatrix ghz_frame(const DensityMatrix& rho) {
  check_three_qubit(rho);
  const CMatrix u = ghz_frame_unitary();
  return DensityMatrix(u * rho.matrix() * u.adjoint());
}

std::pair<PauliString, int> ghz_frame_image(const PauliString& p) {
  static const std::array<std::pair<int, int>, kStrings> table = [] {
    std::array<std::pair<int, int>, kStrings> t{};
    const CMatrix u = ghz_frame_unitary();
    const auto& basis = pauli_basis();
    for (int k = 0; k < kStrings; ++k) {
      const CMatrix m = u * basis[static_cast<std::size_t>(k)] * u.adjoint();
      for (int j = 0; j < kStrings; ++j) {
        const double c = (basis[static_cast<std::size_t>(j)] * m).trace().real() / kDim;
        if (std::abs(std::abs(c) - 1.0) < 1e-9) {
          t[static_cast<std::size_t>(k)] = {j, c > 0 ? 1 : -1};
          break;
        }
      }
    }
    return t;
  }();
  if (p.n_qubits() != 3) throw std::invalid_argument("expected a three-qubit Pauli string");
  const auto [j, sign] = table[static_cast<std::size_t>(p.index())];
  return {PauliString::from_index(3, j), sign};
}

ExpectationSet ghz_frame(const ExpectationSet& e) {
  ExpectationSet out;
  for (int k = 0; k < kStrings; ++k) {
    const auto [image, sign] = ghz_frame_image(PauliString::from_index(3, k));
    const auto j = static_cast<std::size_t>(image.index());
    out.value[j] = sign * e.value[static_cast<std::size_t>(k)];
    out.weight[j] = e.weight[static_cast<std::size_t>(k)];
  }
  out.value[0] = 1.0;
  return out;
}

std::string to_string(MerminVariant v) {
  switch (v) {
    case MerminVariant::Ghz: return "ghz";
    case MerminVariant::Cluster: return "cluster";
    case MerminVariant::ClusterPrime: return "cluster_prime";
  }
  throw std::invalid_argument("bad Mermin variant");
}

MerminVariant mermin_variant_from_string(const std::string& s) {
  if (s == "ghz") return MerminVariant::Ghz;
  if (s == "cluster") return MerminVariant::Cluster;
  if (s == "cluster_prime") return MerminVariant::ClusterPrime;
  throw std::invalid_argument("unknown Mermin variant '" + s + "'");
}

std::array<std::pair<std::string, int>, 4> mermin_terms(MerminVariant v) {
  switch (v) {
    case MerminVariant::Ghz: return {{{"XXX", 1}, {"XYY", -1}, {"YXY", -1}, {"YYX", -1}}};
    case MerminVariant::Cluster: return {{{"XXX", 1}, {"XYZ", 1}, {"ZXZ", -1}, {"ZYX", 1}}};
    case MerminVariant::ClusterPrime: return {{{"XXX", 1}, {"XYZ", -1}, {"ZXZ", -1}, {"ZYX", -1}}};
  }
  throw std::invalid_argument("bad Mermin variant");
}

double mermin(const ExpectationSet& e, MerminVariant v) {
  double m = 0.0;
  for (const auto& [label, sign] : mermin_terms(v)) {
    const auto idx = static_cast<std::size_t>(PauliString::parse(label).index());
    if (!(e.weight[idx] > 0)) throw std::invalid_argument("missing expectation <" + label + ">");
    m += sign * e.value[idx];
  }
  return m;
}

double lhv_bound(MerminVariant v) {
  const auto terms = mermin_terms(v);
  double best = -1e300;
  // Bit 3q + (a - 1) of `assign` holds qubit q's value for Pauli a.
  for (int assign = 0; assign < 512; ++assign) {
    double total = 0.0;
    for (const auto& [label, sign] : terms) {
      int prod = sign;
      for (int q = 0; q < 3; ++q) {
        const int a = static_cast<int>(pauli_from_char(label[static_cast<std::size_t>(q)]));
        prod *= ((assign >> (3 * q + a - 1)) & 1) ? -1 : 1;
      }
      total += prod;
    }
    best = std::max(best, total);
  }
  return best;
}

double spam_lambda(const DensityMatrix& rho0) {
  check_three_qubit(rho0);
  const double arg = (purity(rho0) - 1.0 / kDim) / (1.0 - 1.0 / kDim);
  // Purity is at least 1/d for any state, so only rounding can push arg below zero.
  if (arg < -1e-9) throw std::invalid_argument("reference state has purity below 1/d");
  const double lambda = std::sqrt(std::max(arg, 0.0));
  if (lambda > 1.0 + 1e-6) throw std::invalid_argument("reference state gives lambda > 1");
  return lambda;
}

SpamCorrection spam_correct(const ExpectationSet& e, double lambda) {
  if (!(lambda > 0)) throw std::invalid_argument("lambda must be positive");
  if (lambda > 1.0 + 1e-6) throw std::invalid_argument("lambda must not exceed 1");
  SpamCorrection out;
  out.lambda = lambda;
  out.corrected = e;
  for (int k = 1; k < kStrings; ++k) {
    double& v = out.corrected.value[static_cast<std::size_t>(k)];
    v /= lambda;
    if (std::abs(v) > 1.0) out.exceeds_unit = true;
  }
  return out;
}

SpamCorrection spam_correct(const ExpectationSet& e, const DensityMatrix& rho0) {
  return spam_correct(e, spam_lambda(rho0));
}

DensityMatrix nearest_psd(const DensityMatrix& rho) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(rho.matrix());
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  const double tr = ev.sum();
  if (!(tr > 0)) throw std::invalid_argument("matrix has no positive eigenvalues");
  ev /= tr;
  CMatrix m = es.eigenvectors() * ev.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
  m = 0.5 * (m + m.adjoint()).eval();
  return DensityMatrix(std::move(m));
}

namespace {

struct Metrics {
  double fidelity;
  double mermin;
};

Metrics evaluate(const std::vector<SettingCounts>& counts, const std::vector<ProjectionSetting>& settings,
                 const CVector& target, MerminVariant variant, const TomographyOptions& opt) {
  ExpectationSet e = estimate_expectations(counts, settings);
  if (opt.spam_lambda) e = spam_correct(e, *opt.spam_lambda).corrected;
  DensityMatrix rho = linear_inversion(e);
  if (opt.project_psd) rho = nearest_psd(rho);
  return {fidelity_pure(rho, target), mermin(e, variant)};
}

SettingCounts multinomial(const SettingCounts& c, Rng& rng) {
  const double total = c[0] + c[1] + c[2] + c[3];
  auto n = static_cast<std::uint64_t>(std::llround(total));
  SettingCounts out{0, 0, 0, 0};
  double mass = 1.0;
  for (std::size_t k = 0; k < 3 && n > 0; ++k) {
    const double p = mass > 0 ? std::clamp(c[k] / total / mass, 0.0, 1.0) : 0.0;
    const std::uint64_t draw = rng.binomial(n, p);
    out[k] = static_cast<double>(draw);
    n -= draw;
    mass -= c[k] / total;
  }
  out[3] = static_cast<double>(n);
  return out;
}

}  // namespace

TomographyResult analyze_tomography(const std::vector<SettingCounts>& counts,
                                    const std::vector<ProjectionSetting>& settings, const CVector& target,
                                    MerminVariant variant, const TomographyOptions& options) {
  TomographyResult r;
  r.variant = variant;
  ExpectationSet e = estimate_expectations(counts, settings);
  if (options.spam_lambda) {
    SpamCorrection sc = spam_correct(e, *options.spam_lambda);
    e = sc.corrected;
    r.lambda = sc.lambda;
    r.spam_corrected = true;
    r.exceeds_unit = sc.exceeds_unit;
  }
  r.expectations = e;
  r.raw_rho = linear_inversion(e);
  r.min_eigenvalue = r.raw_rho.min_eigenvalue();
  const DensityMatrix rho = options.project_psd ? nearest_psd(r.raw_rho) : r.raw_rho;
  r.psd_projected = options.project_psd;
  r.fidelity = fidelity_pure(rho, target);
  r.mermin = mermin(e, variant);

  const int b = options.bootstrap_resamples;
  if (b > 1) {
    std::vector<Metrics> samples(static_cast<std::size_t>(b));
    parallel_for(b, [&](int i) {
      Rng rng(derive_seed(options.bootstrap_seed, 0x626f6f7473747270ULL, static_cast<std::uint64_t>(i)));
      std::vector<SettingCounts> resampled(counts.size());
      for (std::size_t s = 0; s < counts.size(); ++s) resampled[s] = multinomial(counts[s], rng);
      samples[static_cast<std::size_t>(i)] = evaluate(resampled, settings, target, variant, options);
    });
    double mf = 0, mm = 0;
    for (const auto& s : samples) {
      mf += s.fidelity;
      mm += s.mermin;
    }
    mf /= b;
    mm /= b;
    double vf = 0, vm = 0;
    for (const auto& s : samples) {
      vf += (s.fidelity - mf) * (s.fidelity - mf);
      vm += (s.mermin - mm) * (s.mermin - mm);
    }
    r.fidelity_sigma = std::sqrt(vf / (b - 1));
    r.mermin_sigma = std::sqrt(vm / (b - 1));
  }
  return r;
}

nlohmann::json to_json(const ExpectationSet& e) {
  nlohmann::json j = nlohmann::json::object();
  for (int k = 0; k < kStrings; ++k) j[PauliString::from_index(3, k).label()] = e.value[static_cast<std::size_t>(k)];
  return j;
}

nlohmann::json to_json(const TomographyResult& r) {
  return {{"expectations", to_json(r.expectations)},
          {"raw_rho", to_json(r.raw_rho)},
          {"fidelity", r.fidelity},
          {"fidelity_sigma", r.fidelity_sigma},
          {"mermin", r.mermin},
          {"mermin_sigma", r.mermin_sigma},
          {"mermin_variant", to_string(r.variant)},
          {"lambda", r.lambda},
          {"spam_corrected", r.spam_corrected},
          {"exceeds_unit", r.exceeds_unit},
          {"psd_projected", r.psd_projected},
          {"min_eigenvalue", r.min_eigenvalue},
          {"uncertainty_method", "nonparametric bootstrap over shots"}};
}

}  // namespace spinsim
