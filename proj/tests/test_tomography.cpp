#include <array>
#include <cmath>
#include <functional>
#include <tuple>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "spinsim/circuits.hpp"
#include "spinsim/reference_states.hpp"
#include "spinsim/simulator.hpp"
#include "spinsim/tomography.hpp"
#include "test_support.hpp"

using namespace spinsim;
using spinsim::testing::max_abs_diff;

namespace {

RunSpec noiseless() {
  RunSpec s;
  s.noise_enabled = false;
  s.fast_dephasing_enabled = false;
  return s;
}

// Born probabilities of every setting applied to the noiseless cluster circuit.
const std::vector<std::array<double, 4>>& cluster_setting_probabilities() {
  static const std::vector<std::array<double, 4>> probs = [] {
    const DeviceConfig cfg = default_device_config();
    const StateTiming timing = default_state_timing(cfg);
    std::vector<std::array<double, 4>> out;
    for (const ProjectionSetting& s : enumerate_settings()) {
      out.push_back(exact_parity_distribution(measurement_circuit(StateKind::Cluster3, timing, s, cfg), noiseless(),
                                              cfg, s.id));
    }
    return out;
  }();
  return probs;
}

std::vector<SettingCounts> scaled(const std::vector<std::array<double, 4>>& probs, double n) {
  std::vector<SettingCounts> c;
  for (const auto& p : probs) c.push_back({p[0] * n, p[1] * n, p[2] * n, p[3] * n});
  return c;
}

std::vector<SettingCounts> sample_counts(const std::vector<std::array<double, 4>>& probs, int shots,
                                         std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::vector<SettingCounts> c;
  for (const auto& p : probs) {
    std::discrete_distribution<int> d(p.begin(), p.end());
    SettingCounts k{};
    for (int i = 0; i < shots; ++i) k[static_cast<std::size_t>(d(gen))] += 1;
    c.push_back(k);
  }
  return c;
}

// Independent LHV oracle: assign +-1 to each of the nine (qubit, Pauli) observables.
double lhv_oracle(MerminVariant v) {
  const auto terms = mermin_terms(v);
  std::array<std::array<int, 3>, 3> table{};
  double best = -100;
  std::function<void(int)> rec = [&](int slot) {
    if (slot == 9) {
      double total = 0;
      for (const auto& [label, sign] : terms) {
        int prod = sign;
        for (int q = 0; q < 3; ++q) {
          const char c = label[static_cast<std::size_t>(q)];
          prod *= table[static_cast<std::size_t>(q)][static_cast<std::size_t>(c == 'X' ? 0 : c == 'Y' ? 1 : 2)];
        }
        total += prod;
      }
      best = std::max(best, total);
      return;
    }
    for (int v2 : {-1, 1}) {
      table[static_cast<std::size_t>(slot / 3)][static_cast<std::size_t>(slot % 3)] = v2;
      rec(slot + 1);
    }
  };
  rec(0);
  return best;
}

CMatrix sqrt_x() {
  CMatrix m(2, 2);
  const Complex a(0.5, 0.5), b(0.5, -0.5);
  m << a, b, b, a;
  return m;
}

CMatrix kron2(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

CMatrix kron3(const CMatrix& a, const CMatrix& b, const CMatrix& c) { return kron2(kron2(a, b), c); }

}  // namespace

TEST(Expectations, ExactGhzValues) {
  const ExpectationSet e = ExpectationSet::exact(rho_ghz());
  EXPECT_TRUE(e.complete());
  EXPECT_DOUBLE_EQ(e.value[0], 1.0);
  EXPECT_NEAR(e.at("XXX"), 1.0, 1e-12);
  EXPECT_NEAR(e.at("XYY"), -1.0, 1e-12);
  EXPECT_NEAR(e.at("ZZI"), 1.0, 1e-12);
  EXPECT_NEAR(e.at("ZII"), 0.0, 1e-12);
  EXPECT_NEAR(e.at("ZZZ"), 0.0, 1e-12);
}

TEST(Expectations, SettingContributionSigns) {
  ProjectionSetting s;
  s.axes = {Axis{Pauli::X, -1}, Axis{Pauli::Y, +1}, Axis{Pauli::Z, -1}};
  const auto c = setting_contributions(s);
  EXPECT_EQ(c[0].string_index, PauliString::parse("XII").index());
  EXPECT_EQ(c[0].sign, -1);
  EXPECT_TRUE(c[0].uses_z2 && !c[0].uses_z34);
  EXPECT_EQ(c[1].string_index, PauliString::parse("IYZ").index());
  EXPECT_EQ(c[1].sign, -1);
  EXPECT_EQ(c[2].string_index, PauliString::parse("XYZ").index());
  EXPECT_EQ(c[2].sign, 1);
  s.two_q = TwoQubitProjection{5, -1, +1};  // Y on Q4
  const auto t = setting_contributions(s);
  EXPECT_EQ(t[1].string_index, PauliString::parse("IIY").index());
  EXPECT_EQ(t[1].sign, -1);
  EXPECT_EQ(t[2].string_index, PauliString::parse("XIY").index());
  EXPECT_EQ(t[2].sign, 1);
}

TEST(Expectations, ExactCountsReproduceExactExpectations) {
  const auto probs = cluster_setting_probabilities();
  ASSERT_EQ(probs.size(), 360u);
  const ExpectationSet est = estimate_expectations(scaled(probs, 1000.0), enumerate_settings());
  const ExpectationSet ref = ExpectationSet::exact(rho_cluster());
  for (std::size_t k = 1; k < 64; ++k) {
    EXPECT_NEAR(est.value[k], ref.value[k], 1e-8) << PauliString::from_index(3, static_cast<int>(k)).label();
    EXPECT_GT(est.weight[k], 0.0);
  }
  EXPECT_LT(max_abs_diff(linear_inversion(est).matrix(), rho_cluster().matrix()), 1e-8);
}

TEST(Expectations, MultinomialEstimatesWithinShotNoise) {
  const auto counts = sample_counts(cluster_setting_probabilities(), 1000, 17);
  const ExpectationSet est = estimate_expectations(counts, enumerate_settings());
  const ExpectationSet ref = ExpectationSet::exact(rho_cluster());
  for (std::size_t k = 1; k < 64; ++k) {
    EXPECT_LE(std::abs(est.value[k] - ref.value[k]), 4.0 / std::sqrt(est.weight[k]))
        << PauliString::from_index(3, static_cast<int>(k)).label();
  }
}

TEST(Expectations, UncoveredStringsAndLengthMismatchThrow) {
  const auto& all = enumerate_settings();
  const std::vector<ProjectionSetting> one(all.begin(), all.begin() + 1);
  EXPECT_THROW(estimate_expectations({SettingCounts{10, 0, 0, 0}}, one), std::invalid_argument);
  EXPECT_THROW(estimate_expectations({}, one), std::invalid_argument);
}

TEST(LinearInversion, RoundTripsRandomStates) {
  std::mt19937_64 gen(5);
  for (int i = 0; i < 50; ++i) {
    const DensityMatrix rho = spinsim::testing::random_density(3, gen);
    EXPECT_LT(max_abs_diff(linear_inversion(ExpectationSet::exact(rho)).matrix(), rho.matrix()), 1e-12);
  }
}

TEST(LinearInversion, ZeroExpectationsGiveMaximallyMixed) {
  ExpectationSet e;
  for (std::size_t k = 1; k < 64; ++k) e.weight[k] = 1.0;
  EXPECT_LT(max_abs_diff(linear_inversion(e).matrix(), CMatrix::Identity(8, 8) / 8.0), 1e-15);
}

TEST(LinearInversion, IncompleteSetThrows) {
  EXPECT_THROW(linear_inversion(ExpectationSet{}), std::invalid_argument);
}

TEST(GhzFrame, MapsClusterToGhz) {
  EXPECT_LT(max_abs_diff(ghz_frame(rho_cluster()).matrix(), rho_ghz().matrix()), 1e-12);
  const ExpectationSet mapped = ghz_frame(ExpectationSet::exact(rho_cluster()));
  const ExpectationSet ghz = ExpectationSet::exact(rho_ghz());
  for (std::size_t k = 0; k < 64; ++k) EXPECT_NEAR(mapped.value[k], ghz.value[k], 1e-12);
}

TEST(GhzFrame, UnitaryMatchesExplicitSqrtX) {
  const CMatrix u = kron3(sqrt_x(), CMatrix::Identity(2, 2), sqrt_x());
  // Equal up to a global phase.
  const CMatrix v = ghz_frame_unitary();
  const Complex phase = v(0, 0) / u(0, 0);
  EXPECT_NEAR(std::abs(phase), 1.0, 1e-15);
  EXPECT_LT(max_abs_diff(v, phase * u), 1e-15);
  std::mt19937_64 gen(6);
  const DensityMatrix rho = spinsim::testing::random_density(3, gen);
  // Applying the frame twice conjugates by X x I x X.
  const CMatrix xix = kron3(pauli_matrix(Pauli::X), CMatrix::Identity(2, 2), pauli_matrix(Pauli::X));
  EXPECT_LT(max_abs_diff(ghz_frame(ghz_frame(rho)).matrix(), xix * rho.matrix() * xix), 1e-12);
}

TEST(GhzFrame, MerminStringImages) {
  const std::array<std::tuple<const char*, const char*, int>, 4> expect = {{
      {"XXX", "XXX", 1},
      {"XYZ", "XYY", -1},
      {"ZXZ", "YXY", 1},
      {"ZYX", "YYX", -1},
  }};
  for (const auto& [from, to, sign] : expect) {
    const auto [image, s] = ghz_frame_image(PauliString::parse(from));
    EXPECT_EQ(image.label(), to);
    EXPECT_EQ(s, sign);
  }
}

TEST(GhzFrame, ImagesAreSignedPermutation) {
  const CMatrix u = ghz_frame_unitary();
  std::vector<int> seen(64, 0);
  for (const PauliString& p : all_pauli_strings(3)) {
    const auto [image, s] = ghz_frame_image(p);
    EXPECT_LT(max_abs_diff(u * p.matrix() * u.adjoint(), static_cast<double>(s) * image.matrix()), 1e-12);
    EXPECT_EQ(image[1], p[1]);
    seen[static_cast<std::size_t>(image.index())]++;
  }
  for (int c : seen) EXPECT_EQ(c, 1);
}

TEST(GhzFrame, ClusterMerminRelabelsToGhzMermin) {
  std::mt19937_64 gen(7);
  for (int i = 0; i < 20; ++i) {
    const DensityMatrix rho = spinsim::testing::random_density(3, gen);
    EXPECT_NEAR(mermin(ExpectationSet::exact(rho), MerminVariant::Cluster),
                mermin(ExpectationSet::exact(ghz_frame(rho)), MerminVariant::Ghz), 1e-12);
  }
}

TEST(Mermin, IdealStatesReachFour) {
  EXPECT_NEAR(mermin(ExpectationSet::exact(rho_ghz()), MerminVariant::Ghz), 4.0, 1e-12);
  EXPECT_NEAR(mermin(ExpectationSet::exact(rho_cluster()), MerminVariant::Cluster), 4.0, 1e-12);
  EXPECT_NEAR(mermin(ExpectationSet::exact(rho_cluster_prime()), MerminVariant::ClusterPrime), 4.0, 1e-12);
  EXPECT_NEAR(mermin(ExpectationSet::exact(depolarize(rho_cluster(), 0.6)), MerminVariant::Cluster), 2.4, 1e-12);
}

TEST(Mermin, LhvBoundMatchesEnumerationOracle) {
  for (MerminVariant v : {MerminVariant::Ghz, MerminVariant::Cluster, MerminVariant::ClusterPrime}) {
    EXPECT_DOUBLE_EQ(lhv_bound(v), 2.0);
    EXPECT_DOUBLE_EQ(lhv_bound(v), lhv_oracle(v));
    EXPECT_EQ(mermin_variant_from_string(to_string(v)), v);
  }
  EXPECT_THROW(mermin_variant_from_string("bell"), std::invalid_argument);
}

TEST(Mermin, ProductStatesStayBelowLhvBound) {
  std::mt19937_64 gen(8);
  for (int i = 0; i < 200; ++i) {
    CVector psi = spinsim::testing::random_ket(1, gen);
    for (int q = 1; q < 3; ++q) psi = kron(psi, spinsim::testing::random_ket(1, gen));
    const ExpectationSet e = ExpectationSet::exact(DensityMatrix::from_pure(psi));
    for (MerminVariant v : {MerminVariant::Ghz, MerminVariant::Cluster, MerminVariant::ClusterPrime})
      EXPECT_LE(mermin(e, v), 2.0 + 1e-12);
  }
}

TEST(Mermin, MissingTermThrows) {
  EXPECT_THROW(mermin(ExpectationSet{}, MerminVariant::Ghz), std::invalid_argument);
}

TEST(Spam, LambdaOfPureAndMixedReferences) {
  EXPECT_NEAR(spam_lambda(rho_init()), 1.0, 1e-12);
  const DensityMatrix mixed(CMatrix::Identity(8, 8) / 8.0);
  EXPECT_NEAR(spam_lambda(mixed), 0.0, 1e-6);
  EXPECT_THROW(spam_correct(ExpectationSet::exact(rho_ghz()), mixed), std::invalid_argument);
  EXPECT_THROW(spam_correct(ExpectationSet::exact(rho_ghz()), 0.0), std::invalid_argument);
  EXPECT_THROW(spam_correct(ExpectationSet::exact(rho_ghz()), 1.5), std::invalid_argument);
}

TEST(Spam, CorrectionUndoesGlobalDepolarization) {
  for (double lambda0 : {0.7, 0.85, 0.95}) {
    const DensityMatrix ref = depolarize(rho_init(), lambda0);
    EXPECT_NEAR(spam_lambda(ref), lambda0, 1e-12);
    const SpamCorrection c = spam_correct(ExpectationSet::exact(depolarize(rho_cluster(), lambda0)), ref);
    const ExpectationSet exact = ExpectationSet::exact(rho_cluster());
    for (std::size_t k = 0; k < 64; ++k) EXPECT_NEAR(c.corrected.value[k], exact.value[k], 1e-12);
    EXPECT_FALSE(c.exceeds_unit);
  }
  const SpamCorrection over = spam_correct(ExpectationSet::exact(rho_ghz()), 0.9);
  EXPECT_TRUE(over.exceeds_unit);
  EXPECT_NEAR(over.corrected.at("XXX"), 1.0 / 0.9, 1e-12);
}

TEST(NearestPsd, ClipsNegativeEigenvaluesAndKeepsValidStates) {
  std::mt19937_64 gen(9);
  const DensityMatrix good = spinsim::testing::random_density(3, gen);
  EXPECT_LT(max_abs_diff(nearest_psd(good).matrix(), good.matrix()), 1e-12);
  // Overshoot a pure state along a traceless Hermitian direction.
  CMatrix h = spinsim::testing::ginibre(8, gen);
  h = 0.5 * (h + h.adjoint()).eval();
  h -= (h.trace() / 8.0) * CMatrix::Identity(8, 8);
  const CMatrix bad = rho_cluster().matrix() + 0.3 * h / h.norm();
  Eigen::SelfAdjointEigenSolver<CMatrix> before(bad);
  ASSERT_LT(before.eigenvalues().minCoeff(), 0.0);
  const DensityMatrix fixed = nearest_psd(DensityMatrix(bad));
  Eigen::SelfAdjointEigenSolver<CMatrix> after(fixed.matrix());
  EXPECT_GE(after.eigenvalues().minCoeff(), -1e-12);
  EXPECT_NEAR(fixed.matrix().trace().real(), 1.0, 1e-12);
}

TEST(Analyze, ExactCountsGiveUnitFidelityAndMerminFour) {
  TomographyOptions opt;
  opt.bootstrap_resamples = 50;
  const TomographyResult r = analyze_tomography(scaled(cluster_setting_probabilities(), 1000.0), enumerate_settings(),
                                                cluster_ket(), MerminVariant::Cluster, opt);
  EXPECT_NEAR(r.fidelity, 1.0, 1e-8);
  EXPECT_NEAR(r.mermin, 4.0, 1e-8);
  EXPECT_FALSE(r.spam_corrected);
}

TEST(Analyze, BootstrapErrorScalesAsInverseSqrtShots) {
  const auto probs = cluster_setting_probabilities();
  // A mildly mixed state keeps the fidelity away from its upper bound.
  std::vector<std::array<double, 4>> mixed;
  for (const auto& p : probs) mixed.push_back({0.8 * p[0] + 0.05, 0.8 * p[1] + 0.05, 0.8 * p[2] + 0.05, 0.8 * p[3] + 0.05});
  TomographyOptions opt;
  opt.bootstrap_resamples = 400;
  opt.bootstrap_seed = 3;
  std::array<double, 3> sigma{};
  const std::array<int, 3> shots = {250, 1000, 4000};
  for (std::size_t i = 0; i < 3; ++i) {
    const TomographyResult r = analyze_tomography(sample_counts(mixed, shots[i], 30 + i), enumerate_settings(),
                                                  cluster_ket(), MerminVariant::Cluster, opt);
    sigma[i] = r.fidelity_sigma;
    EXPECT_GT(r.mermin_sigma, 0.0);
  }
  EXPECT_NEAR(sigma[0] / sigma[1], 2.0, 0.3);
  EXPECT_NEAR(sigma[1] / sigma[2], 2.0, 0.3);
  EXPECT_LT(sigma[1], 0.02);
}

TEST(Analyze, BootstrapIsSeedDeterministic) {
  const auto counts = sample_counts(cluster_setting_probabilities(), 200, 4);
  TomographyOptions opt;
  opt.bootstrap_resamples = 100;
  opt.bootstrap_seed = 12;
  const TomographyResult a = analyze_tomography(counts, enumerate_settings(), cluster_ket(), MerminVariant::Cluster, opt);
  const TomographyResult b = analyze_tomography(counts, enumerate_settings(), cluster_ket(), MerminVariant::Cluster, opt);
  EXPECT_EQ(a.fidelity_sigma, b.fidelity_sigma);
  EXPECT_EQ(a.mermin_sigma, b.mermin_sigma);
}
