#include <cmath>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include <gtest/gtest.h>

#include "spinsim/experiment.hpp"
#include "spinsim/fitting.hpp"
#include "spinsim/readout.hpp"
#include "spinsim/reference_states.hpp"
#include "spinsim/rng.hpp"
#include "test_support.hpp"

using namespace spinsim;

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// Signals for independent, equally likely parities on both DQDs.
std::pair<std::vector<double>, std::vector<double>> signal_pairs(const ReadoutParams& p, int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> s1, s2;
  for (int i = 0; i < n; ++i) {
    const Parity a = rng.bernoulli(0.5) ? Parity::Even : Parity::Odd;
    const Parity b = rng.bernoulli(0.5) ? Parity::Even : Parity::Odd;
    const auto s = sample_signals(a, b, p, rng);
    s1.push_back(s[0]);
    s2.push_back(s[1]);
  }
  return {s1, s2};
}

}  // namespace

TEST(Parity, BasisStatesAndBellPair) {
  EXPECT_NEAR(parity_even_probability(DensityMatrix::basis_state(4, 0b1111), ParityPair::Q1Q2), 1.0, 1e-14);
  EXPECT_NEAR(parity_even_probability(DensityMatrix::basis_state(4, 0b1111), ParityPair::Q3Q4), 1.0, 1e-14);
  EXPECT_NEAR(parity_even_probability(DensityMatrix::basis_state(4, 0b1011), ParityPair::Q1Q2), 0.0, 1e-14);
  EXPECT_NEAR(parity_even_probability(DensityMatrix::basis_state(4, 0b1011), ParityPair::Q3Q4), 1.0, 1e-14);
  const CVector one = (CVector(2) << 0.0, 1.0).finished();
  CVector bell = CVector::Zero(4);
  bell(0) = bell(3) = 1.0 / std::sqrt(2.0);
  const DensityMatrix rho = DensityMatrix::from_pure(kron(kron(one, one), bell));
  EXPECT_NEAR(parity_even_probability(rho, ParityPair::Q3Q4), 1.0, 1e-14);
  EXPECT_NEAR(parity_even_probability(rho, ParityPair::Q1Q2), 1.0, 1e-14);
}

TEST(Parity, ThreeQubitStatesHoldQ1InOne) {
  // Q2 = |1>, so the Q1Q2 pair is even; Q2 = |0> makes it odd.
  EXPECT_NEAR(parity_even_probability(DensityMatrix::basis_state(3, 0b111), ParityPair::Q1Q2), 1.0, 1e-14);
  EXPECT_NEAR(parity_even_probability(DensityMatrix::basis_state(3, 0b011), ParityPair::Q1Q2), 0.0, 1e-14);
  EXPECT_NEAR(parity_even_probability(DensityMatrix::basis_state(3, 0b001), ParityPair::Q3Q4), 0.0, 1e-14);
  EXPECT_THROW(parity_even_probability(DensityMatrix::basis_state(2, 0), ParityPair::Q1Q2), std::invalid_argument);
}

TEST(Parity, ProjectorsAreCompleteAndSamplingFollowsBorn) {
  std::mt19937_64 gen(61);
  const DensityMatrix rho = spinsim::testing::random_density(4, gen);
  for (ParityPair pair : {ParityPair::Q1Q2, ParityPair::Q3Q4}) {
    const double p_even = parity_even_probability(rho, pair);
    Rng rng(62);
    for (int i = 0; i < 50; ++i) {
      const ParityResult r = measure_parity(rho, pair, rng);
      // The post-measurement state has a definite parity.
      EXPECT_NEAR(parity_even_probability(r.collapsed, pair), r.outcome == Parity::Even ? 1.0 : 0.0, 1e-9);
      EXPECT_NEAR(r.collapsed.matrix().trace().real(), 1.0, 1e-12);
    }
    const int n = 20000;
    int even = 0;
    for (int i = 0; i < n; ++i) even += measure_parity(rho, pair, rng).outcome == Parity::Even;
    const double sigma = std::sqrt(p_even * (1 - p_even) / n);
    EXPECT_LE(std::abs(static_cast<double>(even) / n - p_even), 4 * sigma);
  }
}

TEST(Signals, InfiniteSnrIsExactAndClassifiesPerfectly) {
  ReadoutParams p = default_device_config().readout_sequential;
  p.snr1 = p.snr2 = 1e15;
  Rng rng(7);
  for (Parity o : {Parity::Even, Parity::Odd}) {
    for (int set = 0; set < 2; ++set) {
      const double s = sample_signal(o, set, p, rng);
      EXPECT_NEAR(s, mode_mean(o, p), 1e-12);
      EXPECT_EQ(classify(s, set, p), o);
    }
  }
  EXPECT_DOUBLE_EQ(mode_mean(Parity::Even, p), p.mu_blocked);
  EXPECT_DOUBLE_EQ(mode_mean(Parity::Odd, p), p.mu_unblocked);
}

TEST(Signals, SigmaFromSnr) {
  const ReadoutParams p = default_device_config().readout_sequential;
  EXPECT_NEAR(signal_sigma(0, p), std::abs(p.mu_blocked - p.mu_unblocked) / 9.4, 1e-15);
  EXPECT_NEAR(signal_sigma(1, p), std::abs(p.mu_blocked - p.mu_unblocked) / 6.2, 1e-15);
}

TEST(Signals, BimodalFitRecoversConfiguredSnrAndAnalyticFidelity) {
  const DeviceConfig cfg = default_device_config();
  const ReadoutParams p = cfg.readout_sequential;
  for (int set = 0; set < 2; ++set) {
    Rng rng(100 + static_cast<std::uint64_t>(set));
    std::vector<double> samples;
    for (int i = 0; i < 40000; ++i) samples.push_back(sample_signal(i % 2 ? Parity::Odd : Parity::Even, set, p, rng));
    const FitResult f = fit_bimodal(samples);
    const double snr = set == 0 ? p.snr1 : p.snr2;
    EXPECT_NEAR(f.param("snr") / snr, 1.0, 0.03);
    // Equal weights and widths: the optimal threshold sits midway and fidelity is Phi(SNR / 2).
    EXPECT_NEAR(f.param("charge_fidelity"), normal_cdf(snr / 2), 5e-4);
  }
}

TEST(Signals, SequentialIndependentSimultaneousCorrelated) {
  const DeviceConfig cfg = default_device_config();
  const auto seq = signal_pairs(cfg.readout_sequential, 100000, 5);
  EXPECT_LT(std::abs(correlation(seq.first, seq.second)), 0.02);
  const auto sim = signal_pairs(cfg.readout_simultaneous, 100000, 5);
  const double c_default = correlation(sim.first, sim.second);
  EXPECT_GT(c_default, 0.0);
  ReadoutParams stronger = cfg.readout_simultaneous;
  stronger.crosstalk12 = stronger.crosstalk21 = 0.15;
  const auto sim2 = signal_pairs(stronger, 100000, 5);
  EXPECT_GT(correlation(sim2.first, sim2.second), c_default);
}

TEST(Signals, SpinErrorFlipsAtConfiguredRate) {
  ReadoutParams p = default_device_config().readout_simultaneous;
  Rng rng(8);
  const int n = 100000;
  int flips = 0;
  for (int i = 0; i < n; ++i) flips += apply_spin_error(Parity::Even, p, rng) == Parity::Odd;
  const double sigma = std::sqrt(p.spin_error * (1 - p.spin_error) / n);
  EXPECT_NEAR(static_cast<double>(flips) / n, p.spin_error, 4 * sigma);
}

TEST(HeraldedInit, PerfectPreparationTakesOneAttempt) {
  const DeviceConfig cfg = spinsim::testing::ideal_readout_config();
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const InitResult r = heralded_init(cfg.init, cfg.readout_sequential, rng);
    EXPECT_EQ(r.attempts, 1);
    EXPECT_EQ(r.bits, (std::array<int, 4>{1, 1, 1, 1}));
    EXPECT_EQ(r.index(), 0b1111u);
  }
}

TEST(HeraldedInit, GeometricAttemptCount) {
  const DeviceConfig cfg = default_device_config();
  const double p_joint = cfg.init.p_even12 * cfg.init.p_even34;
  EXPECT_NEAR(p_joint, 0.613, 1e-12);
  Rng rng(2);
  const int n = 100000;
  double sum = 0;
  std::vector<int> hist(8, 0);
  for (int i = 0; i < n; ++i) {
    const int a = heralded_init(cfg.init, cfg.readout_sequential, rng).attempts;
    sum += a;
    if (a <= 3) hist[static_cast<std::size_t>(a)]++;
  }
  const double mean = sum / n;
  const double sd = std::sqrt((1 - p_joint) / (p_joint * p_joint) / n);
  EXPECT_NEAR(mean, 1.0 / p_joint, 3 * sd);
  EXPECT_NEAR(mean / 1.63, 1.0, 0.02);
  // P(attempts = k) = (1 - p)^(k - 1) p
  for (int k = 1; k <= 3; ++k) {
    const double expect = std::pow(1 - p_joint, k - 1) * p_joint;
    EXPECT_NEAR(hist[static_cast<std::size_t>(k)] / static_cast<double>(n), expect,
                4 * std::sqrt(expect * (1 - expect) / n));
  }
}

TEST(HeraldedInit, SimultaneousReadoutErrorsRaiseAttempts) {
  const DeviceConfig cfg = default_device_config();
  Rng a(3), b(3);
  const int n = 100000;
  double seq = 0, sim = 0;
  for (int i = 0; i < n; ++i) {
    seq += heralded_init(cfg.init, cfg.readout_sequential, a).attempts;
    sim += heralded_init(cfg.init, cfg.readout_simultaneous, b).attempts;
  }
  EXPECT_GT(sim / n, seq / n);
  EXPECT_NEAR(sim / n / 1.66, 1.0, 0.02);
}

TEST(HeraldedInit, AbortsAfterMaxAttempts) {
  DeviceConfig cfg = default_device_config();
  cfg.init.p_even12 = 1e-9;
  cfg.init.max_attempts = 5;
  Rng rng(4);
  EXPECT_THROW(heralded_init(cfg.init, cfg.readout_sequential, rng), std::runtime_error);
}

TEST(Timing, SequenceDurationsAtTenMicrosecondControl) {
  const DeviceConfig cfg = default_device_config();
  const double seq = sequence_duration(cfg, ReadoutMode::Sequential, 10e-6, 1);
  const double sim = sequence_duration(cfg, ReadoutMode::Simultaneous, 10e-6, 1);
  EXPECT_NEAR(seq / 1.1e-3, 1.0, 0.15);
  EXPECT_NEAR(sim / 700e-6, 1.0, 0.15);
  EXPECT_LT(sim, seq);
}

TEST(Timing, SimultaneousDoesNotScaleWithCells) {
  const DeviceConfig cfg = default_device_config();
  const double one = sequence_duration(cfg, ReadoutMode::Simultaneous, 10e-6, 1, 1);
  for (int cells : {2, 3, 8}) {
    EXPECT_DOUBLE_EQ(sequence_duration(cfg, ReadoutMode::Simultaneous, 10e-6, 1, cells), one);
    EXPECT_GT(sequence_duration(cfg, ReadoutMode::Sequential, 10e-6, 1, cells),
              sequence_duration(cfg, ReadoutMode::Sequential, 10e-6, 1, cells - 1));
  }
  EXPECT_DOUBLE_EQ(sequence_duration(cfg, ReadoutMode::Sequential, 10e-6, 1, 1), one);
}

TEST(Timing, LinearInAttemptsAndControl) {
  const DeviceConfig cfg = default_device_config();
  for (ReadoutMode m : {ReadoutMode::Sequential, ReadoutMode::Simultaneous}) {
    const double d1 = sequence_duration(cfg, m, 10e-6, 1), d2 = sequence_duration(cfg, m, 10e-6, 2),
                 d3 = sequence_duration(cfg, m, 10e-6, 3);
    EXPECT_NEAR(d3 - d2, d2 - d1, 1e-15);
    EXPECT_NEAR(sequence_duration(cfg, m, 30e-6, 1) - d1, 20e-6, 1e-15);
  }
  EXPECT_GE(readout_block_duration(cfg.readout_sequential),
            cfg.readout_sequential.t_reference_s + cfg.readout_sequential.t_read_s);
  EXPECT_THROW(sequence_duration(cfg, ReadoutMode::Sequential, -1e-6, 1), std::invalid_argument);
  EXPECT_THROW(sequence_duration(cfg, ReadoutMode::Sequential, 1e-6, 0), std::invalid_argument);
}

TEST(Calibration, RecoveredWindowEqualsAnalyticOracle) {
  const PsbWindowModel model = default_psb_model();
  const CalibrationGrid grid = default_calibration_grid();
  const CalibrationResult r = calibration_scan(model, grid, 200, 11, default_device_config().readout_sequential);
  ASSERT_EQ(r.points.size(), grid.d1.size() * grid.d2.size());
  std::set<std::pair<double, double>> recovered, oracle;
  for (const auto& w : r.window()) recovered.insert(w);
  for (double d1 : grid.d1)
    for (double d2 : grid.d2)
      if (model.valid(d1, d2)) oracle.insert({d1, d2});
  EXPECT_FALSE(oracle.empty());
  EXPECT_EQ(recovered, oracle);
}

TEST(Calibration, ToyRectangleWithCascadeStrip) {
  PsbWindowModel m;
  m.window = {Interval{-0.5, 0.5}, Interval{-0.4, 0.6}};
  m.cross_slope = {0.0, 0.0};
  m.cascade[0] = {Interval{0.1, 0.2}};  // DQD1 copies DQD2 when DQD2 sits in [0.1, 0.2)
  CalibrationGrid g;
  for (int i = -10; i <= 10; ++i) {
    g.d1.push_back(i * 0.1 + 0.05);
    g.d2.push_back(i * 0.1 + 0.05);
  }
  const CalibrationResult r = calibration_scan(m, g, 200, 5, default_device_config().readout_sequential);
  std::set<std::pair<double, double>> recovered;
  for (const auto& w : r.window()) recovered.insert(w);
  for (double d1 : g.d1) {
    for (double d2 : g.d2) {
      const bool inside = d1 >= -0.5 && d1 < 0.5 && d2 >= -0.4 && d2 < 0.6 && !(d2 >= 0.1 && d2 < 0.2);
      EXPECT_EQ(recovered.count({d1, d2}) == 1, inside) << d1 << "," << d2;
    }
  }
  EXPECT_FALSE(m.valid(0.0, 0.15));
  EXPECT_TRUE(m.in_cascade(0, 0.15));
}

TEST(Calibration, CrossCapacitanceShiftsWindow) {
  PsbWindowModel m;
  m.window = {Interval{-0.5, 0.5}, Interval{-0.5, 0.5}};
  m.cross_slope = {0.2, 0.0};
  const Interval w = m.window_at(0, 1.0);
  EXPECT_NEAR(w.lo, -0.3, 1e-12);
  EXPECT_NEAR(w.hi, 0.7, 1e-12);
}
