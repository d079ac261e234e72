#include "spinsim/readout.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace spinsim {

namespace {

// Register positions of the pair's qubits, or -1 for an implicit Q1 fixed in |1>.
std::pair<int, int> pair_positions(int n_qubits, ParityPair pair) {
  if (n_qubits == 4) return pair == ParityPair::Q1Q2 ? std::pair{0, 1} : std::pair{2, 3};
  if (n_qubits == 3) return pair == ParityPair::Q1Q2 ? std::pair{-1, 0} : std::pair{1, 2};
  throw std::invalid_argument("parity readout needs a 3- or 4-qubit state");
}

bool is_even(std::uint32_t index, int n, std::pair<int, int> pos) {
  auto bit = [&](int q) { return q < 0 ? 1 : static_cast<int>((index >> (n - 1 - q)) & 1u); };
  return bit(pos.first) == bit(pos.second);
}

}  // namespace

double parity_even_probability(const DensityMatrix& rho, ParityPair pair) {
  const int n = rho.n_qubits();
  const auto pos = pair_positions(n, pair);
  double p = 0.0;
  for (int k = 0; k < rho.dim(); ++k) {
    if (is_even(static_cast<std::uint32_t>(k), n, pos)) p += rho(k, k).real();
  }
  return std::clamp(p, 0.0, 1.0);
}

ParityResult measure_parity(const DensityMatrix& rho, ParityPair pair, Rng& rng) {
  const int n = rho.n_qubits();
  const auto pos = pair_positions(n, pair);
  const double p_even = parity_even_probability(rho, pair);
  const Parity outcome = rng.uniform() < p_even ? Parity::Even : Parity::Odd;
  const double p = outcome == Parity::Even ? p_even : 1.0 - p_even;
  CMatrix m = rho.matrix();
  for (int r = 0; r < rho.dim(); ++r) {
    for (int c = 0; c < rho.dim(); ++c) {
      const bool keep = is_even(static_cast<std::uint32_t>(r), n, pos) == (outcome == Parity::Even) &&
                        is_even(static_cast<std::uint32_t>(c), n, pos) == (outcome == Parity::Even);
      m(r, c) = keep ? m(r, c) / p : Complex(0.0);
    }
  }
  return {outcome, DensityMatrix::unchecked(std::move(m))};
}

double mode_mean(Parity outcome, const ReadoutParams& params) {
  return outcome == Parity::Even ? params.mu_blocked : params.mu_unblocked;
}

double signal_sigma(int set_index, const ReadoutParams& params) {
  const double snr = set_index == 0 ? params.snr1 : params.snr2;
  if (std::isinf(snr)) return 0.0;
  return std::abs(params.mu_blocked - params.mu_unblocked) / snr;
}

double sample_signal(Parity outcome, int set_index, const ReadoutParams& params, Rng& rng) {
  const double sigma = signal_sigma(set_index, params);
  const double mu = mode_mean(outcome, params);
  return sigma > 0 ? rng.normal(mu, sigma) : mu;
}

std::array<double, 2> sample_signals(Parity o12, Parity o34, const ReadoutParams& params, Rng& rng) {
  std::array<double, 2> s = {sample_signal(o12, 0, params, rng), sample_signal(o34, 1, params, rng)};
  if (params.mode == ReadoutMode::Simultaneous) {
    const double mid = 0.5 * (params.mu_blocked + params.mu_unblocked);
    s[0] += params.crosstalk12 * (mode_mean(o34, params) - mid);
    s[1] += params.crosstalk21 * (mode_mean(o12, params) - mid);
  }
  return s;
}

Parity classify(double signal, int set_index, const ReadoutParams& params) {
  const double threshold = set_index == 0 ? params.threshold1 : params.threshold2;
  const bool blocked_high = params.mu_blocked > params.mu_unblocked;
  return (signal > threshold) == blocked_high ? Parity::Even : Parity::Odd;
}

Parity apply_spin_error(Parity outcome, const ReadoutParams& params, Rng& rng) {
  if (params.spin_error > 0 && rng.bernoulli(params.spin_error)) {
    return outcome == Parity::Even ? Parity::Odd : Parity::Even;
  }
  return outcome;
}

ReadoutShot read_parities(Parity true12, Parity true34, const ReadoutParams& params, Rng& rng) {
  const Parity c12 = apply_spin_error(true12, params, rng);
  const Parity c34 = apply_spin_error(true34, params, rng);
  const auto signals = sample_signals(c12, c34, params, rng);
  return {true12, true34, classify(signals[0], 0, params), classify(signals[1], 1, params), signals};
}

std::uint32_t InitResult::index() const {
  std::uint32_t idx = 0;
  for (int b : bits) idx = (idx << 1) | static_cast<std::uint32_t>(b);
  return idx;
}

InitResult heralded_init(const InitParams& init, const ReadoutParams& params, Rng& rng) {
  InitResult r;
  for (int attempt = 1; attempt <= init.max_attempts; ++attempt) {
    // Ramp from (4,4,4,4) into |down up up down>; a failed ramp leaves an odd pair.
    const bool ok12 = rng.bernoulli(init.p_even12);
    const bool ok34 = rng.bernoulli(init.p_even34);
    // After X on Q2 and Q3 a successful pair is |11>, a failed one |10> or |01>.
    auto pair_bits = [&](bool ok) -> std::array<int, 2> {
      if (ok) return {1, 1};
      return rng.bernoulli(0.5) ? std::array<int, 2>{1, 0} : std::array<int, 2>{0, 1};
    };
    const auto b12 = pair_bits(ok12);
    const auto b34 = pair_bits(ok34);
    r.bits = {b12[0], b12[1], b34[0], b34[1]};
    r.attempts = attempt;
    const Parity t12 = b12[0] == b12[1] ? Parity::Even : Parity::Odd;
    const Parity t34 = b34[0] == b34[1] ? Parity::Even : Parity::Odd;
    const ReadoutShot shot = read_parities(t12, t34, params, rng);
    if (shot.read12 == Parity::Even && shot.read34 == Parity::Even) return r;
  }
  throw std::runtime_error("heralded initialisation exceeded " + std::to_string(init.max_attempts) + " attempts");
}

double readout_block_duration(const ReadoutParams& params) {
  return params.t_reference_s + params.t_read_s + 2.0 * params.t_ramp_s;
}

double sequence_duration(const DeviceConfig& config, ReadoutMode mode, double u_c_s, int attempts, int n_cells) {
  if (u_c_s < 0) throw std::invalid_argument("control block duration must be non-negative");
  if (attempts < 1) throw std::invalid_argument("attempts must be >= 1");
  if (n_cells < 1) throw std::invalid_argument("n_cells must be >= 1");
  const ReadoutParams& params =
      mode == ReadoutMode::Sequential ? config.readout_sequential : config.readout_simultaneous;
  const double block = readout_block_duration(params);
  const double readout = mode == ReadoutMode::Sequential ? n_cells * block : block;
  // X gates on Q2 and Q3 run concurrently.
  const double x_gates = std::max(gate_durations(config, 1).pi_s, gate_durations(config, 2).pi_s);
  const double init = config.timing.hold_s + config.timing.adiabatic_ramp_s + x_gates + readout;
  return attempts * init + u_c_s + readout;
}

double sequence_duration(const DeviceConfig& config, ReadoutMode mode, double u_c_s, int attempts) {
  return sequence_duration(config, mode, u_c_s, attempts, config.timing.n_cells);
}

Interval PsbWindowModel::window_at(int dqd, double neighbour_detuning) const {
  const Interval& w = window.at(static_cast<std::size_t>(dqd));
  const double shift = cross_slope.at(static_cast<std::size_t>(dqd)) * neighbour_detuning;
  return {w.lo + shift, w.hi + shift};
}

bool PsbWindowModel::in_cascade(int dqd, double neighbour_detuning) const {
  for (const auto& s : cascade.at(static_cast<std::size_t>(dqd))) {
    if (s.contains(neighbour_detuning)) return true;
  }
  return false;
}

bool PsbWindowModel::valid(double d1, double d2) const {
  return window_at(0, d2).contains(d1) && window_at(1, d1).contains(d2) && !in_cascade(0, d2) && !in_cascade(1, d1);
}

std::vector<std::pair<double, double>> CalibrationResult::window() const {
  std::vector<std::pair<double, double>> out;
  for (const auto& p : points) {
    if (p.in_window) out.emplace_back(p.d1, p.d2);
  }
  return out;
}

CalibrationResult calibration_scan(const PsbWindowModel& model, const CalibrationGrid& grid, int shots,
                                   std::uint64_t seed, const ReadoutParams& params) {
  if (grid.d1.empty() || grid.d2.empty()) throw std::invalid_argument("calibration grid is empty");
  if (shots < 1) throw std::invalid_argument("shots must be >= 1");
  for (int k = 0; k < 2; ++k) {
    if (!(model.window[k].hi > model.window[k].lo)) throw std::invalid_argument("blockade window is empty");
  }
  CalibrationResult result;
  result.n1 = grid.d1.size();
  result.n2 = grid.d2.size();
  std::uint64_t point = 0;
  for (double d1 : grid.d1) {
    for (double d2 : grid.d2) {
      const double det[2] = {d1, d2};
      long blocked[2] = {0, 0}, sum_total = 0, sum_one = 0;
      for (int s = 0; s < shots; ++s) {
        Rng rng(derive_seed(seed, point, static_cast<std::uint64_t>(s)));
        const bool first_even = rng.bernoulli(0.5);
        const Parity truth[2] = {first_even ? Parity::Even : Parity::Odd, first_even ? Parity::Odd : Parity::Even};
        // Charge response of each DQD: outside its window the state is fixed by detuning alone.
        Parity charge[2];
        for (int k = 0; k < 2; ++k) {
          const Interval w = model.window_at(k, det[1 - k]);
          if (det[k] < w.lo) {
            charge[k] = Parity::Even;
          } else if (det[k] >= w.hi) {
            charge[k] = Parity::Odd;
          } else {
            charge[k] = apply_spin_error(truth[k], params, rng);
          }
        }
        // Cascaded readout: the affected DQD follows its neighbour's charge state.
        const bool c0 = model.in_cascade(0, d2), c1 = model.in_cascade(1, d1);
        if (c1) {
          charge[1] = charge[0];
        } else if (c0) {
          charge[0] = charge[1];
        }
        const auto sig = sample_signals(charge[0], charge[1], params, rng);
        int read[2];
        for (int k = 0; k < 2; ++k) read[k] = classify(sig[k], k, params) == Parity::Even ? 1 : 0;
        blocked[0] += read[0];
        blocked[1] += read[1];
        sum_total += read[0] + read[1];
        sum_one += (read[0] + read[1] == 1) ? 1 : 0;
      }
      CalibrationPoint p{d1, d2, static_cast<double>(blocked[0]) / shots, static_cast<double>(blocked[1]) / shots,
                         static_cast<double>(sum_total) / shots, static_cast<double>(sum_one) / shots, false};
      p.in_window = p.thresholded1 >= 0.25 && p.thresholded1 <= 0.75 && p.thresholded2 >= 0.25 &&
                    p.thresholded2 <= 0.75 && p.sum_one >= 0.9;
      result.points.push_back(p);
      ++point;
    }
  }
  return result;
}

}  // namespace spinsim
