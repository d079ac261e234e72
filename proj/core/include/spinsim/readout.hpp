#pragma once

// Parity readout through Pauli spin blockade, SET signal synthesis, heralded
// initialisation, shot timing and the parallel-window calibration scan.

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "spinsim/circuits.hpp"
#include "spinsim/device.hpp"
#include "spinsim/qcore.hpp"
#include "spinsim/rng.hpp"

namespace spinsim {

/// Even parity states are blockaded; the blockaded SET mean is mu_blocked.
enum class Parity : int { Even = 0, Odd = 1 };

/// Probability that the pair reads even. `rho` holds either all four qubits or
/// Q2..Q4 with Q1 implicitly |1>.
double parity_even_probability(const DensityMatrix& rho, ParityPair pair);

struct ParityResult {
  Parity outcome;
  DensityMatrix collapsed;
};

ParityResult measure_parity(const DensityMatrix& rho, ParityPair pair, Rng& rng);

double mode_mean(Parity outcome, const ReadoutParams& params);
double signal_sigma(int set_index, const ReadoutParams& params);

/// One SET signal without crosstalk. set_index is 0 (SET1, Q1Q2) or 1 (SET2, Q3Q4).
double sample_signal(Parity outcome, int set_index, const ReadoutParams& params, Rng& rng);

/// Both SET signals. In simultaneous mode each SET picks up crosstalk times the
/// neighbour's mode offset from the midpoint.
std::array<double, 2> sample_signals(Parity o12, Parity o34, const ReadoutParams& params, Rng& rng);

Parity classify(double signal, int set_index, const ReadoutParams& params);

/// Spin-to-charge conversion error: flips the reported parity with probability spin_error.
Parity apply_spin_error(Parity outcome, const ReadoutParams& params, Rng& rng);

struct ReadoutShot {
  Parity true12, true34;
  Parity read12, read34;
  std::array<double, 2> signals;
};

/// Full readout chain for known true parities.
ReadoutShot read_parities(Parity true12, Parity true34, const ReadoutParams& params, Rng& rng);

struct InitResult {
  std::array<int, 4> bits{};  // computational bits of Q1..Q4
  int attempts = 0;
  std::uint32_t index() const;
};

/// Repeat-until-success initialisation of |1111>: ramp each pair (target parity with
/// probability p_even), flip Q2 and Q3, read both parities, accept iff both read even.
InitResult heralded_init(const InitParams& init, const ReadoutParams& params, Rng& rng);

/// Wall-clock length of one readout block on a single DQD.
double readout_block_duration(const ReadoutParams& params);

/// Single-shot sequence duration: init attempts, control block and final readout.
/// Sequential mode reads the unit cells one after another, simultaneous mode reads them at once.
double sequence_duration(const DeviceConfig& config, ReadoutMode mode, double u_c_s, int attempts,
                         int n_cells);
double sequence_duration(const DeviceConfig& config, ReadoutMode mode, double u_c_s, int attempts);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const { return x >= lo && x < hi; }
};

/// Phenomenological blockade-window model for two DQDs scanned along their detunings.
struct PsbWindowModel {
  /// Window of DQD k along its own detuning at zero neighbour detuning.
  std::array<Interval, 2> window{};
  /// Window shift of DQD k per volt of neighbour detuning (cross-capacitance).
  std::array<double, 2> cross_slope{};
  /// Neighbour-detuning intervals in which DQD k's readout copies the neighbour's outcome.
  std::array<std::vector<Interval>, 2> cascade{};

  Interval window_at(int dqd, double neighbour_detuning) const;
  bool in_cascade(int dqd, double neighbour_detuning) const;
  /// Analytic oracle: both DQDs in their windows and neither in a cascade strip.
  bool valid(double d1, double d2) const;
};

struct CalibrationGrid {
  std::vector<double> d1;
  std::vector<double> d2;
};

struct CalibrationPoint {
  double d1, d2;
  double thresholded1;  // fraction of shots read blockaded on SET1
  double thresholded2;
  double sum;           // mean of thresholded1 + thresholded2 per shot
  double sum_one;       // fraction of shots whose thresholded sum is exactly 1
  bool in_window;
};

struct CalibrationResult {
  std::vector<CalibrationPoint> points;  // d1 major, d2 minor
  std::size_t n1 = 0, n2 = 0;
  std::vector<std::pair<double, double>> window() const;
};

/// Prepares anti-correlated parity pairs (one DQD even, the other odd, at random), scans both
/// detunings and keeps the points where each SET reads both outcomes equally and every shot
/// sums to one.
CalibrationResult calibration_scan(const PsbWindowModel& model, const CalibrationGrid& grid, int shots,
                                   std::uint64_t seed, const ReadoutParams& params);

}  // namespace spinsim
