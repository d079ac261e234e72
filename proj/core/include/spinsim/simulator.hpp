#pragma once

// Monte-Carlo density-matrix evolution under quasi-static detuning and Markovian dephasing.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "spinsim/circuits.hpp"
#include "spinsim/device.hpp"
#include "spinsim/parallel.hpp"
#include "spinsim/qcore.hpp"
#include "spinsim/readout.hpp"
#include "spinsim/rng.hpp"

namespace spinsim {

struct NoiseRealization {
  std::array<double, 4> detuning_hz{};  // per device qubit
  std::uint64_t id = 0;
};

struct RunSpec {
  int shots = 1000;
  std::uint64_t seed = 0;
  bool noise_enabled = true;
  bool fast_dephasing_enabled = true;
};

struct ShotRecord {
  int setting_id = 0;
  int parity12 = 0;  // classified: 0 even (blockaded), 1 odd
  int parity34 = 0;
  double signal1 = 0.0;
  double signal2 = 0.0;
  int attempts = 0;
  std::uint64_t shot_seed = 0;

  bool operator==(const ShotRecord&) const = default;
};

/// Quasi-static detunings with angular standard deviation sqrt(2)/T2*, stored in Hz.
NoiseRealization draw_noise(const DeviceConfig& config, Rng& rng);
NoiseRealization draw_noise(const DeviceConfig& config, std::uint64_t seed);

/// Standard deviation in Hz of the quasi-static detuning of a device qubit.
double detuning_sigma_hz(const DeviceConfig& config, int device_qubit);

/// Evolves `initial` through the circuit. Gates act at their midpoints; between them each
/// qubit accrues the phase 2 pi delta dt and, if enabled, the dephasing factor
/// exp(-((t + dt)^p - t^p) / T2Hahn^p). Drive ops apply a resonant rotation followed by
/// dephasing in the X basis at rate 1/T2Rabi.
DensityMatrix evolve(const Circuit& c, const NoiseRealization& r, const DeviceConfig& config,
                     const DensityMatrix& initial, bool fast_dephasing = true);

/// In-place variant on a raw matrix for hot loops.
void evolve_inplace(const Circuit& c, const NoiseRealization& r, const DeviceConfig& config, CMatrix& rho,
                    bool fast_dephasing);

/// Full single-shot chain per shot: heralded init, fresh noise, evolution, parity sampling,
/// SET signals and classification. Shot i of `setting_id` draws from derive_seed(seed, setting_id, i).
std::vector<ShotRecord> run_shots(const Circuit& c, const RunSpec& spec, const DeviceConfig& config,
                                  int setting_id = 0);

/// Joint probabilities of (parity12, parity34), index 2 * p12 + p34, from a perfectly
/// initialised |111> with ideal readout, averaged over `realizations` noise draws (one if noise is off).
std::array<double, 4> exact_parity_distribution(const Circuit& c, const RunSpec& spec, const DeviceConfig& config,
                                                int setting_id = 0);

enum class SweepKind { Rabi, Ramsey, Hahn, Lifetime, ExchangeSweep };

std::string to_string(SweepKind kind);
SweepKind sweep_kind_from_string(const std::string& s);

struct SweepOptions {
  int qubit = 1;                  // device qubit for rabi, ramsey and hahn
  bool allow_undrivable = false;  // permits Q1
  StateKind state = StateKind::Cluster3;  // lifetime base state
  bool exact = false;             // Born probabilities instead of sampled shots (lifetime, exchange_sweep)
};

struct SweepTable {
  SweepKind kind;
  std::string parameter_name;
  std::vector<std::string> columns;
  std::vector<double> parameter;
  std::vector<std::vector<double>> values;  // one row per grid point

  std::vector<double> column(const std::string& name) const;
};

/// rabi: drive durations, column p_down (probability of |1>) averaged over `shots` realizations.
/// ramsey/hahn: idle tau, signed-axis expectations and bloch_length over `shots` realizations.
/// lifetime: tau around the refocusing pulses, the four Mermin terms from `shots` shots each.
/// exchange_sweep: exchange segment length in periods of 1/J, same columns as lifetime.
SweepTable run_sweep(SweepKind kind, const std::vector<double>& grid, const RunSpec& spec,
                     const DeviceConfig& config, const SweepOptions& options = {});

/// The four Mermin-term settings, in the order XXX, XYZ, ZXZ, ZYX.
const std::array<ProjectionSetting, 4>& mermin_settings();

}  // namespace spinsim
