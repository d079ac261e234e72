#pragma once

#include <array>
#include <string>

namespace spinsim {

struct QubitParams {
  double larmor_hz = 0.0;
  double rabi_hz = 0.0;
  double t2_star_s = 0.0;
  double t2_hahn_s = 0.0;
  double t2_rabi_s = 0.0;
  /// False for qubits whose drive is too slow for high-fidelity control.
  bool drivable = true;

  bool operator==(const QubitParams&) const = default;
};

/// Reported 2-sigma uncertainties; used for acceptance tolerances only.
struct QubitUncertainty {
  double rabi_hz = 0.0;
  double t2_rabi_s = 0.0;
  double t2_star_s = 0.0;
  double t2_hahn_s = 0.0;

  bool operator==(const QubitUncertainty&) const = default;
};

/// J(dv) = a * exp(b * dv) + c around the single-qubit operating point.
struct ExchangePairParams {
  double a_hz = 0.0;
  double b_per_volt = 0.0;
  double c_hz = 0.0;
  double operating_offset_v = 0.0;

  bool operator==(const ExchangePairParams&) const = default;
};

enum class ReadoutMode { Sequential, Simultaneous };

std::string to_string(ReadoutMode mode);
ReadoutMode readout_mode_from_string(const std::string& s);

struct ReadoutParams {
  double snr1 = 0.0;
  double snr2 = 0.0;
  double mu_blocked = 1.0;
  double mu_unblocked = 0.0;
  double threshold1 = 0.5;
  double threshold2 = 0.5;
  double t_reference_s = 100e-6;
  double t_read_s = 100e-6;
  double t_ramp_s = 20e-9;
  ReadoutMode mode = ReadoutMode::Sequential;
  /// Fraction of the neighbour's mode offset leaking into this SET (simultaneous mode).
  double crosstalk12 = 0.0;
  double crosstalk21 = 0.0;
  /// Probability that spin-to-charge conversion reports the wrong parity.
  double spin_error = 0.0;

  bool operator==(const ReadoutParams&) const = default;
};

struct InitParams {
  double p_even12 = 1.0;
  double p_even34 = 1.0;
  int max_attempts = 1000;

  bool operator==(const InitParams&) const = default;
};

/// Segments of the single-shot sequence not fixed by gate or readout durations.
struct TimingParams {
  double hold_s = 250e-6;      // relaxation hold in the (4,4,4,4) configuration
  double adiabatic_ramp_s = 38e-6;
  int n_cells = 2;

  bool operator==(const TimingParams&) const = default;
};

struct NoiseParams {
  /// Stretch exponent p of the fast dephasing envelope exp(-(t/T2)^p).
  double hahn_exponent = 1.0;

  bool operator==(const NoiseParams&) const = default;
};

struct DeviceConfig {
  std::array<QubitParams, 4> qubits{};
  std::array<QubitUncertainty, 4> uncertainties{};
  std::array<ExchangePairParams, 3> pairs{};  // J1 (Q1-Q2), J2 (Q2-Q3), J3 (Q3-Q4)
  ReadoutParams readout_sequential{};
  ReadoutParams readout_simultaneous{};
  ReadoutMode mode = ReadoutMode::Sequential;
  InitParams init{};
  TimingParams timing{};
  NoiseParams noise{};
  double b_field_t = 0.0;
  std::array<int, 4> charge_config{};

  const ReadoutParams& readout() const {
    return mode == ReadoutMode::Sequential ? readout_sequential : readout_simultaneous;
  }

  bool operator==(const DeviceConfig&) const = default;
};

DeviceConfig default_device_config();

/// Throws std::invalid_argument if any parameter violates its documented range.
void validate(const DeviceConfig& config);

double exchange_rate(const ExchangePairParams& pair, double dv);

/// Exchange strength at the pair's operating offset.
double operating_exchange_hz(const ExchangePairParams& pair);

struct GateDurations {
  double halfpi_s;
  double pi_s;
  double virtual_z_s;
};

GateDurations gate_durations(const DeviceConfig& config, int qubit);

/// Duration of an exchange pulse accumulating controlled phase `phase` on `pair`.
double exchange_duration(const DeviceConfig& config, int pair, double phase);

/// Key-value text, one "key = value" per line; '#' starts a comment.
/// Doubles are written with 17 significant digits so parsing is bit-exact.
std::string serialize_config(const DeviceConfig& config);

/// Missing keys keep their default values; unknown keys and malformed lines throw.
DeviceConfig parse_config(const std::string& text, const DeviceConfig& defaults = default_device_config());

DeviceConfig load_config(const std::string& path);

}  // namespace spinsim
