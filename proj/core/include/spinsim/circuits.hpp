#pragma once

// Timed circuit representation and the builders for the three-qubit experiments.
//
// Circuit qubit indices are local to the circuit; `device_qubits` maps them to
// device qubits 0..3 (Q1..Q4). The three-qubit experiments use Q2, Q3, Q4.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "spinsim/device.hpp"
#include "spinsim/qcore.hpp"

namespace spinsim {

enum class OpKind { SqrtX, PiX, VirtualZ, Exchange, Wait, MeasureParity, Drive };

std::string to_string(OpKind kind);
OpKind op_kind_from_string(const std::string& s);

/// Device-level readout pairs.
enum class ParityPair { Q1Q2 = 0, Q3Q4 = 1 };

struct TimedOp {
  OpKind kind = OpKind::Wait;
  std::vector<int> targets;  // circuit qubit indices
  double start_s = 0.0;
  double duration_s = 0.0;
  double phase = 0.0;        // VirtualZ angle or accumulated controlled phase of an Exchange
  int pair = -1;             // ParityPair for MeasureParity

  double end_s() const { return start_s + duration_s; }
  bool operator==(const TimedOp&) const = default;
};

enum class StateKind { Plus3, Cluster3, Ghz3, Init3 };

std::string to_string(StateKind kind);
StateKind state_kind_from_string(const std::string& s);

/// Timing knobs of the laddered entangling block.
struct StateTiming {
  double tau_s = 0.0;   // idle inserted on each side of the refocusing pulses
  double t_j2_s = 0.0;  // duration of each J2 exchange segment
  double t_j3_s = 0.0;  // duration of each J3 exchange segment
  bool operator==(const StateTiming&) const = default;
};

struct StateRecipe {
  StateKind kind;
  StateTiming timing;
  bool operator==(const StateRecipe&) const = default;
};

struct Circuit {
  int n_qubits = 0;
  std::vector<int> device_qubits;
  std::vector<TimedOp> ops;  // ordered by start time, stable
  std::optional<StateRecipe> recipe;

  double end_time() const;
  double qubit_end(int q) const;
  int device_pair_index(int qa, int qb) const;  // exchange pair 0..2 (J1..J3)
  bool operator==(const Circuit&) const = default;
};

/// Throws if ops overlap on a qubit, leave gaps, or have negative duration.
void check_timeline(const Circuit& c);

nlohmann::json to_json(const Circuit& c);

/// ASAP per-qubit scheduler that fills idle intervals with explicit waits.
class Scheduler {
 public:
  Scheduler(const DeviceConfig& config, std::vector<int> device_qubits, bool allow_undrivable = false);

  const DeviceConfig& config() const { return config_; }
  int device_qubit(int q) const { return device_qubits_.at(static_cast<std::size_t>(q)); }
  double clock(int q) const { return clock_[static_cast<std::size_t>(q)]; }
  double max_clock() const;

  void sqrt_x(int q);
  void pi_x(int q);
  void virtual_z(int q, double phi);
  void wait(int q, double duration_s);
  void drive(int q, double duration_s);
  /// Exchange pulse of the given duration on adjacent qubits; both are first aligned.
  void exchange(int qa, int qb, double duration_s);
  void wait_until(int q, double t);
  void align(const std::vector<int>& qubits);
  void align_all();
  /// Pi pulses on `qubits`, all centred on a common instant after alignment.
  void refocus(const std::vector<int>& qubits);
  void measure(ParityPair pair);

  Circuit finish();

 private:
  void push(OpKind kind, std::vector<int> targets, double duration, double phase = 0.0);
  void check_qubit(int q) const;
  void check_drivable(int q) const;

  const DeviceConfig& config_;
  std::vector<int> device_qubits_;
  bool allow_undrivable_;
  std::vector<double> clock_;
  std::vector<TimedOp> ops_;
};

/// One VirtualZ-SqrtX-VirtualZ-SqrtX-VirtualZ sequence; angles in radians.
struct Triplet {
  double phi1, phi2, phi3;
};

/// Signed Bloch axis such as +X or -Z.
struct Axis {
  Pauli pauli = Pauli::Z;
  int sign = +1;
  std::string label() const;
  static Axis parse(const std::string& s);
  bool operator==(const Axis&) const = default;
};

/// The six signed axes in the order +X, -X, +Y, -Y, +Z, -Z.
const std::array<Axis, 6>& all_axes();

/// Triplet mapping `axis` onto +Z and its antipode onto -Z.
Triplet projection_triplet(const Axis& axis);

/// Ops realizing the single-qubit projection onto `axis`, relative to t = 0.
std::vector<TimedOp> projection_1q(const Axis& axis, int qubit, const DeviceConfig& config, int device_qubit);

/// Two-qubit projection on Q3-Q4 whose parity readout yields one qubit's Pauli expectation.
/// kind 1..3 targets Q3 with X, Y, Z; kind 4..6 targets Q4 with X, Y, Z.
struct TwoQubitProjection {
  int kind = 1;
  int sign_c = +1;
  int sign_d = +1;

  int target() const { return kind <= 3 ? 0 : 1; }  // 0 = Q3, 1 = Q4
  Pauli axis() const { return static_cast<Pauli>((kind - 1) % 3 + 1); }
  std::string label() const;
  bool operator==(const TwoQubitProjection&) const = default;
};

/// Stage-A triplets (Q3, Q4) of a two-qubit projection kind.
std::array<Triplet, 2> projection_2q_stage_a(int kind);
/// Stage-B triplets (Q3, Q4) of a two-qubit projection.
std::array<Triplet, 2> projection_2q_stage_b(const TwoQubitProjection& p);

/// Appends a two-qubit projection on circuit qubits (q3, q4) to the scheduler.
void append_projection_2q(Scheduler& s, const TwoQubitProjection& p, int q3, int q4);

/// Standalone two-qubit projection on a two-qubit circuit (Q3, Q4).
Circuit projection_2q(const TwoQubitProjection& p, const DeviceConfig& config);

struct ProjectionSetting {
  int id = 0;
  std::array<Axis, 3> axes{};  // Q2, Q3, Q4; only axes[0] is used when two_q is set
  std::optional<TwoQubitProjection> two_q;

  bool is_two_qubit() const { return two_q.has_value(); }
  std::string label() const;
};

/// 216 single-qubit settings followed by 144 settings with a two-qubit projection.
const std::vector<ProjectionSetting>& enumerate_settings();

/// Default timing of the entangling block: each exchange segment is a sqrt(CZ).
StateTiming default_state_timing(const DeviceConfig& config);

Circuit build_state_circuit(StateKind kind, const DeviceConfig& config);
Circuit build_state_circuit(StateKind kind, const DeviceConfig& config, const StateTiming& timing);

/// Rebuilds `c` with symmetric idle `tau_s` around the refocusing pulses and the given
/// exchange segment durations (negative t_j2/t_j3 keep the current values).
Circuit modify_timing(const Circuit& c, double tau_s, double t_j2_s, double t_j3_s, const DeviceConfig& config);

/// State circuit followed by the setting's projections and both parity measurements.
Circuit measurement_circuit(StateKind kind, const StateTiming& timing, const ProjectionSetting& setting,
                            const DeviceConfig& config);

struct EchoReport {
  int qubit = 0;
  bool has_pi = false;
  bool balanced = true;
  double before_s = 0.0;
  double after_s = 0.0;
  double imbalance_s = 0.0;  // |after - before|
};

/// Free evolution before vs after each qubit's refocusing pulse. Before runs from the end of
/// the last single-qubit rotation preceding the pulse to its centre; after runs from the
/// centre to the end of the circuit. Throws if a qubit carries more than one pi pulse.
std::vector<EchoReport> echo_symmetry_check(const Circuit& c);

}  // namespace spinsim
