#include "spinsim/circuits.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace spinsim {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2;
constexpr double kTimeTol = 1e-15;

}  // namespace

std::string to_string(OpKind kind) {
  switch (kind) {
    case OpKind::SqrtX: return "sqrtX";
    case OpKind::PiX: return "piX";
    case OpKind::VirtualZ: return "virtualZ";
    case OpKind::Exchange: return "exchange";
    case OpKind::Wait: return "wait";
    case OpKind::MeasureParity: return "measureParity";
    case OpKind::Drive: return "drive";
  }
  return "unknown";
}

OpKind op_kind_from_string(const std::string& s) {
  for (OpKind k : {OpKind::SqrtX, OpKind::PiX, OpKind::VirtualZ, OpKind::Exchange, OpKind::Wait,
                   OpKind::MeasureParity, OpKind::Drive}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown op kind '" + s + "'");
}

std::string to_string(StateKind kind) {
  switch (kind) {
    case StateKind::Plus3: return "plus3";
    case StateKind::Cluster3: return "cluster3";
    case StateKind::Ghz3: return "ghz3";
    case StateKind::Init3: return "init3";
  }
  return "unknown";
}

StateKind state_kind_from_string(const std::string& s) {
  for (StateKind k : {StateKind::Plus3, StateKind::Cluster3, StateKind::Ghz3, StateKind::Init3}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown state kind '" + s + "'");
}

double Circuit::end_time() const {
  double t = 0.0;
  for (const auto& op : ops) t = std::max(t, op.end_s());
  return t;
}

double Circuit::qubit_end(int q) const {
  double t = 0.0;
  for (const auto& op : ops) {
    if (std::find(op.targets.begin(), op.targets.end(), q) != op.targets.end()) t = std::max(t, op.end_s());
  }
  return t;
}

int Circuit::device_pair_index(int qa, int qb) const {
  const int a = device_qubits.at(static_cast<std::size_t>(qa));
  const int b = device_qubits.at(static_cast<std::size_t>(qb));
  if (std::abs(a - b) != 1) throw std::invalid_argument("exchange requires adjacent device qubits");
  return std::min(a, b);
}

void check_timeline(const Circuit& c) {
  for (int q = 0; q < c.n_qubits; ++q) {
    std::vector<std::pair<double, double>> spans;
    for (const auto& op : c.ops) {
      if (op.duration_s < 0) throw std::invalid_argument("negative op duration");
      if (op.kind == OpKind::MeasureParity) continue;
      if (std::find(op.targets.begin(), op.targets.end(), q) != op.targets.end()) {
        spans.emplace_back(op.start_s, op.end_s());
      }
    }
    std::sort(spans.begin(), spans.end());
    double t = 0.0;
    for (const auto& [s, e] : spans) {
      const double tol = 1e-12 * std::max(1.0, std::abs(t)) + kTimeTol;
      if (s < t - tol) throw std::invalid_argument("ops overlap on qubit " + std::to_string(q));
      if (s > t + tol) throw std::invalid_argument("unaccounted gap on qubit " + std::to_string(q));
      t = e;
    }
  }
}

nlohmann::json to_json(const Circuit& c) {
  nlohmann::json ops = nlohmann::json::array();
  for (const auto& op : c.ops) {
    nlohmann::json j = {{"kind", to_string(op.kind)},
                        {"targets", op.targets},
                        {"start_s", op.start_s},
                        {"duration_s", op.duration_s},
                        {"phase", op.phase}};
    if (op.kind == OpKind::MeasureParity) j["pair"] = op.pair == 0 ? "Q1Q2" : "Q3Q4";
    ops.push_back(std::move(j));
  }
  return {{"n_qubits", c.n_qubits}, {"device_qubits", c.device_qubits}, {"duration_s", c.end_time()}, {"ops", ops}};
}

// ---------------------------------------------------------------------------------------------

Scheduler::Scheduler(const DeviceConfig& config, std::vector<int> device_qubits, bool allow_undrivable)
    : config_(config),
      device_qubits_(std::move(device_qubits)),
      allow_undrivable_(allow_undrivable),
      clock_(device_qubits_.size(), 0.0) {
  for (int d : device_qubits_) {
    if (d < 0 || d >= 4) throw std::invalid_argument("device qubit index out of range");
  }
}

double Scheduler::max_clock() const {
  return clock_.empty() ? 0.0 : *std::max_element(clock_.begin(), clock_.end());
}

void Scheduler::check_qubit(int q) const {
  if (q < 0 || q >= static_cast<int>(clock_.size())) throw std::out_of_range("circuit qubit out of range");
}

void Scheduler::check_drivable(int q) const {
  const int d = device_qubits_[static_cast<std::size_t>(q)];
  if (!allow_undrivable_ && !config_.qubits[static_cast<std::size_t>(d)].drivable) {
    throw std::invalid_argument("Q" + std::to_string(d + 1) + " is flagged non-drivable");
  }
}

void Scheduler::push(OpKind kind, std::vector<int> targets, double duration, double phase) {
  if (duration < 0 || !std::isfinite(duration)) throw std::invalid_argument("op duration must be finite and >= 0");
  double start = 0.0;
  for (int q : targets) start = std::max(start, clock(q));
  TimedOp op{kind, std::move(targets), start, duration, phase, -1};
  for (int q : op.targets) clock_[static_cast<std::size_t>(q)] = start + duration;
  ops_.push_back(std::move(op));
}

void Scheduler::sqrt_x(int q) {
  check_qubit(q);
  check_drivable(q);
  push(OpKind::SqrtX, {q}, gate_durations(config_, device_qubits_[q]).halfpi_s);
}

void Scheduler::pi_x(int q) {
  check_qubit(q);
  check_drivable(q);
  push(OpKind::PiX, {q}, gate_durations(config_, device_qubits_[q]).pi_s);
}

void Scheduler::virtual_z(int q, double phi) {
  check_qubit(q);
  if (!std::isfinite(phi)) throw std::invalid_argument("virtual Z phase must be finite");
  push(OpKind::VirtualZ, {q}, gate_durations(config_, device_qubits_[q]).virtual_z_s, phi);
}

void Scheduler::wait(int q, double duration_s) {
  check_qubit(q);
  if (duration_s < 0) throw std::invalid_argument("negative wait");
  if (duration_s == 0) return;
  push(OpKind::Wait, {q}, duration_s);
}

void Scheduler::drive(int q, double duration_s) {
  check_qubit(q);
  check_drivable(q);
  push(OpKind::Drive, {q}, duration_s);
}

void Scheduler::wait_until(int q, double t) {
  check_qubit(q);
  const double dt = t - clock(q);
  if (dt < -1e-15) throw std::invalid_argument("wait_until target lies in the past");
  if (dt > 0) wait(q, dt);
}

void Scheduler::align(const std::vector<int>& qubits) {
  double t = 0.0;
  for (int q : qubits) t = std::max(t, clock(q));
  for (int q : qubits) wait_until(q, t);
}

void Scheduler::align_all() {
  std::vector<int> all(clock_.size());
  for (std::size_t q = 0; q < all.size(); ++q) all[q] = static_cast<int>(q);
  align(all);
}

void Scheduler::exchange(int qa, int qb, double duration_s) {
  check_qubit(qa);
  check_qubit(qb);
  if (qa == qb) throw std::invalid_argument("exchange needs two distinct qubits");
  const int da = device_qubits_[qa], db = device_qubits_[qb];
  if (std::abs(da - db) != 1) throw std::invalid_argument("exchange requires adjacent device qubits");
  const double j = operating_exchange_hz(config_.pairs[static_cast<std::size_t>(std::min(da, db))]);
  align({qa, qb});
  push(OpKind::Exchange, {qa, qb}, duration_s, 2.0 * std::numbers::pi * j * duration_s);
}

void Scheduler::refocus(const std::vector<int>& qubits) {
  align(qubits);
  double longest = 0.0;
  for (int q : qubits) longest = std::max(longest, gate_durations(config_, device_qubits_[q]).pi_s);
  const double t0 = clock(qubits.front());
  for (int q : qubits) {
    const double pad = 0.5 * (longest - gate_durations(config_, device_qubits_[q]).pi_s);
    wait_until(q, t0 + pad);
    pi_x(q);
    wait_until(q, t0 + longest);
  }
}

void Scheduler::measure(ParityPair pair) {
  std::vector<int> targets;
  const int lo = pair == ParityPair::Q1Q2 ? 0 : 2;
  for (std::size_t q = 0; q < device_qubits_.size(); ++q) {
    if (device_qubits_[q] == lo || device_qubits_[q] == lo + 1) targets.push_back(static_cast<int>(q));
  }
  double t = max_clock();
  TimedOp op{OpKind::MeasureParity, std::move(targets), t, 0.0, 0.0, static_cast<int>(pair)};
  ops_.push_back(std::move(op));
}

Circuit Scheduler::finish() {
  Circuit c;
  c.n_qubits = static_cast<int>(device_qubits_.size());
  c.device_qubits = device_qubits_;
  c.ops = ops_;
  std::stable_sort(c.ops.begin(), c.ops.end(),
                   [](const TimedOp& a, const TimedOp& b) { return a.start_s < b.start_s; });
  return c;
}

// ---------------------------------------------------------------------------------------------

std::string Axis::label() const { return std::string(sign > 0 ? "+" : "-") + pauli_char(pauli); }

Axis Axis::parse(const std::string& s) {
  if (s.size() != 2 || (s[0] != '+' && s[0] != '-')) throw std::invalid_argument("bad axis label '" + s + "'");
  const Pauli p = pauli_from_char(s[1]);
  if (p == Pauli::I) throw std::invalid_argument("axis cannot be I");
  return {p, s[0] == '+' ? +1 : -1};
}

const std::array<Axis, 6>& all_axes() {
  static const std::array<Axis, 6> axes = {Axis{Pauli::X, +1}, Axis{Pauli::X, -1}, Axis{Pauli::Y, +1},
                                           Axis{Pauli::Y, -1}, Axis{Pauli::Z, +1}, Axis{Pauli::Z, -1}};
  return axes;
}

namespace {

Triplet quarter_turns(int a, int b, int c) { return {a * kHalfPi, b * kHalfPi, c * kHalfPi}; }

void append_triplet(Scheduler& s, int q, const Triplet& t) {
  s.virtual_z(q, t.phi1);
  s.sqrt_x(q);
  s.virtual_z(q, t.phi2);
  s.sqrt_x(q);
  s.virtual_z(q, t.phi3);
}

double triplet_duration(const DeviceConfig& config, int device_qubit) {
  const auto g = gate_durations(config, device_qubit);
  return 3 * g.virtual_z_s + 2 * g.halfpi_s;
}

}  // namespace

// Found by exhaustive search over quarter-turn phases; verified against all six cardinal states in tests.
Triplet projection_triplet(const Axis& axis) {
  switch (axis.pauli) {
    case Pauli::X: return axis.sign > 0 ? quarter_turns(0, 1, 0) : quarter_turns(0, 3, 0);
    case Pauli::Y: return axis.sign > 0 ? quarter_turns(1, 3, 0) : quarter_turns(1, 1, 0);
    case Pauli::Z: return axis.sign > 0 ? quarter_turns(0, 2, 0) : quarter_turns(0, 0, 0);
    case Pauli::I: break;
  }
  throw std::invalid_argument("projection axis must be X, Y or Z");
}

std::vector<TimedOp> projection_1q(const Axis& axis, int qubit, const DeviceConfig& config, int device_qubit) {
  std::vector<int> dev(static_cast<std::size_t>(qubit + 1), device_qubit);
  Scheduler s(config, dev);
  append_triplet(s, qubit, projection_triplet(axis));
  return s.finish().ops;
}

std::string TwoQubitProjection::label() const {
  return std::string("P2Q[") + (target() == 0 ? "Q3" : "Q4") + ":" + pauli_char(axis()) +
         (sign_c > 0 ? "+" : "-") + (sign_d > 0 ? "+" : "-") + "]";
}

// Stage A rotates the target's axis so that, after the dCZ and stage B, the Q3-Q4 parity
// equals sign_c * sign_d times the target's Pauli operator. Same search and test as above.
std::array<Triplet, 2> projection_2q_stage_a(int kind) {
  switch (kind) {
    case 1: return {quarter_turns(0, 0, 3), quarter_turns(0, 0, 0)};
    case 2: return {quarter_turns(0, 0, 0), quarter_turns(0, 0, 0)};
    case 3: return {quarter_turns(0, 1, 3), quarter_turns(0, 0, 0)};
    case 4: return {quarter_turns(0, 0, 0), quarter_turns(0, 0, 3)};
    case 5: return {quarter_turns(0, 0, 0), quarter_turns(0, 0, 0)};
    case 6: return {quarter_turns(0, 0, 0), quarter_turns(0, 1, 3)};
    default: break;
  }
  throw std::invalid_argument("two-qubit projection kind must be 1..6");
}

std::array<Triplet, 2> projection_2q_stage_b(const TwoQubitProjection& p) {
  if (std::abs(p.sign_c) != 1 || std::abs(p.sign_d) != 1) throw std::invalid_argument("signs must be +1 or -1");
  const Pauli on3 = p.target() == 0 ? Pauli::X : Pauli::Z;
  const Pauli on4 = p.target() == 1 ? Pauli::X : Pauli::Z;
  return {projection_triplet({on3, p.sign_c}), projection_triplet({on4, p.sign_d})};
}

void append_projection_2q(Scheduler& s, const TwoQubitProjection& p, int q3, int q4) {
  const auto a = projection_2q_stage_a(p.kind);
  const auto b = projection_2q_stage_b(p);
  s.align({q3, q4});
  append_triplet(s, q3, a[0]);
  append_triplet(s, q4, a[1]);
  s.align({q3, q4});
  const int pair = std::min(s.device_qubit(q3), s.device_qubit(q4));
  const double seg = exchange_duration(s.config(), pair, kHalfPi);
  s.exchange(q3, q4, seg);
  s.refocus({q3, q4});
  s.exchange(q3, q4, seg);
  append_triplet(s, q3, b[0]);
  append_triplet(s, q4, b[1]);
  s.align({q3, q4});
}

}  // namespace spinsim

namespace spinsim {

Circuit projection_2q(const TwoQubitProjection& p, const DeviceConfig& config) {
  Scheduler s(config, {2, 3});
  append_projection_2q(s, p, 0, 1);
  return s.finish();
}

std::string ProjectionSetting::label() const {
  if (two_q) return axes[0].label() + "|" + two_q->label();
  return axes[0].label() + axes[1].label() + axes[2].label();
}

const std::vector<ProjectionSetting>& enumerate_settings() {
  static const std::vector<ProjectionSetting> settings = [] {
    std::vector<ProjectionSetting> out;
    out.reserve(360);
    for (const Axis& a2 : all_axes())
      for (const Axis& a3 : all_axes())
        for (const Axis& a4 : all_axes()) {
          ProjectionSetting s;
          s.id = static_cast<int>(out.size());
          s.axes = {a2, a3, a4};
          out.push_back(s);
        }
    for (const Axis& a2 : all_axes())
      for (int kind = 1; kind <= 6; ++kind)
        for (int sc : {+1, -1})
          for (int sd : {+1, -1}) {
            ProjectionSetting s;
            s.id = static_cast<int>(out.size());
            s.axes = {a2, Axis{}, Axis{}};
            s.two_q = TwoQubitProjection{kind, sc, sd};
            out.push_back(s);
          }
    return out;
  }();
  return settings;
}

StateTiming default_state_timing(const DeviceConfig& config) {
  const double quarter = kHalfPi;  // each segment accumulates a sqrt(CZ) phase
  return {0.0, exchange_duration(config, 1, quarter), exchange_duration(config, 2, quarter)};
}

namespace {

// Circuit qubits 0, 1, 2 are Q2, Q3, Q4.
constexpr int kQ2 = 0, kQ3 = 1, kQ4 = 2;

void build_state(Scheduler& s, StateKind kind, const StateTiming& timing) {
  if (kind == StateKind::Init3) return;
  if (timing.tau_s < 0 || timing.t_j2_s < 0 || timing.t_j3_s < 0) {
    throw std::invalid_argument("idle and exchange times must be non-negative");
  }
  const bool entangle = kind != StateKind::Plus3;
  const std::array<Triplet, 3> prep = entangle
                                          ? std::array<Triplet, 3>{quarter_turns(0, 1, 0), quarter_turns(0, 1, 2),
                                                                   quarter_turns(0, 1, 0)}
                                          : std::array<Triplet, 3>{quarter_turns(0, 1, 2), quarter_turns(0, 1, 2),
                                                                   quarter_turns(0, 1, 2)};

  // Right-align the preparations so that every qubit ends at the same instant.
  double t_prep = 0.0;
  for (int q = 0; q < 3; ++q) t_prep = std::max(t_prep, triplet_duration(s.config(), s.device_qubit(q)));
  for (int q = 0; q < 3; ++q) {
    s.wait_until(q, t_prep - triplet_duration(s.config(), s.device_qubit(q)));
    append_triplet(s, q, prep[static_cast<std::size_t>(q)]);
  }
  s.align_all();

  auto segment = [&](int qa, int qb, double t) {
    if (entangle) {
      s.exchange(qa, qb, t);
    } else {
      s.align({qa, qb});
      s.wait(qa, t);
      s.wait(qb, t);
    }
  };

  segment(kQ2, kQ3, timing.t_j2_s);
  segment(kQ3, kQ4, timing.t_j3_s);
  s.align_all();
  for (int q = 0; q < 3; ++q) s.wait(q, timing.tau_s);
  s.refocus({kQ2, kQ3, kQ4});
  for (int q = 0; q < 3; ++q) s.wait(q, timing.tau_s);
  segment(kQ3, kQ4, timing.t_j3_s);
  segment(kQ2, kQ3, timing.t_j2_s);
  s.align_all();

  if (kind == StateKind::Ghz3) {
    s.sqrt_x(kQ2);
    s.sqrt_x(kQ4);
    s.align_all();
  }
}

}  // namespace

Circuit build_state_circuit(StateKind kind, const DeviceConfig& config) {
  return build_state_circuit(kind, config, default_state_timing(config));
}

Circuit build_state_circuit(StateKind kind, const DeviceConfig& config, const StateTiming& timing) {
  Scheduler s(config, {1, 2, 3});
  build_state(s, kind, timing);
  Circuit c = s.finish();
  c.recipe = StateRecipe{kind, kind == StateKind::Init3 ? StateTiming{} : timing};
  return c;
}

Circuit modify_timing(const Circuit& c, double tau_s, double t_j2_s, double t_j3_s, const DeviceConfig& config) {
  if (!c.recipe) throw std::invalid_argument("circuit was not produced by build_state_circuit");
  if (tau_s < 0) throw std::invalid_argument("idle time must be non-negative");
  StateTiming t = c.recipe->timing;
  t.tau_s = tau_s;
  if (t_j2_s >= 0) t.t_j2_s = t_j2_s;
  if (t_j3_s >= 0) t.t_j3_s = t_j3_s;
  return build_state_circuit(c.recipe->kind, config, t);
}

Circuit measurement_circuit(StateKind kind, const StateTiming& timing, const ProjectionSetting& setting,
                            const DeviceConfig& config) {
  Scheduler s(config, {1, 2, 3});
  build_state(s, kind, timing);
  s.align_all();
  append_triplet(s, kQ2, projection_triplet(setting.axes[0]));
  if (setting.two_q) {
    append_projection_2q(s, *setting.two_q, kQ3, kQ4);
  } else {
    append_triplet(s, kQ3, projection_triplet(setting.axes[1]));
    append_triplet(s, kQ4, projection_triplet(setting.axes[2]));
  }
  s.align_all();
  s.measure(ParityPair::Q1Q2);
  s.measure(ParityPair::Q3Q4);
  Circuit c = s.finish();
  c.recipe = StateRecipe{kind, kind == StateKind::Init3 ? StateTiming{} : timing};
  return c;
}

std::vector<EchoReport> echo_symmetry_check(const Circuit& c) {
  const double end = c.end_time();
  std::vector<EchoReport> out;
  for (int q = 0; q < c.n_qubits; ++q) {
    EchoReport r;
    r.qubit = q;
    const TimedOp* pi = nullptr;
    for (const auto& op : c.ops) {
      if (op.kind != OpKind::PiX || op.targets.front() != q) continue;
      if (pi) throw std::invalid_argument("qubit " + std::to_string(q) + " has more than one refocusing pulse");
      pi = &op;
    }
    if (pi) {
      const double centre = pi->start_s + 0.5 * pi->duration_s;
      double last_rotation = 0.0;
      for (const auto& op : c.ops) {
        const bool rotation = op.kind == OpKind::SqrtX || op.kind == OpKind::VirtualZ;
        if (rotation && op.targets.front() == q && op.end_s() <= pi->start_s) {
          last_rotation = std::max(last_rotation, op.end_s());
        }
      }
      r.has_pi = true;
      r.before_s = centre - last_rotation;
      r.after_s = end - centre;
      r.imbalance_s = std::abs(r.after_s - r.before_s);
      r.balanced = r.imbalance_s < 1e-9;
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace spinsim
