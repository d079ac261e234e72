#include "spinsim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "spinsim/fitting.hpp"
#include "spinsim/parallel.hpp"

namespace spinsim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Row/column updates on a dense density matrix, qubit 0 most significant.
class Register {
 public:
  Register(CMatrix& rho, int n) : rho_(rho), n_(n), dim_(static_cast<int>(rho.rows())) {}

  int mask(int q) const { return 1 << (n_ - 1 - q); }

  void apply_1q(int q, const Eigen::Matrix2cd& u) {
    const int m = mask(q);
    for (int c = 0; c < dim_; ++c) {
      for (int r = 0; r < dim_; ++r) {
        if (r & m) continue;
        const Complex a = rho_(r, c), b = rho_(r | m, c);
        rho_(r, c) = u(0, 0) * a + u(0, 1) * b;
        rho_(r | m, c) = u(1, 0) * a + u(1, 1) * b;
      }
    }
    const Eigen::Matrix2cd ud = u.adjoint();
    for (int r = 0; r < dim_; ++r) {
      for (int c = 0; c < dim_; ++c) {
        if (c & m) continue;
        const Complex a = rho_(r, c), b = rho_(r, c | m);
        rho_(r, c) = a * ud(0, 0) + b * ud(1, 0);
        rho_(r, c | m) = a * ud(0, 1) + b * ud(1, 1);
      }
    }
  }

  // Z-phase exp(-i phi) on |1> of qubit q and damping of its coherences by `factor`.
  void phase_damp(int q, double phi, double factor) {
    const int m = mask(q);
    const Complex rot = std::polar(factor, -phi);
    const Complex rot_c = std::conj(rot);
    for (int c = 0; c < dim_; ++c) {
      for (int r = 0; r < dim_; ++r) {
        const bool br = r & m, bc = c & m;
        if (br == bc) continue;
        rho_(r, c) *= br ? rot : rot_c;
      }
    }
  }

  void controlled_phase(int qa, int qb, double phi) {
    const int m = mask(qa) | mask(qb);
    const Complex e = std::polar(1.0, phi);
    for (int c = 0; c < dim_; ++c) {
      for (int r = 0; r < dim_; ++r) {
        const bool sr = (r & m) == m, sc = (c & m) == m;
        if (sr == sc) continue;
        rho_(r, c) *= sr ? e : std::conj(e);
      }
    }
  }

  // rho -> (1+g)/2 rho + (1-g)/2 X rho X on qubit q: damps Y and Z, keeps X.
  void x_dephase(int q, double g) {
    const int m = mask(q);
    const double keep = 0.5 * (1.0 + g), flip = 0.5 * (1.0 - g);
    CMatrix out(dim_, dim_);
    for (int r = 0; r < dim_; ++r)
      for (int c = 0; c < dim_; ++c) out(r, c) = keep * rho_(r, c) + flip * rho_(r ^ m, c ^ m);
    rho_ = std::move(out);
  }

 private:
  CMatrix& rho_;
  int n_;
  int dim_;
};

Eigen::Matrix2cd rx(double theta) {
  Eigen::Matrix2cd u;
  const double c = std::cos(theta / 2), s = std::sin(theta / 2);
  u << c, Complex(0, -s), Complex(0, -s), c;
  return u;
}

Eigen::Matrix2cd vz(double phi) {
  Eigen::Matrix2cd u;
  u << 1.0, 0.0, 0.0, std::polar(1.0, phi);
  return u;
}

}  // namespace

double detuning_sigma_hz(const DeviceConfig& config, int device_qubit) {
  return std::sqrt(2.0) / config.qubits.at(static_cast<std::size_t>(device_qubit)).t2_star_s / kTwoPi;
}

NoiseRealization draw_noise(const DeviceConfig& config, Rng& rng) {
  NoiseRealization r;
  for (int q = 0; q < 4; ++q) r.detuning_hz[q] = rng.normal(0.0, detuning_sigma_hz(config, q));
  return r;
}

NoiseRealization draw_noise(const DeviceConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  NoiseRealization r = draw_noise(config, rng);
  r.id = seed;
  return r;
}

void evolve_inplace(const Circuit& c, const NoiseRealization& r, const DeviceConfig& config, CMatrix& rho,
                    bool fast_dephasing) {
  const int n = c.n_qubits;
  if (rho.rows() != (1 << n) || rho.cols() != (1 << n)) {
    throw std::invalid_argument("circuit qubit count does not match the state");
  }
  Register reg(rho, n);
  std::vector<double> clock(static_cast<std::size_t>(n), 0.0);
  const double p = config.noise.hahn_exponent;

  auto accrue = [&](int q, double t) {
    double& t0 = clock[static_cast<std::size_t>(q)];
    const double dt = t - t0;
    if (dt <= 0) return;
    const int dq = c.device_qubits[static_cast<std::size_t>(q)];
    const double phi = kTwoPi * r.detuning_hz[static_cast<std::size_t>(dq)] * dt;
    double factor = 1.0;
    if (fast_dephasing) {
      const double t2 = config.qubits[static_cast<std::size_t>(dq)].t2_hahn_s;
      factor = std::exp(-(std::pow(t / t2, p) - std::pow(t0 / t2, p)));
    }
    reg.phase_damp(q, phi, factor);
    t0 = t;
  };

  static const Eigen::Matrix2cd kSqrtX = rx(std::numbers::pi / 2);
  static const Eigen::Matrix2cd kPiX = rx(std::numbers::pi);

  for (const auto& op : c.ops) {
    if (op.duration_s < 0) throw std::invalid_argument("negative op duration");
    for (int q : op.targets) {
      if (q < 0 || q >= n) throw std::out_of_range("op targets a qubit outside the circuit");
    }
    const double mid = op.start_s + 0.5 * op.duration_s;
    switch (op.kind) {
      case OpKind::Wait:
      case OpKind::MeasureParity:
        break;
      case OpKind::SqrtX:
        accrue(op.targets[0], mid);
        reg.apply_1q(op.targets[0], kSqrtX);
        break;
      case OpKind::PiX:
        accrue(op.targets[0], mid);
        reg.apply_1q(op.targets[0], kPiX);
        break;
      case OpKind::VirtualZ:
        accrue(op.targets[0], mid);
        reg.apply_1q(op.targets[0], vz(op.phase));
        break;
      case OpKind::Exchange:
        accrue(op.targets[0], mid);
        accrue(op.targets[1], mid);
        reg.controlled_phase(op.targets[0], op.targets[1], op.phase);
        break;
      case OpKind::Drive: {
        const int q = op.targets[0];
        accrue(q, op.start_s);
        const auto& qp = config.qubits[static_cast<std::size_t>(c.device_qubits[static_cast<std::size_t>(q)])];
        reg.apply_1q(q, rx(kTwoPi * qp.rabi_hz * op.duration_s));
        reg.x_dephase(q, std::exp(-op.duration_s / qp.t2_rabi_s));
        clock[static_cast<std::size_t>(q)] = op.end_s();
        break;
      }
    }
  }
  const double end = c.end_time();
  for (int q = 0; q < n; ++q) accrue(q, end);
}

DensityMatrix evolve(const Circuit& c, const NoiseRealization& r, const DeviceConfig& config,
                     const DensityMatrix& initial, bool fast_dephasing) {
  if (initial.n_qubits() != c.n_qubits) throw std::invalid_argument("circuit qubit count does not match the state");
  CMatrix rho = initial.matrix();
  evolve_inplace(c, r, config, rho, fast_dephasing);
  return DensityMatrix::unchecked(std::move(rho));
}

int worker_count() {
  if (const char* env = std::getenv("SPINSIM_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

std::uint32_t circuit_initial_index(const Circuit& c, const std::array<int, 4>& bits) {
  std::uint32_t idx = 0;
  for (int d : c.device_qubits) idx = (idx << 1) | static_cast<std::uint32_t>(bits[static_cast<std::size_t>(d)]);
  return idx;
}

// Computational bits of all four device qubits after a measurement outcome on the circuit register.
std::array<int, 4> device_bits(const Circuit& c, std::uint32_t outcome, std::array<int, 4> bits) {
  const int n = c.n_qubits;
  for (int q = 0; q < n; ++q) {
    bits[static_cast<std::size_t>(c.device_qubits[static_cast<std::size_t>(q)])] =
        static_cast<int>((outcome >> (n - 1 - q)) & 1u);
  }
  return bits;
}

void require_measurements(const Circuit& c) {
  int count = 0;
  for (const auto& op : c.ops) count += op.kind == OpKind::MeasureParity;
  if (count == 0) throw std::invalid_argument("circuit has no parity measurement");
}

}  // namespace

std::vector<ShotRecord> run_shots(const Circuit& c, const RunSpec& spec, const DeviceConfig& config, int setting_id) {
  if (spec.shots < 1) throw std::invalid_argument("shots must be >= 1");
  require_measurements(c);
  const ReadoutParams& params = config.readout();
  std::vector<ShotRecord> out(static_cast<std::size_t>(spec.shots));
  const int dim = 1 << c.n_qubits;

  parallel_for(spec.shots, [&](int i) {
    const std::uint64_t shot_seed =
        derive_seed(spec.seed, static_cast<std::uint64_t>(setting_id), static_cast<std::uint64_t>(i));
    Rng rng(shot_seed);
    const InitResult init = heralded_init(config.init, params, rng);
    NoiseRealization noise;
    if (spec.noise_enabled) noise = draw_noise(config, rng);
    noise.id = shot_seed;

    CMatrix rho = CMatrix::Zero(dim, dim);
    const std::uint32_t start = circuit_initial_index(c, init.bits);
    rho(start, start) = 1.0;
    evolve_inplace(c, noise, config, rho, spec.noise_enabled && spec.fast_dephasing_enabled);

    // Sample a computational outcome from the diagonal.
    double u = rng.uniform(), acc = 0.0;
    std::uint32_t outcome = static_cast<std::uint32_t>(dim - 1);
    for (int k = 0; k < dim; ++k) {
      acc += std::max(0.0, rho(k, k).real());
      if (u < acc) {
        outcome = static_cast<std::uint32_t>(k);
        break;
      }
    }
    const auto bits = device_bits(c, outcome, init.bits);
    const Parity t12 = bits[0] == bits[1] ? Parity::Even : Parity::Odd;
    const Parity t34 = bits[2] == bits[3] ? Parity::Even : Parity::Odd;
    const ReadoutShot read = read_parities(t12, t34, params, rng);

    ShotRecord& rec = out[static_cast<std::size_t>(i)];
    rec.setting_id = setting_id;
    rec.parity12 = static_cast<int>(read.read12);
    rec.parity34 = static_cast<int>(read.read34);
    rec.signal1 = read.signals[0];
    rec.signal2 = read.signals[1];
    rec.attempts = init.attempts;
    rec.shot_seed = shot_seed;
  });
  return out;
}

std::array<double, 4> exact_parity_distribution(const Circuit& c, const RunSpec& spec, const DeviceConfig& config,
                                                int setting_id) {
  const int dim = 1 << c.n_qubits;
  const int realizations = spec.noise_enabled ? spec.shots : 1;
  if (realizations < 1) throw std::invalid_argument("realizations must be >= 1");
  std::vector<std::array<double, 4>> partial(static_cast<std::size_t>(realizations));
  const std::array<int, 4> ones = {1, 1, 1, 1};

  parallel_for(realizations, [&](int i) {
    NoiseRealization noise;
    if (spec.noise_enabled) {
      noise = draw_noise(config, derive_seed(spec.seed, static_cast<std::uint64_t>(setting_id),
                                             static_cast<std::uint64_t>(i)));
    }
    CMatrix rho = CMatrix::Zero(dim, dim);
    const std::uint32_t start = circuit_initial_index(c, ones);
    rho(start, start) = 1.0;
    evolve_inplace(c, noise, config, rho, spec.noise_enabled && spec.fast_dephasing_enabled);
    std::array<double, 4> p{};
    for (int k = 0; k < dim; ++k) {
      const auto bits = device_bits(c, static_cast<std::uint32_t>(k), ones);
      const int p12 = bits[0] == bits[1] ? 0 : 1;
      const int p34 = bits[2] == bits[3] ? 0 : 1;
      p[static_cast<std::size_t>(2 * p12 + p34)] += rho(k, k).real();
    }
    partial[static_cast<std::size_t>(i)] = p;
  });

  std::array<double, 4> total{};
  for (const auto& p : partial)
    for (int k = 0; k < 4; ++k) total[k] += p[k] / realizations;
  return total;
}

std::string to_string(SweepKind kind) {
  switch (kind) {
    case SweepKind::Rabi: return "rabi";
    case SweepKind::Ramsey: return "ramsey";
    case SweepKind::Hahn: return "hahn";
    case SweepKind::Lifetime: return "lifetime";
    case SweepKind::ExchangeSweep: return "exchange_sweep";
  }
  return "unknown";
}

SweepKind sweep_kind_from_string(const std::string& s) {
  for (SweepKind k : {SweepKind::Rabi, SweepKind::Ramsey, SweepKind::Hahn, SweepKind::Lifetime,
                      SweepKind::ExchangeSweep}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown sweep kind '" + s + "'");
}

std::vector<double> SweepTable::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw std::invalid_argument("no column '" + name + "'");
  const auto k = static_cast<std::size_t>(it - columns.begin());
  std::vector<double> out;
  out.reserve(values.size());
  for (const auto& row : values) out.push_back(row[k]);
  return out;
}

const std::array<ProjectionSetting, 4>& mermin_settings() {
  static const std::array<ProjectionSetting, 4> settings = [] {
    const char* labels[4][3] = {{"+X", "+X", "+X"}, {"+X", "+Y", "+Z"}, {"+Z", "+X", "+Z"}, {"+Z", "+Y", "+X"}};
    std::array<ProjectionSetting, 4> out;
    for (int k = 0; k < 4; ++k) {
      const std::array<Axis, 3> axes = {Axis::parse(labels[k][0]), Axis::parse(labels[k][1]),
                                        Axis::parse(labels[k][2])};
      for (const auto& s : enumerate_settings()) {
        if (!s.is_two_qubit() && s.axes == axes) out[static_cast<std::size_t>(k)] = s;
      }
    }
    return out;
  }();
  return settings;
}

namespace {

// <a2 a3 a4> from a single-qubit setting: Q2's Z is -1 when pair Q1Q2 reads even (Q1 held in |1>).
double three_body_expectation(const std::vector<ShotRecord>& shots, const ProjectionSetting& s) {
  double sum = 0.0;
  for (const auto& r : shots) {
    const double z2 = r.parity12 == 0 ? -1.0 : 1.0;
    const double z34 = r.parity34 == 0 ? 1.0 : -1.0;
    sum += z2 * z34;
  }
  return s.axes[0].sign * s.axes[1].sign * s.axes[2].sign * sum / static_cast<double>(shots.size());
}

std::vector<double> mermin_row(StateKind state, const StateTiming& timing, const RunSpec& spec,
                               const DeviceConfig& config, std::size_t grid_index, bool exact) {
  std::vector<double> row;
  for (const auto& s : mermin_settings()) {
    const Circuit c = measurement_circuit(state, timing, s, config);
    RunSpec point = spec;
    point.seed = derive_seed(spec.seed, 0x6c69666574696d65ULL, grid_index);
    if (exact) {
      const auto p = exact_parity_distribution(c, point, config, s.id);
      const double e = -p[0] + p[1] + p[2] - p[3];
      row.push_back(s.axes[0].sign * s.axes[1].sign * s.axes[2].sign * e);
    } else {
      row.push_back(three_body_expectation(run_shots(c, point, config, s.id), s));
    }
  }
  const double m = row[0] + row[1] - row[2] + row[3];
  const double mp = row[0] - row[1] - row[2] - row[3];
  row.push_back(m);
  row.push_back(mp);
  return row;
}

Circuit single_qubit_circuit(SweepKind kind, double x, const Axis& axis, const DeviceConfig& config,
                             const SweepOptions& o) {
  Scheduler s(config, {o.qubit}, o.allow_undrivable);
  if (kind == SweepKind::Rabi) {
    s.drive(0, x);
    return s.finish();
  }
  s.sqrt_x(0);
  s.wait(0, x);
  if (kind == SweepKind::Hahn) {
    s.pi_x(0);
    s.wait(0, x);
  }
  // Readout with one pulse: Rz(phi) then sqrt(X) turns <Y cos phi + X sin phi> into <Z>, and a pi
  // pulse gives -<Z>. A triplet would let the qubit precess between its two sqrt(X) pulses.
  switch (axis.pauli) {
    case Pauli::X:
      s.virtual_z(0, axis.sign * std::numbers::pi / 2);
      s.sqrt_x(0);
      break;
    case Pauli::Y:
      s.virtual_z(0, axis.sign > 0 ? 0.0 : std::numbers::pi);
      s.sqrt_x(0);
      break;
    case Pauli::Z:
      if (axis.sign < 0) s.pi_x(0);
      break;
    case Pauli::I: throw std::invalid_argument("projection axis must be X, Y or Z");
  }
  return s.finish();
}

// <Z> after the circuit from |1>, averaged over quasi-static realizations.
double mean_z(const Circuit& c, const RunSpec& spec, const DeviceConfig& config, std::uint64_t stream) {
  const int realizations = spec.noise_enabled ? spec.shots : 1;
  std::vector<double> z(static_cast<std::size_t>(realizations));
  parallel_for(realizations, [&](int i) {
    NoiseRealization noise;
    if (spec.noise_enabled) noise = draw_noise(config, derive_seed(spec.seed, stream, static_cast<std::uint64_t>(i)));
    CMatrix rho = CMatrix::Zero(2, 2);
    rho(1, 1) = 1.0;
    evolve_inplace(c, noise, config, rho, spec.noise_enabled && spec.fast_dephasing_enabled);
    z[static_cast<std::size_t>(i)] = (rho(0, 0) - rho(1, 1)).real();
  });
  double sum = 0.0;
  for (double v : z) sum += v;
  return sum / realizations;
}

}  // namespace

SweepTable run_sweep(SweepKind kind, const std::vector<double>& grid, const RunSpec& spec,
                     const DeviceConfig& config, const SweepOptions& options) {
  if (grid.empty()) throw std::invalid_argument("sweep grid is empty");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw std::invalid_argument("sweep grid must be strictly increasing");
  }
  if (spec.shots < 1) throw std::invalid_argument("shots must be >= 1");
  SweepTable t{kind, "", {}, grid, {}};

  switch (kind) {
    case SweepKind::Rabi: {
      t.parameter_name = "duration_s";
      t.columns = {"p_down"};
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const Circuit c = single_qubit_circuit(kind, grid[i], Axis{}, config, options);
        const double z = mean_z(c, spec, config, i);
        t.values.push_back({0.5 * (1.0 - z)});
      }
      break;
    }
    case SweepKind::Ramsey:
    case SweepKind::Hahn: {
      t.parameter_name = "tau_s";
      for (const Axis& a : all_axes()) t.columns.push_back(a.label());
      t.columns.push_back("bloch_length");
      for (std::size_t i = 0; i < grid.size(); ++i) {
        std::vector<double> row;
        std::array<double, 6> six{};
        for (std::size_t k = 0; k < 6; ++k) {
          const Circuit c = single_qubit_circuit(kind, grid[i], all_axes()[k], config, options);
          // Same realizations for every axis so the six projections see one ensemble.
          six[k] = mean_z(c, spec, config, i);
          row.push_back(six[k]);
        }
        row.push_back(bloch_length(six));
        t.values.push_back(row);
      }
      break;
    }
    case SweepKind::Lifetime:
    case SweepKind::ExchangeSweep: {
      t.parameter_name = kind == SweepKind::Lifetime ? "tau_s" : "exchange_periods";
      t.columns = {"XXX", "XYZ", "ZXZ", "ZYX", "M", "M_prime"};
      const StateTiming base = default_state_timing(config);
      for (std::size_t i = 0; i < grid.size(); ++i) {
        StateTiming timing = base;
        StateKind state = options.state;
        if (kind == SweepKind::Lifetime) {
          if (grid[i] < 0) throw std::invalid_argument("idle time must be non-negative");
          timing.tau_s = grid[i];
        } else {
          if (grid[i] < 0) throw std::invalid_argument("exchange time must be non-negative");
          state = StateKind::Cluster3;
          timing.t_j2_s = grid[i] / operating_exchange_hz(config.pairs[1]);
          timing.t_j3_s = grid[i] / operating_exchange_hz(config.pairs[2]);
        }
        t.values.push_back(mermin_row(state, timing, spec, config, i, options.exact));
      }
      break;
    }
  }
  return t;
}

}  // namespace spinsim
