#include "spinsim/device.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace spinsim {

std::string to_string(ReadoutMode mode) {
  return mode == ReadoutMode::Sequential ? "sequential" : "simultaneous";
}

ReadoutMode readout_mode_from_string(const std::string& s) {
  if (s == "sequential") return ReadoutMode::Sequential;
  if (s == "simultaneous") return ReadoutMode::Simultaneous;
  throw std::invalid_argument("unknown readout mode '" + s + "'");
}

DeviceConfig default_device_config() {
  DeviceConfig c;
  const double rabi[] = {183.2e3, 680.9e3, 442.5e3, 624.1e3};
  const double t2s[] = {3.1e-6, 6.2e-6, 4.8e-6, 5.5e-6};
  const double t2h[] = {64.0e-6, 87.2e-6, 76.3e-6, 79.4e-6};
  const double t2r[] = {13.6e-6, 29.2e-6, 45.9e-6, 32.4e-6};
  const double larmor[] = {11.445e9, 11.427e9, 11.407e9, 11.422e9};
  const double d_rabi[] = {0.8e3, 0.4e3, 0.2e3, 0.3e3};
  const double d_t2r[] = {1.8e-6, 1.0e-6, 2.0e-6, 1.9e-6};
  const double d_t2s[] = {0.2e-6, 0.5e-6, 0.2e-6, 0.3e-6};
  const double d_t2h[] = {10.4e-6, 3.4e-6, 2.9e-6, 3.4e-6};
  for (int q = 0; q < 4; ++q) {
    c.qubits[q] = {larmor[q], rabi[q], t2s[q], t2h[q], t2r[q], q != 0};
    c.uncertainties[q] = {d_rabi[q], d_t2r[q], d_t2s[q], d_t2h[q]};
  }

  // Slopes in decades per volt; a and c put J(0) at 300 Hz and the offsets give J near 250 kHz.
  const double decades[] = {24.3, 27.9, 15.6};
  const double offsets[] = {0.140, 0.122, 0.218};
  for (int p = 0; p < 3; ++p) c.pairs[p] = {100.0, decades[p] * std::log(10.0), 200.0, offsets[p]};

  c.readout_sequential.snr1 = 9.4;
  c.readout_sequential.snr2 = 6.2;
  c.readout_sequential.mode = ReadoutMode::Sequential;

  c.readout_simultaneous = c.readout_sequential;
  c.readout_simultaneous.snr1 = 8.2;
  c.readout_simultaneous.snr2 = 5.7;
  c.readout_simultaneous.mode = ReadoutMode::Simultaneous;
  c.readout_simultaneous.crosstalk12 = 0.05;
  c.readout_simultaneous.crosstalk21 = 0.05;
  c.readout_simultaneous.spin_error = 0.011;

  c.init.p_even12 = std::sqrt(0.613);
  c.init.p_even34 = std::sqrt(0.613);
  c.init.max_attempts = 1000;

  c.b_field_t = 0.41;
  c.charge_config = {3, 5, 5, 3};
  return c;
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("invalid device config: " + what);
}

void validate_readout(const ReadoutParams& r, const std::string& name) {
  require(r.snr1 > 0 && r.snr2 > 0, name + " snr must be positive");
  require(r.mu_blocked != r.mu_unblocked, name + " means must differ");
  const double lo = std::min(r.mu_blocked, r.mu_unblocked), hi = std::max(r.mu_blocked, r.mu_unblocked);
  require(r.threshold1 > lo && r.threshold1 < hi, name + " threshold1 outside the means");
  require(r.threshold2 > lo && r.threshold2 < hi, name + " threshold2 outside the means");
  require(r.t_reference_s >= 0 && r.t_read_s >= 0 && r.t_ramp_s >= 0, name + " durations must be non-negative");
  require(r.crosstalk12 >= 0 && r.crosstalk12 < 1 && r.crosstalk21 >= 0 && r.crosstalk21 < 1,
          name + " crosstalk must lie in [0, 1)");
  require(r.spin_error >= 0 && r.spin_error < 0.5, name + " spin_error must lie in [0, 0.5)");
}

}  // namespace

void validate(const DeviceConfig& c) {
  for (int q = 0; q < 4; ++q) {
    const auto& p = c.qubits[q];
    const std::string n = "qubit" + std::to_string(q + 1);
    require(p.larmor_hz > 0 && p.rabi_hz > 0 && p.t2_star_s > 0 && p.t2_hahn_s > 0 && p.t2_rabi_s > 0,
            n + " parameters must be positive");
    require(p.t2_hahn_s >= p.t2_star_s, n + " t2_hahn_s must be >= t2_star_s");
  }
  for (int k = 0; k < 3; ++k) {
    const auto& p = c.pairs[k];
    require(std::isfinite(p.a_hz) && std::isfinite(p.b_per_volt) && std::isfinite(p.c_hz) &&
                std::isfinite(p.operating_offset_v),
            "pair" + std::to_string(k + 1) + " parameters must be finite");
  }
  validate_readout(c.readout_sequential, "readout.sequential");
  validate_readout(c.readout_simultaneous, "readout.simultaneous");
  require(c.init.p_even12 > 0 && c.init.p_even12 <= 1 && c.init.p_even34 > 0 && c.init.p_even34 <= 1,
          "init probabilities must lie in (0, 1]");
  require(c.init.max_attempts >= 1, "init.max_attempts must be >= 1");
  require(c.timing.hold_s >= 0 && c.timing.adiabatic_ramp_s >= 0, "timing durations must be non-negative");
  require(c.timing.n_cells >= 1, "timing.n_cells must be >= 1");
  require(c.noise.hahn_exponent > 0, "noise.hahn_exponent must be positive");
}

double exchange_rate(const ExchangePairParams& pair, double dv) {
  return pair.a_hz * std::exp(pair.b_per_volt * dv) + pair.c_hz;
}

double operating_exchange_hz(const ExchangePairParams& pair) {
  return exchange_rate(pair, pair.operating_offset_v);
}

GateDurations gate_durations(const DeviceConfig& config, int qubit) {
  if (qubit < 0 || qubit >= 4) throw std::out_of_range("qubit index out of range");
  const double f = config.qubits[qubit].rabi_hz;
  if (!(f > 0)) throw std::invalid_argument("Rabi frequency must be positive");
  return {1.0 / (4.0 * f), 1.0 / (2.0 * f), 4e-9};
}

double exchange_duration(const DeviceConfig& config, int pair, double phase) {
  if (pair < 0 || pair >= 3) throw std::out_of_range("pair index out of range");
  const double j = operating_exchange_hz(config.pairs[pair]);
  if (!(j > 0) || !std::isfinite(j)) throw std::invalid_argument("exchange parameters missing or invalid");
  return phase / (2.0 * M_PI * j);
}

namespace {

// Binds every serializable field to a key so that reading and writing share one table.
struct Field {
  std::string key;
  std::function<std::string(const DeviceConfig&)> get;
  std::function<void(DeviceConfig&, const std::string&)> set;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& s) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': cannot parse '" + s + "' as a number");
  }
  if (used != s.size()) throw std::invalid_argument("config key '" + key + "': trailing characters in '" + s + "'");
  return v;
}

int parse_int(const std::string& key, const std::string& s) {
  const double v = parse_double(key, s);
  if (v != std::floor(v)) throw std::invalid_argument("config key '" + key + "': expected an integer");
  return static_cast<int>(v);
}

bool parse_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw std::invalid_argument("config key '" + key + "': expected true or false");
}

template <typename Proj>
Field dbl(std::string key, Proj proj) {
  return {key, [proj](const DeviceConfig& c) { return fmt(proj(const_cast<DeviceConfig&>(c))); },
          [proj, key](DeviceConfig& c, const std::string& s) { proj(c) = parse_double(key, s); }};
}

void add_readout_fields(std::vector<Field>& f, const std::string& prefix,
                        ReadoutParams DeviceConfig::*member) {
  auto r = [member](DeviceConfig& c) -> ReadoutParams& { return c.*member; };
  f.push_back(dbl(prefix + "snr1", [r](DeviceConfig& c) -> double& { return r(c).snr1; }));
  f.push_back(dbl(prefix + "snr2", [r](DeviceConfig& c) -> double& { return r(c).snr2; }));
  f.push_back(dbl(prefix + "mu_blocked", [r](DeviceConfig& c) -> double& { return r(c).mu_blocked; }));
  f.push_back(dbl(prefix + "mu_unblocked", [r](DeviceConfig& c) -> double& { return r(c).mu_unblocked; }));
  f.push_back(dbl(prefix + "threshold1", [r](DeviceConfig& c) -> double& { return r(c).threshold1; }));
  f.push_back(dbl(prefix + "threshold2", [r](DeviceConfig& c) -> double& { return r(c).threshold2; }));
  f.push_back(dbl(prefix + "t_reference_s", [r](DeviceConfig& c) -> double& { return r(c).t_reference_s; }));
  f.push_back(dbl(prefix + "t_read_s", [r](DeviceConfig& c) -> double& { return r(c).t_read_s; }));
  f.push_back(dbl(prefix + "t_ramp_s", [r](DeviceConfig& c) -> double& { return r(c).t_ramp_s; }));
  f.push_back(dbl(prefix + "crosstalk12", [r](DeviceConfig& c) -> double& { return r(c).crosstalk12; }));
  f.push_back(dbl(prefix + "crosstalk21", [r](DeviceConfig& c) -> double& { return r(c).crosstalk21; }));
  f.push_back(dbl(prefix + "spin_error", [r](DeviceConfig& c) -> double& { return r(c).spin_error; }));
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back({"device.b_field_t", [](const DeviceConfig& c) { return fmt(c.b_field_t); },
                 [](DeviceConfig& c, const std::string& s) { c.b_field_t = parse_double("device.b_field_t", s); }});
    f.push_back({"device.charge_config",
                 [](const DeviceConfig& c) {
                   return std::to_string(c.charge_config[0]) + "," + std::to_string(c.charge_config[1]) + "," +
                          std::to_string(c.charge_config[2]) + "," + std::to_string(c.charge_config[3]);
                 },
                 [](DeviceConfig& c, const std::string& s) {
                   std::stringstream ss(s);
                   std::string item;
                   int k = 0;
                   while (std::getline(ss, item, ',')) {
                     if (k >= 4) throw std::invalid_argument("device.charge_config: expected 4 integers");
                     c.charge_config[k++] = parse_int("device.charge_config", item);
                   }
                   if (k != 4) throw std::invalid_argument("device.charge_config: expected 4 integers");
                 }});
    for (int q = 0; q < 4; ++q) {
      const std::string p = "qubit" + std::to_string(q + 1) + ".";
      f.push_back(dbl(p + "larmor_hz", [q](DeviceConfig& c) -> double& { return c.qubits[q].larmor_hz; }));
      f.push_back(dbl(p + "rabi_hz", [q](DeviceConfig& c) -> double& { return c.qubits[q].rabi_hz; }));
      f.push_back(dbl(p + "t2_star_s", [q](DeviceConfig& c) -> double& { return c.qubits[q].t2_star_s; }));
      f.push_back(dbl(p + "t2_hahn_s", [q](DeviceConfig& c) -> double& { return c.qubits[q].t2_hahn_s; }));
      f.push_back(dbl(p + "t2_rabi_s", [q](DeviceConfig& c) -> double& { return c.qubits[q].t2_rabi_s; }));
      f.push_back({p + "drivable", [q](const DeviceConfig& c) { return std::string(c.qubits[q].drivable ? "true" : "false"); },
                   [q, p](DeviceConfig& c, const std::string& s) { c.qubits[q].drivable = parse_bool(p + "drivable", s); }});
      f.push_back(dbl(p + "sigma2.rabi_hz", [q](DeviceConfig& c) -> double& { return c.uncertainties[q].rabi_hz; }));
      f.push_back(dbl(p + "sigma2.t2_rabi_s", [q](DeviceConfig& c) -> double& { return c.uncertainties[q].t2_rabi_s; }));
      f.push_back(dbl(p + "sigma2.t2_star_s", [q](DeviceConfig& c) -> double& { return c.uncertainties[q].t2_star_s; }));
      f.push_back(dbl(p + "sigma2.t2_hahn_s", [q](DeviceConfig& c) -> double& { return c.uncertainties[q].t2_hahn_s; }));
    }
    for (int k = 0; k < 3; ++k) {
      const std::string p = "pair" + std::to_string(k + 1) + ".";
      f.push_back(dbl(p + "a_hz", [k](DeviceConfig& c) -> double& { return c.pairs[k].a_hz; }));
      f.push_back(dbl(p + "b_per_volt", [k](DeviceConfig& c) -> double& { return c.pairs[k].b_per_volt; }));
      f.push_back(dbl(p + "c_hz", [k](DeviceConfig& c) -> double& { return c.pairs[k].c_hz; }));
      f.push_back(dbl(p + "operating_offset_v", [k](DeviceConfig& c) -> double& { return c.pairs[k].operating_offset_v; }));
    }
    f.push_back({"readout.mode", [](const DeviceConfig& c) { return to_string(c.mode); },
                 [](DeviceConfig& c, const std::string& s) { c.mode = readout_mode_from_string(s); }});
    add_readout_fields(f, "readout.sequential.", &DeviceConfig::readout_sequential);
    add_readout_fields(f, "readout.simultaneous.", &DeviceConfig::readout_simultaneous);
    f.push_back(dbl("init.p_even12", [](DeviceConfig& c) -> double& { return c.init.p_even12; }));
    f.push_back(dbl("init.p_even34", [](DeviceConfig& c) -> double& { return c.init.p_even34; }));
    f.push_back({"init.max_attempts", [](const DeviceConfig& c) { return std::to_string(c.init.max_attempts); },
                 [](DeviceConfig& c, const std::string& s) { c.init.max_attempts = parse_int("init.max_attempts", s); }});
    f.push_back(dbl("timing.hold_s", [](DeviceConfig& c) -> double& { return c.timing.hold_s; }));
    f.push_back(dbl("timing.adiabatic_ramp_s", [](DeviceConfig& c) -> double& { return c.timing.adiabatic_ramp_s; }));
    f.push_back({"timing.n_cells", [](const DeviceConfig& c) { return std::to_string(c.timing.n_cells); },
                 [](DeviceConfig& c, const std::string& s) { c.timing.n_cells = parse_int("timing.n_cells", s); }});
    f.push_back(dbl("noise.hahn_exponent", [](DeviceConfig& c) -> double& { return c.noise.hahn_exponent; }));
    return f;
  }();
  return table;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string serialize_config(const DeviceConfig& config) {
  std::string out = "# spinsim device configuration\n";
  for (const auto& f : fields()) out += f.key + " = " + f.get(config) + "\n";
  return out;
}

DeviceConfig parse_config(const std::string& text, const DeviceConfig& defaults) {
  std::map<std::string, const Field*> index;
  for (const auto& f : fields()) index[f.key] = &f;

  DeviceConfig c = defaults;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = index.find(key);
    if (it == index.end()) throw std::invalid_argument("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    it->second->set(c, value);
  }
  validate(c);
  return c;
}

DeviceConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace spinsim
