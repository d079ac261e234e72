#include "spinsim/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

#include "spinsim/circuits.hpp"
#include "spinsim/csv.hpp"
#include "spinsim/fitting.hpp"
#include "spinsim/parallel.hpp"
#include "spinsim/reference_states.hpp"
#include "spinsim/rng.hpp"
#include "spinsim/simulator.hpp"
#include "spinsim/tomography.hpp"

namespace spinsim {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Stream tags for derive_seed.
constexpr std::uint64_t kBootstrapStream = 0x626f6f74ULL;
constexpr std::uint64_t kHistogramStream = 0x68697374ULL;
constexpr std::uint64_t kInitStream = 0x696e6974ULL;
constexpr std::uint64_t kPlusStream = 0x706c7573ULL;

std::string fmt(double v) { return format_double(v); }

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = n == 1 ? a : a + (b - a) * i / (n - 1);
  return out;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

StateKind tomo_state(const std::string& experiment) {
  if (experiment == "tomo-cluster") return StateKind::Cluster3;
  if (experiment == "tomo-ghz") return StateKind::Ghz3;
  if (experiment == "tomo-init") return StateKind::Init3;
  throw std::invalid_argument("'" + experiment + "' is not a tomography experiment");
}

CVector tomo_target(StateKind k) {
  switch (k) {
    case StateKind::Cluster3: return cluster_ket();
    case StateKind::Ghz3: return ghz_ket();
    case StateKind::Init3: return init_ket();
    case StateKind::Plus3: return plus_ket();
  }
  throw std::invalid_argument("bad state kind");
}

MerminVariant tomo_variant(StateKind k) { return k == StateKind::Ghz3 ? MerminVariant::Ghz : MerminVariant::Cluster; }

// ---------------------------------------------------------------------------------------------
// Tomography

std::vector<SettingCounts> counts_from_table(const CsvTable& t) {
  const auto& settings = enumerate_settings();
  if (t.has_column("n_ee")) {
    const auto id = t.numeric_column("setting_id");
    const std::array<std::vector<double>, 4> n = {t.numeric_column("n_ee"), t.numeric_column("n_eo"),
                                                 t.numeric_column("n_oe"), t.numeric_column("n_oo")};
    std::vector<SettingCounts> counts(settings.size(), SettingCounts{0, 0, 0, 0});
    for (std::size_t r = 0; r < id.size(); ++r) {
      const auto k = static_cast<std::size_t>(id[r]);
      if (k >= counts.size()) throw std::runtime_error("setting id out of range");
      for (std::size_t o = 0; o < 4; ++o) counts[k][o] += n[o][r];
    }
    return counts;
  }
  if (t.has_column("parity12")) {
    const auto id = t.numeric_column("setting_id");
    const auto p12 = t.numeric_column("parity12");
    const auto p34 = t.numeric_column("parity34");
    std::vector<ShotRecord> records(id.size());
    for (std::size_t r = 0; r < id.size(); ++r) {
      records[r].setting_id = static_cast<int>(id[r]);
      records[r].parity12 = static_cast<int>(p12[r]);
      records[r].parity34 = static_cast<int>(p34[r]);
    }
    return count_records(records, settings.size());
  }
  throw std::runtime_error("table holds neither shots nor setting counts");
}

fs::path tomo_table(const fs::path& input) {
  if (fs::is_directory(input)) {
    if (fs::exists(input / "counts.csv")) return input / "counts.csv";
    if (fs::exists(input / "shots.csv")) return input / "shots.csv";
    throw std::runtime_error(input.string() + " holds no tomography table");
  }
  return input;
}

double reference_lambda(const fs::path& dir) {
  const CsvTable t = read_csv(tomo_table(dir));
  const ExpectationSet e = estimate_expectations(counts_from_table(t), enumerate_settings());
  return spam_lambda(linear_inversion(e));
}

json tomography_section(const std::vector<SettingCounts>& counts, StateKind kind, int bootstrap,
                        std::uint64_t seed, std::optional<double> lambda) {
  const auto& settings = enumerate_settings();
  const CVector target = tomo_target(kind);
  const MerminVariant variant = tomo_variant(kind);
  TomographyOptions opt;
  opt.bootstrap_resamples = bootstrap;
  opt.bootstrap_seed = derive_seed(seed, kBootstrapStream, 0);
  const TomographyResult raw = analyze_tomography(counts, settings, target, variant, opt);

  json metrics = {{"fidelity", raw.fidelity},
                  {"fidelity_sigma", raw.fidelity_sigma},
                  {"mermin", raw.mermin},
                  {"mermin_sigma", raw.mermin_sigma},
                  {"lhv_bound", lhv_bound(variant)},
                  {"min_eigenvalue", raw.min_eigenvalue}};
  json out = {{"raw", to_json(raw)}};
  if (kind == StateKind::Cluster3) {
    metrics["ghz_frame_fidelity"] = fidelity_pure(ghz_frame(raw.raw_rho), ghz_ket());
    metrics["ghz_frame_mermin"] = mermin(ghz_frame(raw.expectations), MerminVariant::Ghz);
  }
  if (kind == StateKind::Init3) {
    try {
      metrics["lambda"] = spam_lambda(raw.raw_rho);
    } catch (const std::invalid_argument&) {
      metrics["lambda"] = nullptr;
    }
  }
  if (lambda) {
    opt.spam_lambda = lambda;
    const TomographyResult cor = analyze_tomography(counts, settings, target, variant, opt);
    out["corrected"] = to_json(cor);
    metrics["lambda"] = *lambda;
    metrics["fidelity_corrected"] = cor.fidelity;
    metrics["fidelity_corrected_sigma"] = cor.fidelity_sigma;
    metrics["mermin_corrected"] = cor.mermin;
    metrics["mermin_corrected_sigma"] = cor.mermin_sigma;
    metrics["exceeds_unit"] = cor.exceeds_unit;
  }
  out["metrics"] = metrics;
  return out;
}

json run_tomography(const ExperimentSpec& s, const DeviceConfig& cfg, const fs::path& dir,
                    std::vector<fs::path>& files) {
  const StateKind kind = tomo_state(s.experiment);
  const auto& settings = enumerate_settings();
  const StateTiming timing = default_state_timing(cfg);
  const RunSpec rs{s.shots, s.seed, !s.noiseless, true};
  const std::string comment = spec_comment(s);

  std::vector<SettingCounts> counts(settings.size(), SettingCounts{0, 0, 0, 0});
  CsvTable shots{comment, {"setting_id", "parity12", "parity34", "signal1", "signal2", "attempts", "shot_seed"}, {}};
  double attempts_sum = 0.0, shot_total = 0.0;
  for (const auto& setting : settings) {
    const Circuit c = measurement_circuit(kind, timing, setting, cfg);
    auto& n = counts[static_cast<std::size_t>(setting.id)];
    if (s.noiseless) {
      const auto p = exact_parity_distribution(c, rs, cfg, setting.id);
      for (std::size_t o = 0; o < 4; ++o) n[o] = p[o] * s.shots;
      attempts_sum += s.shots;
      shot_total += s.shots;
      continue;
    }
    for (const ShotRecord& r : run_shots(c, rs, cfg, setting.id)) {
      n[static_cast<std::size_t>(2 * r.parity12 + r.parity34)] += 1.0;
      attempts_sum += r.attempts;
      shot_total += 1.0;
      shots.rows.push_back({std::to_string(r.setting_id), std::to_string(r.parity12), std::to_string(r.parity34),
                            fmt(r.signal1), fmt(r.signal2), std::to_string(r.attempts), std::to_string(r.shot_seed)});
    }
  }
  if (!s.noiseless) {
    write_csv(dir / "shots.csv", shots);
    files.push_back(dir / "shots.csv");
  }
  CsvTable ct{comment, {"setting_id", "label", "n_ee", "n_eo", "n_oe", "n_oo"}, {}};
  for (const auto& setting : settings) {
    const auto& n = counts[static_cast<std::size_t>(setting.id)];
    ct.rows.push_back({std::to_string(setting.id), setting.label(), fmt(n[0]), fmt(n[1]), fmt(n[2]), fmt(n[3])});
  }
  write_csv(dir / "counts.csv", ct);
  files.push_back(dir / "counts.csv");

  std::optional<double> lambda;
  if (!s.spam_reference.empty()) lambda = reference_lambda(s.spam_reference);
  json summary = tomography_section(counts, kind, s.noiseless ? 0 : s.bootstrap, s.seed, lambda);

  const double mean_attempts = attempts_sum / shot_total;
  const double u_c = measurement_circuit(kind, timing, settings.front(), cfg).end_time();
  const double d1 = sequence_duration(cfg, cfg.mode, u_c, 1);
  const double d2 = sequence_duration(cfg, cfg.mode, u_c, 2);
  summary["metrics"]["mean_attempts"] = mean_attempts;
  summary["metrics"]["control_block_s"] = u_c;
  summary["metrics"]["sequence_duration_s"] = d1 + (mean_attempts - 1.0) * (d2 - d1);
  summary["settings"] = settings.size();
  return summary;
}

// ---------------------------------------------------------------------------------------------
// Sweeps

CsvTable sweep_csv(const std::string& comment, const SweepTable& t) {
  CsvTable out{comment, {t.parameter_name}, {}};
  for (const auto& c : t.columns) out.columns.push_back(c);
  for (std::size_t i = 0; i < t.parameter.size(); ++i) {
    std::vector<std::string> row = {fmt(t.parameter[i])};
    for (double v : t.values[i]) row.push_back(fmt(v));
    out.rows.push_back(std::move(row));
  }
  return out;
}

std::vector<std::vector<double>> columns_of(const CsvTable& t, const std::vector<std::string>& names) {
  std::vector<std::vector<double>> out;
  for (const auto& n : names) out.push_back(t.numeric_column(n));
  return out;
}

const std::vector<std::string> kLifetimeTerms = {"XXX", "XYZ", "ZXZ", "ZYX", "M", "XXX_plus3"};

json lifetime_summary(const CsvTable& t, double exponent) {
  const auto idle = t.numeric_column("idle_s");
  std::vector<std::string> names;
  for (const auto& n : kLifetimeTerms) {
    if (t.has_column(n)) names.push_back(n);
  }
  return lifetime_fits(idle, columns_of(t, names), names, exponent);
}

json run_lifetime(const ExperimentSpec& s, const DeviceConfig& cfg, const fs::path& dir,
                  std::vector<fs::path>& files) {
  const std::vector<double> grid = s.grid.empty() ? linspace(0.0, 60e-6, 16) : s.grid;
  const RunSpec rs{s.shots, s.seed, !s.noiseless, true};
  SweepOptions opt;
  opt.exact = s.noiseless;
  opt.state = StateKind::Cluster3;
  const SweepTable cluster = run_sweep(SweepKind::Lifetime, grid, rs, cfg, opt);
  opt.state = StateKind::Plus3;
  RunSpec rs_plus = rs;
  rs_plus.seed = derive_seed(s.seed, kPlusStream, 0);
  const SweepTable plus = run_sweep(SweepKind::Lifetime, grid, rs_plus, cfg, opt);
  const auto xxx_plus = plus.column("XXX");

  CsvTable t{spec_comment(s), {"tau_s", "idle_s"}, {}};
  for (const auto& c : cluster.columns) t.columns.push_back(c);
  t.columns.push_back("XXX_plus3");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::vector<std::string> row = {fmt(grid[i]), fmt(2.0 * grid[i])};
    for (double v : cluster.values[i]) row.push_back(fmt(v));
    row.push_back(fmt(xxx_plus[i]));
    t.rows.push_back(std::move(row));
  }
  write_csv(dir / "sweep.csv", t);
  files.push_back(dir / "sweep.csv");
  return lifetime_summary(t, cfg.noise.hahn_exponent);
}

json run_exchange_sweep(const ExperimentSpec& s, const DeviceConfig& cfg, const fs::path& dir,
                        std::vector<fs::path>& files) {
  if (!(s.periods > 0)) throw std::invalid_argument("periods must be positive");
  const int n = static_cast<int>(std::llround(s.periods * 40.0)) + 1;
  const std::vector<double> grid = s.grid.empty() ? linspace(0.0, s.periods, n) : s.grid;
  const RunSpec rs{s.shots, s.seed, !s.noiseless, true};
  SweepOptions opt;
  opt.exact = s.noiseless;
  const SweepTable t = run_sweep(SweepKind::ExchangeSweep, grid, rs, cfg, opt);
  write_csv(dir / "sweep.csv", sweep_csv(spec_comment(s), t));
  files.push_back(dir / "sweep.csv");
  return exchange_sweep_metrics(grid, t.column("M"), t.column("M_prime"), s.noiseless ? 0 : s.shots);
}

json coherence_fit(const std::string& variant, const CsvTable& t, double exponent) {
  FitResult fit;
  json metrics;
  if (variant == "rabi") {
    fit = fit_rabi(t.numeric_column("duration_s"), t.numeric_column("p_down"));
    metrics = {{"f_rabi_hz", fit.param("f_rabi")},
               {"t2_rabi_s", fit.param("t2_rabi")},
               {"q_factor", fit.param("t2_rabi") * fit.param("f_rabi")}};
  } else if (variant == "ramsey") {
    fit = fit_ramsey(t.numeric_column("t_eff_s"), t.numeric_column("bloch_length"));
    metrics = {{"t2_star_s", fit.param("t2_star")}};
  } else if (variant == "hahn") {
    fit = fit_hahn(t.numeric_column("idle_s"), t.numeric_column("bloch_length"), exponent);
    metrics = {{"t2_hahn_s", fit.param("t2_hahn")}};
  } else {
    throw std::invalid_argument("coherence variant must be rabi, ramsey or hahn");
  }
  metrics["converged"] = fit.converged;
  return {{"fit", to_json(fit)}, {"metrics", metrics}};
}

json run_coherence(const ExperimentSpec& s, const DeviceConfig& cfg, const fs::path& dir,
                   std::vector<fs::path>& files) {
  if (s.qubit < 1 || s.qubit > 4) throw std::invalid_argument("qubit must be 1..4");
  const QubitParams& q = cfg.qubits[static_cast<std::size_t>(s.qubit - 1)];
  SweepKind kind;
  std::vector<double> grid = s.grid;
  if (s.variant == "rabi") {
    kind = SweepKind::Rabi;
    if (grid.empty()) {
      const double span = 1.5 * q.t2_rabi_s;
      grid = linspace(0.0, span, static_cast<int>(std::ceil(span * q.rabi_hz * 8.0)) + 1);
    }
  } else if (s.variant == "ramsey") {
    kind = SweepKind::Ramsey;
    if (grid.empty()) grid = linspace(0.0, 2.5 * q.t2_star_s, 40);
  } else if (s.variant == "hahn") {
    kind = SweepKind::Hahn;
    if (grid.empty()) grid = linspace(0.0, q.t2_hahn_s, 30);
  } else {
    throw std::invalid_argument("coherence variant must be rabi, ramsey or hahn");
  }
  const RunSpec rs{s.shots, s.seed, !s.noiseless, true};
  SweepOptions opt;
  opt.qubit = s.qubit - 1;
  opt.allow_undrivable = true;
  const SweepTable sweep = run_sweep(kind, grid, rs, cfg, opt);
  CsvTable t = sweep_csv(spec_comment(s), sweep);
  if (kind == SweepKind::Hahn) {
    t.columns.insert(t.columns.begin() + 1, "idle_s");
    for (std::size_t i = 0; i < t.rows.size(); ++i) t.rows[i].insert(t.rows[i].begin() + 1, fmt(2.0 * grid[i]));
  }
  if (kind == SweepKind::Ramsey) {
    // Free precession runs from the centre of the first pulse to the centre of the first projection pulse.
    const GateDurations g = gate_durations(cfg, s.qubit - 1);
    t.columns.insert(t.columns.begin() + 1, "t_eff_s");
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      t.rows[i].insert(t.rows[i].begin() + 1, fmt(grid[i] + g.halfpi_s + g.virtual_z_s));
    }
  }
  write_csv(dir / "sweep.csv", t);
  files.push_back(dir / "sweep.csv");
  json out;
  try {
    out = coherence_fit(s.variant, t, cfg.noise.hahn_exponent);
  } catch (const std::invalid_argument& e) {
    out = {{"fit", nullptr}, {"metrics", {{"converged", false}}}, {"fit_error", e.what()}};
  }
  out["qubit"] = s.qubit;
  out["variant"] = s.variant;
  return out;
}

// ---------------------------------------------------------------------------------------------
// Readout

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return saa > 0 && sbb > 0 ? sab / std::sqrt(saa * sbb) : 0.0;
}

json run_readout_cal(const ExperimentSpec& s, const DeviceConfig& cfg, const fs::path& dir,
                     std::vector<fs::path>& files) {
  const std::string comment = spec_comment(s);
  const PsbWindowModel model = default_psb_model();
  CalibrationGrid grid = default_calibration_grid();
  const CalibrationResult cal = calibration_scan(model, grid, s.shots, s.seed, cfg.readout());
  CsvTable map{comment, {"detuning1", "detuning2", "thresholded1", "thresholded2", "sum", "sum_one", "in_window"}, {}};
  std::size_t recovered = 0, analytic = 0, mismatched = 0;
  for (const auto& p : cal.points) {
    map.rows.push_back({fmt(p.d1), fmt(p.d2), fmt(p.thresholded1), fmt(p.thresholded2), fmt(p.sum), fmt(p.sum_one),
                        p.in_window ? "1" : "0"});
    const bool oracle = model.valid(p.d1, p.d2);
    recovered += p.in_window;
    analytic += oracle;
    mismatched += p.in_window != oracle;
  }
  write_csv(dir / "calibration.csv", map);
  files.push_back(dir / "calibration.csv");

  // Signal histograms with independent random parities.
  const int n = std::max(20000, 20 * s.shots);
  std::vector<std::array<double, 4>> samples(static_cast<std::size_t>(n));
  const ReadoutParams& params = cfg.readout();
  parallel_for(n, [&](int i) {
    Rng rng(derive_seed(s.seed, kHistogramStream, static_cast<std::uint64_t>(i)));
    const Parity o12 = rng.bernoulli(0.5) ? Parity::Even : Parity::Odd;
    const Parity o34 = rng.bernoulli(0.5) ? Parity::Even : Parity::Odd;
    const auto sig = sample_signals(o12, o34, params, rng);
    samples[static_cast<std::size_t>(i)] = {sig[0], sig[1], static_cast<double>(o12), static_cast<double>(o34)};
  });
  CsvTable hist{comment, {"signal1", "signal2", "parity12", "parity34"}, {}};
  std::vector<double> s1, s2;
  for (const auto& v : samples) {
    hist.rows.push_back({fmt(v[0]), fmt(v[1]), fmt(v[2]), fmt(v[3])});
    s1.push_back(v[0]);
    s2.push_back(v[1]);
  }
  write_csv(dir / "histograms.csv", hist);
  files.push_back(dir / "histograms.csv");

  json metrics = {{"window_points", recovered},
                  {"analytic_window_points", analytic},
                  {"window_mismatches", mismatched},
                  {"window_exact", mismatched == 0},
                  {"signal_correlation", pearson(s1, s2)}};
  json fits = json::object();
  const std::vector<double>* sig[2] = {&s1, &s2};
  for (int k = 0; k < 2; ++k) {
    const std::string key = "set" + std::to_string(k + 1);
    try {
      const FitResult f = fit_bimodal(*sig[k]);
      fits[key] = to_json(f);
      metrics[key + "_snr"] = f.param("snr");
      metrics[key + "_charge_fidelity"] = f.param("charge_fidelity");
    } catch (const std::invalid_argument& e) {
      fits[key] = {{"error", e.what()}};
    }
  }
  return {{"metrics", metrics}, {"fits", fits}};
}

json run_spam_bench(const ExperimentSpec& s, const DeviceConfig& cfg, const fs::path& dir,
                    std::vector<fs::path>& files) {
  const ReadoutParams* modes[2] = {&cfg.readout_sequential, &cfg.readout_simultaneous};
  const char* names[2] = {"sequential", "simultaneous"};
  std::array<std::vector<int>, 2> attempts;
  for (int m = 0; m < 2; ++m) {
    attempts[static_cast<std::size_t>(m)].assign(static_cast<std::size_t>(s.shots), 0);
    parallel_for(s.shots, [&](int i) {
      Rng rng(derive_seed(s.seed, kInitStream + static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(i)));
      attempts[static_cast<std::size_t>(m)][static_cast<std::size_t>(i)] =
          heralded_init(cfg.init, *modes[m], rng).attempts;
    });
  }
  int max_attempts = 1;
  for (const auto& a : attempts) max_attempts = std::max(max_attempts, *std::max_element(a.begin(), a.end()));
  CsvTable t{spec_comment(s), {"attempts", "sequential", "simultaneous"}, {}};
  for (int k = 1; k <= max_attempts; ++k) {
    t.rows.push_back({std::to_string(k), std::to_string(std::count(attempts[0].begin(), attempts[0].end(), k)),
                      std::to_string(std::count(attempts[1].begin(), attempts[1].end(), k))});
  }
  write_csv(dir / "attempts.csv", t);
  files.push_back(dir / "attempts.csv");

  json metrics;
  metrics["joint_success_probability"] = cfg.init.p_even12 * cfg.init.p_even34;
  metrics["ideal_mean_attempts"] = 1.0 / (cfg.init.p_even12 * cfg.init.p_even34);
  constexpr double u_c = 10e-6;
  for (int m = 0; m < 2; ++m) {
    const auto& a = attempts[static_cast<std::size_t>(m)];
    const double mean = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(a.size());
    const ReadoutMode mode = m == 0 ? ReadoutMode::Sequential : ReadoutMode::Simultaneous;
    const double d1 = sequence_duration(cfg, mode, u_c, 1);
    const double d2 = sequence_duration(cfg, mode, u_c, 2);
    metrics[std::string("mean_attempts_") + names[m]] = mean;
    metrics[std::string("duration_") + names[m] + "_s"] = d1;
    metrics[std::string("duration_") + names[m] + "_mean_attempts_s"] = d1 + (mean - 1.0) * (d2 - d1);
  }
  const double sim2 = sequence_duration(cfg, ReadoutMode::Simultaneous, u_c, 1, 2);
  const double sim4 = sequence_duration(cfg, ReadoutMode::Simultaneous, u_c, 1, 4);
  metrics["simultaneous_cell_invariant"] = sim2 == sim4;
  return {{"metrics", metrics}};
}

RunOutput run_into(const ExperimentSpec& s, const fs::path& dir) {
  const DeviceConfig cfg = experiment_config(s);
  if (s.shots < 1) throw std::invalid_argument("shots must be >= 1");
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), s.experiment) == names.end()) {
    throw std::invalid_argument("unknown experiment '" + s.experiment + "'");
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create output directory " + dir.string());

  RunOutput out;
  json body;
  if (s.experiment.rfind("tomo-", 0) == 0) {
    body = run_tomography(s, cfg, dir, out.files);
  } else if (s.experiment == "lifetime") {
    body = run_lifetime(s, cfg, dir, out.files);
  } else if (s.experiment == "exchange-sweep") {
    body = run_exchange_sweep(s, cfg, dir, out.files);
  } else if (s.experiment == "coherence") {
    body = run_coherence(s, cfg, dir, out.files);
  } else if (s.experiment == "readout-cal") {
    body = run_readout_cal(s, cfg, dir, out.files);
  } else {
    body = run_spam_bench(s, cfg, dir, out.files);
  }
  body["experiment"] = s.experiment;
  body["spec"] = to_json(s);
  write_json(dir / "summary.json", body);
  out.files.push_back(dir / "summary.json");
  out.summary = std::move(body);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------------------------

json to_json(const ExperimentSpec& s) {
  return {{"experiment", s.experiment},
          {"variant", s.variant},
          {"config", s.config_path},
          {"seed", s.seed},
          {"shots", s.shots},
          {"grid", s.grid},
          {"periods", s.periods},
          {"qubit", s.qubit},
          {"mode", to_string(s.mode)},
          {"noiseless", s.noiseless},
          {"bootstrap", s.bootstrap},
          {"spam_reference", s.spam_reference},
          {"out", s.out_dir}};
}

ExperimentSpec experiment_spec_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("experiment spec must be a JSON object");
  ExperimentSpec s;
  try {
    s.experiment = j.at("experiment").get<std::string>();
    s.variant = j.value("variant", std::string{});
    s.config_path = j.value("config", std::string{});
    s.seed = j.value("seed", std::uint64_t{0});
    s.shots = j.value("shots", 1000);
    s.grid = j.value("grid", std::vector<double>{});
    s.periods = j.value("periods", 10.0);
    s.qubit = j.value("qubit", 2);
    s.mode = readout_mode_from_string(j.value("mode", std::string("sequential")));
    s.noiseless = j.value("noiseless", false);
    s.bootstrap = j.value("bootstrap", 1000);
    s.spam_reference = j.value("spam_reference", std::string{});
    s.out_dir = j.value("out", std::string("out"));
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed experiment spec: ") + e.what());
  }
  return s;
}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {"tomo-cluster", "tomo-ghz",  "tomo-init",   "lifetime",
                                                 "exchange-sweep", "coherence", "readout-cal", "spam-bench"};
  return names;
}

DeviceConfig experiment_config(const ExperimentSpec& s) {
  DeviceConfig cfg = s.config_path.empty() ? default_device_config() : load_config(s.config_path);
  cfg.mode = s.mode;
  if (s.noiseless) {
    for (ReadoutParams* r : {&cfg.readout_sequential, &cfg.readout_simultaneous}) {
      r->snr1 = r->snr2 = std::numeric_limits<double>::infinity();
      r->spin_error = 0.0;
      r->crosstalk12 = r->crosstalk21 = 0.0;
    }
    cfg.init.p_even12 = cfg.init.p_even34 = 1.0;
  }
  validate(cfg);
  return cfg;
}

std::string spec_comment(const ExperimentSpec& s) { return "experiment_spec=" + to_json(s).dump(); }

ExperimentSpec spec_from_csv(const fs::path& csv) {
  const CsvTable t = read_csv(csv);
  const std::string prefix = "experiment_spec=";
  if (t.comment.rfind(prefix, 0) != 0) throw std::runtime_error(csv.string() + " has no experiment_spec header");
  return experiment_spec_from_json(json::parse(t.comment.substr(prefix.size())));
}

RunOutput run_experiment(const ExperimentSpec& s) { return run_into(s, s.out_dir); }

json lifetime_fits(const std::vector<double>& idle_s, const std::vector<std::vector<double>>& terms,
                   const std::vector<std::string>& names, double exponent) {
  json fits = json::object(), t2 = json::object();
  for (std::size_t k = 0; k < names.size(); ++k) {
    std::vector<double> y = terms[k];
    const double sign = y.front() < 0 ? -1.0 : 1.0;
    for (double& v : y) v *= sign;
    try {
      const FitResult f = fit_hahn(idle_s, y, exponent);
      fits[names[k]] = to_json(f);
      t2[names[k]] = f.converged ? json(f.param("t2_hahn")) : json(nullptr);
    } catch (const std::invalid_argument& e) {
      fits[names[k]] = {{"error", e.what()}};
      t2[names[k]] = nullptr;
    }
  }
  json metrics = json::object();
  for (auto it = t2.begin(); it != t2.end(); ++it) {
    if (!it->is_null()) metrics["t2_" + it.key() + "_s"] = *it;
  }
  const std::vector<std::string> four = {"XXX", "XYZ", "ZXZ", "ZYX"};
  bool have_all = t2.contains("M") && !t2["M"].is_null();
  double mean = 0.0;
  for (const auto& n : four) {
    if (!t2.contains(n) || t2[n].is_null()) {
      have_all = false;
      break;
    }
    mean += t2[n].get<double>() / 4.0;
  }
  if (have_all) {
    const double tm = t2["M"].get<double>();
    metrics["t2_mean_terms_s"] = mean;
    metrics["t2_M_over_mean"] = tm / mean;
    metrics["xxx_shorter_than_M"] = t2["XXX"].get<double>() < tm;
    metrics["M_within_25pct_of_mean"] = std::abs(tm / mean - 1.0) <= 0.25;
  }
  return {{"fits", fits}, {"metrics", metrics}};
}

json exchange_sweep_metrics(const std::vector<double>& periods, const std::vector<double>& m,
                            const std::vector<double>& m_prime, int shots) {
  if (periods.size() != m.size() || m.size() != m_prime.size() || periods.size() < 3) {
    throw std::invalid_argument("exchange sweep needs matching columns with at least three points");
  }
  const double step = periods[1] - periods[0];
  const double last = periods.back();
  // Per-period argmax positions (fractional part) of M and M'.
  json peaks_m = json::array(), peaks_mp = json::array(), period_max = json::array(), period_amp = json::array();
  // Each term is an average of +-1 outcomes, so the standard error of M is at most 2 / sqrt(shots).
  const double noise = shots > 0 ? 2.0 / std::sqrt(static_cast<double>(shots)) : 0.0;
  const double vis_floor = std::max(3.0 * noise, 1e-9);
  int visible = 0;
  bool still_visible = true;
  std::vector<double> env_k, env_log;
  for (int k = 0; k < static_cast<int>(std::floor(last + 1e-9)); ++k) {
    std::size_t im = periods.size(), imp = periods.size();
    double best_m = -1e300, best_mp = -1e300, low_m = 1e300;
    for (std::size_t i = 0; i < periods.size(); ++i) {
      if (periods[i] < k - 1e-12 || periods[i] >= k + 1 - 1e-12) continue;
      low_m = std::min(low_m, m[i]);
      if (m[i] > best_m) {
        best_m = m[i];
        im = i;
      }
      if (m_prime[i] > best_mp) {
        best_mp = m_prime[i];
        imp = i;
      }
    }
    if (im == periods.size()) continue;
    peaks_m.push_back(periods[im] - k);
    peaks_mp.push_back(periods[imp] - k);
    period_max.push_back(std::max(best_m, best_mp));
    const double amp = 0.5 * (best_m - low_m);
    period_amp.push_back(amp);
    still_visible = still_visible && amp > vis_floor;
    if (still_visible) ++visible;
    if (amp > 0.0) {
      env_k.push_back(k + 0.5);
      env_log.push_back(std::log(amp));
    }
  }
  // Log-linear fit of the per-period half amplitude: amp ~ exp(-k / decay).
  double decay = std::numeric_limits<double>::infinity();
  if (env_k.size() >= 2) {
    const double n = static_cast<double>(env_k.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < env_k.size(); ++i) {
      sx += env_k[i];
      sy += env_log[i];
      sxx += env_k[i] * env_k[i];
      sxy += env_k[i] * env_log[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    if (slope < -1e-9) decay = -1.0 / slope;
  }
  bool quarters = !peaks_m.empty();
  for (std::size_t k = 0; k < peaks_m.size(); ++k) {
    quarters = quarters && std::abs(peaks_m[k].get<double>() - 0.25) <= step + 1e-12 &&
               std::abs(peaks_mp[k].get<double>() - 0.75) <= step + 1e-12;
  }
  json metrics = {{"grid_step", step},
                  {"m_argmax", peaks_m.empty() ? json(nullptr) : peaks_m[0]},
                  {"m_prime_argmax", peaks_mp.empty() ? json(nullptr) : peaks_mp[0]},
                  {"peaks_at_quarters", quarters},
                  {"m_max", *std::max_element(m.begin(), m.end())},
                  {"m_prime_max", *std::max_element(m_prime.begin(), m_prime.end())},
                  {"m_m_prime_correlation", pearson(m, m_prime)},
                  {"visibility_floor", vis_floor},
                  {"visible_periods", visible},
                  {"envelope_decay_periods", std::isfinite(decay) ? json(decay) : json(nullptr)}};
  return {{"metrics", metrics}, {"per_period_m_argmax", peaks_m}, {"per_period_m_prime_argmax", peaks_mp},
          {"per_period_max", period_max}, {"per_period_half_amplitude", period_amp}};
}

json analyze(const std::string& kind, const fs::path& input, const std::optional<fs::path>& spam_reference,
             int bootstrap) {
  if (kind == "tomo") {
    const fs::path table = tomo_table(input);
    const CsvTable t = read_csv(table);
    if (t.rows.empty()) throw std::runtime_error(table.string() + " holds no rows");
    const ExperimentSpec s = spec_from_csv(table);
    std::optional<double> lambda;
    if (spam_reference) lambda = reference_lambda(*spam_reference);
    json out = tomography_section(counts_from_table(t), tomo_state(s.experiment), s.noiseless ? 0 : bootstrap,
                                  s.seed, lambda);
    out["experiment"] = s.experiment;
    out["spec"] = to_json(s);
    return out;
  }
  const fs::path table = fs::is_directory(input) ? input / "sweep.csv" : input;
  const CsvTable t = read_csv(table);
  if (t.rows.empty()) throw std::runtime_error(table.string() + " holds no rows");
  const ExperimentSpec s = spec_from_csv(table);
  const DeviceConfig cfg = experiment_config(s);
  json out;
  if (kind == "lifetime" || kind == "fit-hahn") {
    if (!t.has_column("idle_s")) throw std::runtime_error("table is not a lifetime sweep");
    out = lifetime_summary(t, cfg.noise.hahn_exponent);
  } else if (kind == "coherence") {
    out = coherence_fit(s.variant, t, cfg.noise.hahn_exponent);
  } else if (kind == "exchange-sweep") {
    out = exchange_sweep_metrics(t.numeric_column("exchange_periods"), t.numeric_column("M"),
                                 t.numeric_column("M_prime"), s.noiseless ? 0 : s.shots);
  } else {
    throw std::invalid_argument("unknown analysis kind '" + kind + "'");
  }
  out["experiment"] = s.experiment;
  out["spec"] = to_json(s);
  return out;
}

PsbWindowModel default_psb_model() {
  PsbWindowModel m;
  m.window = {Interval{-0.6, 0.6}, Interval{-0.5, 0.7}};
  m.cross_slope = {0.2, -0.15};
  m.cascade[0] = {Interval{0.30, 0.42}};
  m.cascade[1] = {Interval{-0.45, -0.35}};
  return m;
}

CalibrationGrid default_calibration_grid() {
  return {linspace(-1.0, 1.0, 41), linspace(-1.0, 1.0, 41)};
}

// ---------------------------------------------------------------------------------------------
// Report

bool Report::all_pass() const {
  return std::all_of(lines.begin(), lines.end(), [](const ReportLine& l) { return l.pass; });
}

std::string Report::table() const {
  std::ostringstream out;
  out << std::left << std::setw(34) << "source" << std::setw(30) << "metric" << std::setw(16) << "value"
      << std::setw(16) << "reference" << std::setw(20) << "rule" << "result\n";
  for (const auto& l : lines) {
    std::ostringstream rule;
    rule << l.rule;
    if (l.rule == "abs" || l.rule == "rel") rule << " " << std::setprecision(3) << l.tolerance;
    out << std::left << std::setw(34) << l.source << std::setw(30) << l.metric << std::setw(16)
        << std::setprecision(8) << l.value << std::setw(16) << l.reference << std::setw(20) << rule.str()
        << (l.rule == "info" ? "info" : (l.pass ? "PASS" : "FAIL")) << "\n";
  }
  return out.str();
}

fs::path default_reference_path() {
  if (const char* env = std::getenv("SPINSIM_REFERENCE")) return env;
  return fs::path(SPINSIM_DATA_DIR) / "reference_values.json";
}

json load_reference_values(const fs::path& path) { return read_json(path); }

bool directories_identical(const fs::path& a, const fs::path& b) {
  auto listing = [](const fs::path& d) {
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(d)) {
      if (e.is_regular_file()) names.push_back(e.path().filename().string());
    }
    std::sort(names.begin(), names.end());
    return names;
  };
  const auto na = listing(a), nb = listing(b);
  if (na != nb) return false;
  for (const auto& n : na) {
    std::ifstream fa(a / n, std::ios::binary), fb(b / n, std::ios::binary);
    const std::string ca((std::istreambuf_iterator<char>(fa)), {});
    const std::string cb((std::istreambuf_iterator<char>(fb)), {});
    if (ca != cb) return false;
  }
  return true;
}

Report report(const std::vector<fs::path>& run_dirs, const json& references, bool reproduce) {
  Report rep;
  const json& checks = references.at("checks");
  for (const auto& dir : run_dirs) {
    const json summary = read_json(dir / "summary.json");
    const ExperimentSpec s = experiment_spec_from_json(summary.at("spec"));
    const std::string source = dir.filename().string().empty() ? dir.parent_path().filename().string()
                                                                : dir.filename().string();
    const json& metrics = summary.contains("metrics") ? summary["metrics"] : json::object();
    if (checks.contains(s.experiment)) {
      for (const auto& c : checks[s.experiment]) {
        const std::string when = c.value("when", std::string("always"));
        if ((when == "noiseless" && !s.noiseless) || (when == "noisy" && s.noiseless)) continue;
        if (c.contains("variant") && c["variant"].get<std::string>() != s.variant) continue;
        if (c.contains("mode") && c["mode"].get<std::string>() != to_string(s.mode)) continue;
        if (c.contains("qubits")) {
          const auto q = c["qubits"].get<std::vector<int>>();
          if (std::find(q.begin(), q.end(), s.qubit) == q.end()) continue;
        }
        const std::string metric = c.at("metric").get<std::string>();
        if (!metrics.contains(metric)) continue;
        ReportLine line;
        line.source = source;
        line.metric = metric;
        line.rule = c.at("rule").get<std::string>();
        line.tolerance = c.value("tolerance", 0.0);
        const json& v = metrics[metric];
        if (v.is_null()) {
          line.value = std::numeric_limits<double>::quiet_NaN();
        } else {
          line.value = v.is_boolean() ? (v.get<bool>() ? 1.0 : 0.0) : v.get<double>();
        }
        const json& r = c.at("reference");
        if (r.is_string()) {
          line.reference = references.at("qubits").at("Q" + std::to_string(s.qubit)).at(metric).get<double>();
        } else {
          line.reference = r.is_boolean() ? (r.get<bool>() ? 1.0 : 0.0) : r.get<double>();
        }
        const double x = line.value, ref = line.reference, tol = line.tolerance;
        if (line.rule == "abs") line.pass = std::abs(x - ref) <= tol;
        else if (line.rule == "rel") line.pass = std::abs(x - ref) <= tol * std::abs(ref);
        else if (line.rule == "min") line.pass = x >= ref;
        else if (line.rule == "max") line.pass = x <= ref;
        else if (line.rule == "equal") line.pass = x == ref;
        else line.pass = true;
        rep.lines.push_back(line);
      }
    }
    if (reproduce) {
      const fs::path scratch = fs::temp_directory_path() / ("spinsim-repro-" + std::to_string(::getpid()) + "-" +
                                                            std::to_string(rep.lines.size()));
      fs::remove_all(scratch);
      run_into(s, scratch);
      const bool same = directories_identical(dir, scratch);
      fs::remove_all(scratch);
      rep.lines.push_back({source, "reproducible", same ? 1.0 : 0.0, 1.0, 0.0, "equal", same});
    }
  }
  return rep;
}

}  // namespace spinsim
