// spinsim: run, analyze and report on simulated spin-qubit experiments.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "spinsim/circuits.hpp"
#include "spinsim/csv.hpp"
#include "spinsim/device.hpp"
#include "spinsim/experiment.hpp"
#include "spinsim/fitting.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

void emit(const json& j, const std::string& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream f(out, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + out);
  f << j.dump(2) << "\n";
}

std::pair<std::vector<double>, std::vector<double>> xy_columns(const spinsim::CsvTable& t, const std::string& x,
                                                               const std::string& y) {
  if (t.columns.size() < 2) throw std::runtime_error("fit needs at least two columns");
  const std::string xn = x.empty() ? t.columns[0] : x;
  const std::string yn = y.empty() ? t.columns[1] : y;
  return {t.numeric_column(xn), t.numeric_column(yn)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pulse-level simulator and analysis toolkit for a four-qubit spin processor"};
  app.require_subcommand(1);

  // run
  spinsim::ExperimentSpec spec;
  std::string mode = "sequential", grid;
  auto* run = app.add_subcommand("run", "Run an experiment and write CSV tables plus summary.json");
  run->add_option("experiment", spec.experiment, "tomo-cluster | tomo-ghz | tomo-init | lifetime | exchange-sweep | "
                                                 "coherence | readout-cal | spam-bench")
      ->required();
  run->add_option("variant", spec.variant, "coherence variant: rabi | ramsey | hahn");
  run->add_option("--config", spec.config_path, "Device configuration file");
  run->add_option("--seed", spec.seed, "Master seed");
  run->add_option("--shots", spec.shots, "Shots per setting or sweep point, realizations for coherence");
  run->add_option("--mode", mode, "Readout mode")->check(CLI::IsMember({"sequential", "simultaneous"}));
  run->add_option("--out", spec.out_dir, "Output directory");
  run->add_option("--spam-reference", spec.spam_reference, "tomo-init run directory for SPAM correction");
  run->add_option("--periods", spec.periods, "Exchange-sweep length in periods");
  run->add_option("--qubit", spec.qubit, "Coherence target qubit (1..4)");
  run->add_option("--grid", grid, "Comma-separated sweep grid (seconds, or periods for exchange-sweep)");
  run->add_option("--bootstrap", spec.bootstrap, "Bootstrap resamples for tomography errors");
  run->add_flag("--noiseless", spec.noiseless, "Disable noise, ideal readout, exact Born probabilities");

  // analyze
  std::string analyze_kind, analyze_input, analyze_ref, analyze_out;
  int analyze_bootstrap = 1000;
  auto* analyze = app.add_subcommand("analyze", "Re-analyse stored results without simulation");
  analyze->add_option("kind", analyze_kind, "tomo | lifetime | fit-hahn | coherence | exchange-sweep")->required();
  analyze->add_option("input", analyze_input, "Run directory or CSV file")->required();
  analyze->add_option("--spam-reference", analyze_ref, "tomo-init run directory for SPAM correction");
  analyze->add_option("--bootstrap", analyze_bootstrap, "Bootstrap resamples");
  analyze->add_option("--out", analyze_out, "Write the summary here instead of stdout");

  // report
  std::vector<std::string> report_dirs;
  std::string reference_path;
  bool reproduce = false;
  auto* report = app.add_subcommand("report", "Compare run summaries against reference values");
  report->add_option("runs", report_dirs, "Run directories")->required();
  report->add_option("--reference", reference_path, "Reference values JSON");
  report->add_flag("--reproduce", reproduce, "Re-run each spec and require byte-identical output");

  // circuit dump
  std::string state = "cluster3", circuit_config, circuit_out;
  int setting_id = -1;
  double tau = 0.0;
  auto* circuit = app.add_subcommand("circuit", "Circuit utilities");
  circuit->require_subcommand(1);
  auto* dump = circuit->add_subcommand("dump", "Print a circuit as JSON");
  dump->add_option("state", state, "plus3 | cluster3 | ghz3 | init3");
  dump->add_option("--setting", setting_id, "Append projection setting 0..359 and readout");
  dump->add_option("--tau", tau, "Idle time on each side of the refocusing pulses (s)");
  dump->add_option("--config", circuit_config, "Device configuration file");
  dump->add_option("--out", circuit_out, "Write here instead of stdout");

  // fit
  std::string fit_model, fit_csv, fit_x, fit_y, fit_out;
  double exponent = 1.0;
  bool free_exponent = false;
  auto* fit = app.add_subcommand("fit", "Fit a model to a CSV table");
  fit->add_option("model", fit_model, "rabi | ramsey | hahn | exchange | bimodal")
      ->required()
      ->check(CLI::IsMember({"rabi", "ramsey", "hahn", "exchange", "bimodal"}));
  fit->add_option("csv", fit_csv, "Input table")->required();
  fit->add_option("--x", fit_x, "x column (default: first)");
  fit->add_option("--y", fit_y, "y column (default: second; bimodal: first)");
  fit->add_option("--exponent", exponent, "Fixed stretch exponent for hahn");
  fit->add_flag("--free-exponent", free_exponent, "Fit the hahn stretch exponent");
  fit->add_option("--out", fit_out, "Write here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      spec.mode = spinsim::readout_mode_from_string(mode);
      if (!grid.empty()) spec.grid = parse_grid(grid);
      if (spec.experiment == "coherence" && spec.variant.empty()) {
        throw std::invalid_argument("coherence needs a variant: rabi, ramsey or hahn");
      }
      const auto out = spinsim::run_experiment(spec);
      for (const auto& f : out.files) std::cerr << "wrote " << f.string() << "\n";
      std::cout << out.summary.value("metrics", json::object()).dump(2) << "\n";
      return 0;
    }
    if (analyze->parsed()) {
      std::optional<fs::path> ref;
      if (!analyze_ref.empty()) ref = analyze_ref;
      emit(spinsim::analyze(analyze_kind, analyze_input, ref, analyze_bootstrap), analyze_out);
      return 0;
    }
    if (report->parsed()) {
      const json refs = spinsim::load_reference_values(reference_path.empty() ? spinsim::default_reference_path()
                                                                               : fs::path(reference_path));
      std::vector<fs::path> dirs(report_dirs.begin(), report_dirs.end());
      const spinsim::Report r = spinsim::report(dirs, refs, reproduce);
      std::cout << r.table();
      std::cout << (r.all_pass() ? "all checks passed" : "some checks FAILED") << "\n";
      return r.all_pass() ? 0 : 1;
    }
    if (dump->parsed()) {
      const spinsim::DeviceConfig cfg =
          circuit_config.empty() ? spinsim::default_device_config() : spinsim::load_config(circuit_config);
      const spinsim::StateKind kind = spinsim::state_kind_from_string(state);
      spinsim::StateTiming timing = spinsim::default_state_timing(cfg);
      timing.tau_s = tau;
      spinsim::Circuit c;
      if (setting_id >= 0) {
        const auto& settings = spinsim::enumerate_settings();
        if (setting_id >= static_cast<int>(settings.size())) throw std::invalid_argument("setting out of range");
        c = spinsim::measurement_circuit(kind, timing, settings[static_cast<std::size_t>(setting_id)], cfg);
      } else {
        c = spinsim::build_state_circuit(kind, cfg, timing);
      }
      emit(spinsim::to_json(c), circuit_out);
      return 0;
    }
    if (fit->parsed()) {
      const spinsim::CsvTable t = spinsim::read_csv(fit_csv);
      if (t.rows.empty()) throw std::runtime_error(fit_csv + " holds no rows");
      spinsim::FitResult r;
      if (fit_model == "bimodal") {
        r = spinsim::fit_bimodal(t.numeric_column(fit_y.empty() ? t.columns[0] : fit_y));
      } else {
        const auto [x, y] = xy_columns(t, fit_x, fit_y);
        if (fit_model == "rabi") r = spinsim::fit_rabi(x, y);
        else if (fit_model == "ramsey") r = spinsim::fit_ramsey(x, y);
        else if (fit_model == "hahn")
          r = spinsim::fit_hahn(x, y, free_exponent ? std::numeric_limits<double>::quiet_NaN() : exponent);
        else r = spinsim::fit_exchange(x, y);
      }
      emit(spinsim::to_json(r), fit_out);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
