#pragma once

// Experiment pipelines behind the command-line tool. Each run writes one directory of CSV
// tables plus summary.json; every CSV starts with "# experiment_spec={...}".

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spinsim/device.hpp"
#include "spinsim/readout.hpp"

namespace spinsim {

struct ExperimentSpec {
  std::string experiment;        // see experiment_names()
  std::string variant;           // coherence: rabi, ramsey or hahn
  std::string config_path;       // empty selects the built-in defaults
  std::uint64_t seed = 0;
  int shots = 1000;              // per setting, per sweep point, or realizations for coherence
  std::vector<double> grid;      // empty selects the experiment's default grid
  double periods = 10.0;         // exchange-sweep length in exchange periods
  int qubit = 2;                 // coherence target, 1..4
  ReadoutMode mode = ReadoutMode::Sequential;
  bool noiseless = false;        // no noise, ideal readout, exact Born probabilities
  int bootstrap = 1000;          // tomography resamples
  std::string spam_reference;    // tomography: directory of a tomo-init run
  std::string out_dir = "out";

  bool operator==(const ExperimentSpec&) const = default;
};

nlohmann::json to_json(const ExperimentSpec& s);
ExperimentSpec experiment_spec_from_json(const nlohmann::json& j);

const std::vector<std::string>& experiment_names();

/// Device configuration for a spec: file or defaults, readout mode applied, and in noiseless
/// mode ideal readout and deterministic initialisation.
DeviceConfig experiment_config(const ExperimentSpec& s);

struct RunOutput {
  std::vector<std::filesystem::path> files;
  nlohmann::json summary;
};

/// Runs the experiment and writes its directory. Throws std::invalid_argument for an unknown
/// experiment or bad parameters and std::runtime_error for I/O failures.
RunOutput run_experiment(const ExperimentSpec& s);

/// Provenance line written at the top of every CSV.
std::string spec_comment(const ExperimentSpec& s);
/// Recovers the run settings from a CSV written by run_experiment.
ExperimentSpec spec_from_csv(const std::filesystem::path& csv);

/// Re-analysis of stored results without simulation.
/// kind "tomo": a tomo-* directory, optionally SPAM-corrected with a tomo-init directory.
/// kind "lifetime" / "fit-hahn": refits a lifetime sweep table.
/// kind "coherence": refits a coherence sweep table.
/// kind "exchange-sweep": recomputes oscillation metrics.
nlohmann::json analyze(const std::string& kind, const std::filesystem::path& input,
                       const std::optional<std::filesystem::path>& spam_reference = std::nullopt,
                       int bootstrap = 1000);

/// Fits behind the lifetime analysis, exposed for tests.
nlohmann::json lifetime_fits(const std::vector<double>& idle_s, const std::vector<std::vector<double>>& terms,
                             const std::vector<std::string>& names, double exponent);

/// Oscillation metrics of an exchange sweep. A period counts as visible while the half
/// peak-to-peak of M exceeds three shot-noise standard errors (2 / sqrt(shots)); shots = 0
/// means exact probabilities.
nlohmann::json exchange_sweep_metrics(const std::vector<double>& periods, const std::vector<double>& m,
                                      const std::vector<double>& m_prime, int shots = 0);

/// Synthetic two-DQD blockade-window model used by readout-cal.
PsbWindowModel default_psb_model();
CalibrationGrid default_calibration_grid();

struct ReportLine {
  std::string source;
  std::string metric;
  double value = 0.0;
  double reference = 0.0;
  double tolerance = 0.0;
  std::string rule;   // "abs", "rel", "min", "max", "info"
  bool pass = true;
};

struct Report {
  std::vector<ReportLine> lines;
  bool all_pass() const;
  std::string table() const;
};

std::filesystem::path default_reference_path();
nlohmann::json load_reference_values(const std::filesystem::path& path = default_reference_path());

/// Compares each run directory's summary against the reference values. With `reproduce`,
/// re-runs each spec into a scratch directory and requires byte-identical files.
Report report(const std::vector<std::filesystem::path>& run_dirs, const nlohmann::json& references,
              bool reproduce = false);

/// True if the two directories hold the same file names with identical bytes.
bool directories_identical(const std::filesystem::path& a, const std::filesystem::path& b);

}  // namespace spinsim
