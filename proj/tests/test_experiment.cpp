#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "spinsim/csv.hpp"
#include "spinsim/experiment.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace spinsim;

namespace {

class TempDir {
 public:
  explicit TempDir(const std::string& name) : path_(fs::temp_directory_path() / ("spinsim-test-" + name)) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

json read_json_file(const fs::path& p) {
  std::ifstream f(p);
  return json::parse(f);
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SPINSIM_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

ExperimentSpec small_lifetime(const fs::path& out) {
  ExperimentSpec s;
  s.experiment = "lifetime";
  s.shots = 40;
  s.seed = 9;
  s.grid = {0.0, 5e-6, 10e-6, 20e-6, 30e-6, 45e-6, 60e-6};
  s.out_dir = out.string();
  return s;
}

}  // namespace

TEST(Csv, RoundTripWithComment) {
  TempDir d("csv");
  CsvTable t{"experiment_spec={\"a\":1}", {"x", "y"}, {{format_double(0.1), format_double(1.0 / 3.0)}, {"2", "-4e-06"}}};
  write_csv(d.path() / "t.csv", t);
  const CsvTable back = read_csv(d.path() / "t.csv");
  EXPECT_EQ(back.comment, t.comment);
  EXPECT_EQ(back.columns, t.columns);
  EXPECT_EQ(back.rows, t.rows);
  EXPECT_EQ(back.numeric_column("y")[0], 1.0 / 3.0);
  EXPECT_TRUE(back.has_column("x"));
  EXPECT_FALSE(back.has_column("z"));
  EXPECT_THROW(back.column_index("z"), std::exception);
}

TEST(Csv, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1e-300, -2.5e7, 1.0 / 3.0, 6.02214076e23}) EXPECT_EQ(std::stod(format_double(v)), v);
}

TEST(Csv, EmptyRaggedAndMissingFilesThrow) {
  TempDir d("csv-bad");
  { std::ofstream(d.path() / "empty.csv"); }
  {
    std::ofstream f(d.path() / "ragged.csv");
    f << "a,b\n1,2\n3\n";
  }
  EXPECT_THROW(read_csv(d.path() / "empty.csv"), std::runtime_error);
  EXPECT_THROW(read_csv(d.path() / "ragged.csv"), std::runtime_error);
  EXPECT_THROW(read_csv(d.path() / "missing.csv"), std::runtime_error);
}

TEST(Spec, JsonAndCommentRoundTrip) {
  ExperimentSpec s;
  s.experiment = "coherence";
  s.variant = "ramsey";
  s.seed = 1234567890123ULL;
  s.shots = 77;
  s.grid = {0.0, 1e-6, 2.5e-6};
  s.periods = 3.5;
  s.qubit = 4;
  s.mode = ReadoutMode::Simultaneous;
  s.noiseless = true;
  s.bootstrap = 12;
  s.spam_reference = "ref";
  s.out_dir = "somewhere";
  EXPECT_EQ(experiment_spec_from_json(to_json(s)), s);
  TempDir d("spec");
  write_csv(d.path() / "t.csv", CsvTable{spec_comment(s), {"a"}, {{"1"}}});
  EXPECT_EQ(spec_from_csv(d.path() / "t.csv"), s);
  EXPECT_THROW(experiment_spec_from_json(json::array()), std::invalid_argument);
  EXPECT_THROW(experiment_spec_from_json(json{{"shots", 3}}), std::invalid_argument);
}

TEST(Run, UnknownExperimentThrows) {
  ExperimentSpec s;
  s.experiment = "teleportation";
  s.out_dir = (fs::temp_directory_path() / "spinsim-test-unknown").string();
  EXPECT_THROW(run_experiment(s), std::invalid_argument);
}

TEST(Run, SameSpecGivesByteIdenticalDirectory) {
  TempDir d("repeat");
  const fs::path out = d.path() / "run";
  const ExperimentSpec s = small_lifetime(out);
  run_experiment(s);
  fs::copy(out, d.path() / "first", fs::copy_options::recursive);
  run_experiment(s);
  EXPECT_TRUE(directories_identical(out, d.path() / "first"));
  ExperimentSpec other = s;
  other.seed = 10;
  run_experiment(other);
  EXPECT_FALSE(directories_identical(out, d.path() / "first"));
}

TEST(Run, EveryCsvCarriesItsSpec) {
  TempDir d("provenance");
  const ExperimentSpec s = small_lifetime(d.path() / "run");
  const RunOutput out = run_experiment(s);
  bool any_csv = false;
  for (const auto& f : out.files) {
    if (f.extension() != ".csv") continue;
    any_csv = true;
    EXPECT_EQ(slurp(f).rfind("# experiment_spec=", 0), 0u);
    EXPECT_EQ(spec_from_csv(f), s);
  }
  EXPECT_TRUE(any_csv);
  EXPECT_EQ(read_json_file(d.path() / "run" / "summary.json").at("experiment"), "lifetime");
}

TEST(Analyze, ReproducesStoredLifetimeSummary) {
  TempDir d("analyze");
  const ExperimentSpec s = small_lifetime(d.path() / "run");
  run_experiment(s);
  const json stored = read_json_file(d.path() / "run" / "summary.json");
  const json again = analyze("lifetime", d.path() / "run");
  EXPECT_EQ(again.at("metrics"), stored.at("metrics"));
  EXPECT_EQ(again.at("fits"), stored.at("fits"));
  EXPECT_THROW(analyze("nonsense", d.path() / "run"), std::invalid_argument);
}

TEST(Analyze, EmptyInputFails) {
  TempDir d("analyze-empty");
  { std::ofstream(d.path() / "sweep.csv"); }
  EXPECT_THROW(analyze("lifetime", d.path()), std::runtime_error);
  {
    std::ofstream f(d.path() / "header-only.csv");
    f << "# experiment_spec={\"experiment\":\"lifetime\"}\nidle_s,M\n";
  }
  EXPECT_THROW(analyze("lifetime", d.path() / "header-only.csv"), std::runtime_error);
}

TEST(LifetimeFits, RecoversSyntheticDecays) {
  std::vector<double> idle;
  for (int i = 0; i <= 15; ++i) idle.push_back(8e-6 * i);
  const std::vector<std::string> names = {"XXX", "XYZ", "ZXZ", "ZYX", "M"};
  const std::vector<double> t2 = {40e-6, 60e-6, 60e-6, 60e-6, 55e-6};
  const std::vector<double> sign = {1, 1, -1, 1, 1};
  std::vector<std::vector<double>> terms(5);
  for (std::size_t k = 0; k < 5; ++k)
    for (double x : idle) terms[k].push_back(sign[k] * (k == 4 ? 4.0 : 1.0) * std::exp(-x / t2[k]));
  const json out = lifetime_fits(idle, terms, names, 1.0);
  const json& m = out.at("metrics");
  EXPECT_NEAR(m.at("t2_XXX_s").get<double>(), 40e-6, 1e-12);
  EXPECT_NEAR(m.at("t2_ZXZ_s").get<double>(), 60e-6, 1e-12);  // fitted on the sign-flipped trace
  EXPECT_NEAR(m.at("t2_mean_terms_s").get<double>(), 55e-6, 1e-12);
  EXPECT_NEAR(m.at("t2_M_over_mean").get<double>(), 1.0, 1e-9);
  EXPECT_TRUE(m.at("xxx_shorter_than_M").get<bool>());
  EXPECT_TRUE(m.at("M_within_25pct_of_mean").get<bool>());
}

TEST(LifetimeFits, TooFewPointsRecordsError) {
  const json out = lifetime_fits({0.0, 1e-5}, {{1.0, 0.5}}, {"M"}, 1.0);
  EXPECT_TRUE(out.at("fits").at("M").contains("error"));
  EXPECT_TRUE(out.at("metrics").empty());
}

TEST(ExchangeSweepMetrics, IdealCosineOscillation) {
  std::vector<double> p, m, mp;
  for (int i = 0; i <= 400; ++i) {
    const double x = i / 40.0;
    p.push_back(x);
    m.push_back(2.0 + 2.0 * std::sin(2 * M_PI * x));
    mp.push_back(2.0 - 2.0 * std::sin(2 * M_PI * x));
  }
  const json j = exchange_sweep_metrics(p, m, mp).at("metrics");
  EXPECT_DOUBLE_EQ(j.at("grid_step").get<double>(), 0.025);
  EXPECT_NEAR(j.at("m_max").get<double>(), 4.0, 1e-12);
  EXPECT_TRUE(j.at("peaks_at_quarters").get<bool>());
  EXPECT_EQ(j.at("visible_periods").get<int>(), 10);
  EXPECT_LT(j.at("m_m_prime_correlation").get<double>(), -0.99);
  EXPECT_TRUE(j.at("envelope_decay_periods").is_null());
}

TEST(ExchangeSweepMetrics, DecayingEnvelopeAndShotNoiseFloor) {
  std::vector<double> p, m, mp;
  const double decay = 5.0;
  for (int i = 0; i <= 400; ++i) {
    const double x = i / 40.0;
    const double env = std::exp(-x / decay);
    p.push_back(x);
    m.push_back(2.0 + 2.0 * env * std::sin(2 * M_PI * x));
    mp.push_back(2.0 - 2.0 * env * std::sin(2 * M_PI * x));
  }
  const json j = exchange_sweep_metrics(p, m, mp, 200).at("metrics");
  EXPECT_NEAR(j.at("envelope_decay_periods").get<double>(), decay, 0.05 * decay);
  // Half amplitude about 2 exp(-k / 5) stays above 3 * 2 / sqrt(200) for k below 5 ln(2 sqrt(200) / 6).
  const int expect = static_cast<int>(std::floor(decay * std::log(2.0 / (6.0 / std::sqrt(200.0))))) + 1;
  EXPECT_NEAR(j.at("visible_periods").get<int>(), expect, 1);
  EXPECT_NEAR(j.at("visibility_floor").get<double>(), 6.0 / std::sqrt(200.0), 1e-12);
  EXPECT_THROW(exchange_sweep_metrics({0.0, 1.0}, {1.0, 2.0}, {1.0, 2.0}), std::invalid_argument);
}

TEST(Report, ChecksAndReproducibility) {
  TempDir d("report");
  const fs::path out = d.path() / "run";
  run_experiment(small_lifetime(out));
  const json refs = json{{"checks", json::object()}};
  const Report ok = report({out}, refs, true);
  ASSERT_EQ(ok.lines.size(), 1u);
  EXPECT_TRUE(ok.all_pass());
  EXPECT_NE(ok.table().find("reproducible"), std::string::npos);

  // A summary whose spec names a different seed no longer reproduces the stored tables.
  json summary = read_json_file(out / "summary.json");
  summary["spec"]["seed"] = 10;
  std::ofstream(out / "summary.json") << summary.dump(2) << "\n";
  EXPECT_FALSE(report({out}, refs, true).all_pass());
}

TEST(Report, ReferenceRulesAndFilters) {
  TempDir d("report-rules");
  const fs::path out = d.path() / "run";
  fs::create_directories(out);
  ExperimentSpec s;
  s.experiment = "coherence";
  s.variant = "ramsey";
  s.qubit = 3;
  std::ofstream(out / "summary.json") << json{{"spec", to_json(s)}, {"metrics", {{"t2_star_s", 5.0e-6}}}}.dump();
  const json refs = json::parse(R"({"checks": {"coherence": [
      {"metric": "t2_star_s", "reference": 4.8e-6, "rule": "rel", "tolerance": 0.10, "variant": "ramsey", "qubits": [3]},
      {"metric": "t2_star_s", "reference": 4.0e-6, "rule": "rel", "tolerance": 0.10, "variant": "ramsey", "qubits": [2]},
      {"metric": "t2_star_s", "reference": 4.0e-6, "rule": "rel", "tolerance": 0.10, "variant": "hahn"}
  ]}})");
  const Report r = report({out}, refs);
  ASSERT_EQ(r.lines.size(), 1u);
  EXPECT_TRUE(r.lines[0].pass);
  EXPECT_NEAR(r.lines[0].reference, 4.8e-6, 1e-18);
  const json strict = json::parse(R"({"checks": {"coherence": [
      {"metric": "t2_star_s", "reference": 4.0e-6, "rule": "rel", "tolerance": 0.10}]}})");
  EXPECT_FALSE(report({out}, strict).all_pass());
}

TEST(ReferenceValues, ShippedFileLoads) {
  const json refs = load_reference_values();
  EXPECT_TRUE(refs.contains("checks"));
  for (const auto& [experiment, checks] : refs.at("checks").items()) {
    EXPECT_TRUE(checks.is_array()) << experiment;
  }
}

TEST(Cli, ExitCodes) {
  TempDir d("cli");
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_NE(run_cli(""), 0);
  EXPECT_NE(run_cli("run"), 0);
  EXPECT_NE(run_cli("run tomo-cluster --mode parallel"), 0);
  EXPECT_NE(run_cli("run teleportation --out " + (d.path() / "x").string()), 0);
  EXPECT_NE(run_cli("run coherence --out " + (d.path() / "y").string()), 0);
  const std::string out = (d.path() / "tomo").string();
  EXPECT_EQ(run_cli("run tomo-cluster --noiseless --bootstrap 10 --out " + out), 0);
  EXPECT_TRUE(fs::exists(fs::path(out) / "summary.json"));
  EXPECT_EQ(run_cli("analyze tomo " + out + " --out " + (d.path() / "a.json").string()), 0);
  EXPECT_NEAR(read_json_file(d.path() / "a.json").at("metrics").at("mermin").get<double>(), 4.0, 1e-9);
  EXPECT_NE(run_cli("analyze tomo " + (d.path() / "missing").string()), 0);
  EXPECT_EQ(run_cli("circuit dump cluster3 --out " + (d.path() / "c.json").string()), 0);
  EXPECT_EQ(read_json_file(d.path() / "c.json").at("n_qubits"), 3);
  EXPECT_NE(run_cli("circuit dump cluster3 --setting 360"), 0);
}

TEST(Cli, FitSubcommand) {
  TempDir d("cli-fit");
  {
    std::ofstream f(d.path() / "ramsey.csv");
    f << "t,y\n";
    for (int i = 0; i < 30; ++i) {
      const double t = 15e-6 * i / 29;
      f << format_double(t) << "," << format_double(std::exp(-std::pow(t / 5e-6, 2))) << "\n";
    }
  }
  const fs::path out = d.path() / "fit.json";
  EXPECT_EQ(run_cli("fit ramsey " + (d.path() / "ramsey.csv").string() + " --out " + out.string()), 0);
  EXPECT_NEAR(read_json_file(out).at("params").at("t2_star").get<double>(), 5e-6, 1e-12);
  EXPECT_NE(run_cli("fit spline " + (d.path() / "ramsey.csv").string()), 0);
  EXPECT_NE(run_cli("fit ramsey " + (d.path() / "nothing.csv").string()), 0);
}
