#pragma once

// Three-qubit Pauli tomography from parity counts.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "spinsim/circuits.hpp"
#include "spinsim/qcore.hpp"
#include "spinsim/simulator.hpp"

namespace spinsim {

/// The 64 three-qubit Pauli expectations indexed by PauliString::index(), <III> = 1.
struct ExpectationSet {
  std::array<double, 64> value{};
  std::array<double, 64> weight{};  // pooled shot count behind each entry

  ExpectationSet();

  double operator[](const PauliString& p) const { return value[static_cast<std::size_t>(p.index())]; }
  double at(const std::string& label) const;
  bool complete() const;

  /// Exact expectations of a three-qubit state, unit weight.
  static ExpectationSet exact(const DensityMatrix& rho);
};

/// Outcome counts of one setting, index 2 * parity12 + parity34 (0 even, 1 odd).
using SettingCounts = std::array<double, 4>;

/// Tallies classified parities per setting id.
std::vector<SettingCounts> count_records(const std::vector<ShotRecord>& records, std::size_t n_settings);

/// One Pauli string fed by a setting: its index, the readout product used, and the sign.
struct Contribution {
  int string_index = 0;
  bool uses_z2 = false;
  bool uses_z34 = false;
  int sign = 1;
};

/// The three strings a setting measures: Q2 alone, the Q3-Q4 part, and their product.
std::array<Contribution, 3> setting_contributions(const ProjectionSetting& s);

/// Shot-weighted pooling of the per-setting eigenvalue averages. Throws if a string is uncovered.
ExpectationSet estimate_expectations(const std::vector<SettingCounts>& counts,
                                     const std::vector<ProjectionSetting>& settings);

/// rho = (1/8) sum_P <P> P.
DensityMatrix linear_inversion(const ExpectationSet& e);

/// Conjugation by sqrt(X) x I x sqrt(X).
DensityMatrix ghz_frame(const DensityMatrix& rho);
ExpectationSet ghz_frame(const ExpectationSet& e);

/// Signed image of a Pauli string under the frame change: U P U^dagger = sign * image.
std::pair<PauliString, int> ghz_frame_image(const PauliString& p);

enum class MerminVariant { Ghz, Cluster, ClusterPrime };

std::string to_string(MerminVariant v);
MerminVariant mermin_variant_from_string(const std::string& s);

/// Labels and signs of the four terms.
std::array<std::pair<std::string, int>, 4> mermin_terms(MerminVariant v);

double mermin(const ExpectationSet& e, MerminVariant v);

/// Largest value of the four-term combination over deterministic local assignments.
double lhv_bound(MerminVariant v);

/// Bloch-vector contraction sqrt((Tr rho0^2 - 1/d) / (1 - 1/d)).
double spam_lambda(const DensityMatrix& rho0);

struct SpamCorrection {
  double lambda = 1.0;
  ExpectationSet corrected;
  bool exceeds_unit = false;  // some corrected |<P>| > 1, left unclamped
};

/// Divides every non-identity expectation by lambda of the reference state.
SpamCorrection spam_correct(const ExpectationSet& e, const DensityMatrix& rho0);
SpamCorrection spam_correct(const ExpectationSet& e, double lambda);

/// Eigenvalue clipping at zero followed by trace renormalisation.
DensityMatrix nearest_psd(const DensityMatrix& rho);

struct TomographyOptions {
  int bootstrap_resamples = 1000;
  std::uint64_t bootstrap_seed = 0;
  bool project_psd = false;
  std::optional<double> spam_lambda;  // applied to expectations before reconstruction
};

struct TomographyResult {
  ExpectationSet expectations;
  DensityMatrix raw_rho;
  double fidelity = 0.0;
  double mermin = 0.0;
  MerminVariant variant = MerminVariant::Cluster;
  double fidelity_sigma = 0.0;
  double mermin_sigma = 0.0;
  double lambda = 1.0;
  bool spam_corrected = false;
  bool exceeds_unit = false;
  bool psd_projected = false;
  double min_eigenvalue = 0.0;
};

/// Estimation, optional SPAM correction, inversion, fidelity to `target` and Mermin value,
/// with bootstrap 1-sigma errors from per-setting multinomial resampling.
TomographyResult analyze_tomography(const std::vector<SettingCounts>& counts,
                                    const std::vector<ProjectionSetting>& settings, const CVector& target,
                                    MerminVariant variant, const TomographyOptions& options = {});

nlohmann::json to_json(const ExpectationSet& e);
nlohmann::json to_json(const TomographyResult& r);

}  // namespace spinsim
