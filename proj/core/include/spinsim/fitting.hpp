#pragma once

// Least-squares fits for the decay, exchange and readout-histogram models.

#include <array>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

namespace spinsim {

struct FitResult {
  std::string model;
  std::vector<std::string> names;
  std::vector<double> values;
  std::vector<double> sigma;  // 1-sigma from the residual-scaled covariance
  double residual_rms = 0.0;
  bool converged = false;
  int iterations = 0;

  double param(const std::string& name) const;
  double error(const std::string& name) const;
};

nlohmann::json to_json(const FitResult& r);

struct LmOptions {
  int max_iterations = 500;
  double gradient_tol = 1e-8;
  double step_tol = 1e-14;
  double initial_lambda = 1e-3;
};

/// Residuals r(p) and Jacobian dr/dp for a parameter vector.
using ResidualFn = std::function<void(const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd& jac)>;

struct LmOutcome {
  Eigen::VectorXd params;
  Eigen::VectorXd sigma;
  double cost = 0.0;  // 0.5 * |r|^2
  double residual_rms = 0.0;
  double gradient = 0.0;  // max_i |J_i . r| / (|J_i| |r|)
  bool converged = false;
  int iterations = 0;
};

/// Levenberg-Marquardt with Marquardt diagonal scaling. Converged means the residual is
/// orthogonal to every Jacobian column to within gradient_tol.
LmOutcome levenberg_marquardt(const ResidualFn& fn, Eigen::VectorXd p0, int n_residuals, const LmOptions& opt = {});

/// Bloch length from <Z> after projections onto +X, -X, +Y, -Y, +Z, -Z.
double bloch_length(const std::array<double, 6>& six_axis);
double bloch_length(double x, double y, double z);

/// A exp(-t/T) cos(2 pi f t + phi) + c. Params f_rabi, t2_rabi, amplitude, phase, offset.
FitResult fit_rabi(const std::vector<double>& t, const std::vector<double>& y);

/// A exp(-(t/T)^2) + c. Params t2_star, amplitude, offset.
FitResult fit_ramsey(const std::vector<double>& t, const std::vector<double>& y);

/// A exp(-(t/T)^p) + c with p fixed, or free when `exponent` is NaN. Params t2_hahn, amplitude, offset, p.
FitResult fit_hahn(const std::vector<double>& t, const std::vector<double>& y, double exponent = 1.0);

/// J = a exp(b dv) + c fitted to log J. Params a, b, c, decades_per_volt.
FitResult fit_exchange(const std::vector<double>& dv, const std::vector<double>& j);

/// Two-Gaussian mixture by expectation-maximisation. Params mu1 < mu2, sigma1, sigma2,
/// weight (of mode 1), snr, best_threshold, charge_fidelity.
FitResult fit_bimodal(const std::vector<double>& samples);
/// Histogram form: bin centres with counts.
FitResult fit_bimodal(const std::vector<double>& centres, const std::vector<double>& counts);

/// Misclassification of a two-Gaussian mixture at threshold t (mu1 < mu2).
double mixture_misclassification(double mu1, double s1, double mu2, double s2, double w1, double t);

/// Threshold minimising the misclassification between mu1 and mu2.
double optimal_threshold(double mu1, double s1, double mu2, double s2, double w1);

}  // namespace spinsim
