#include "spinsim/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace spinsim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_xy(const std::vector<double>& x, const std::vector<double>& y, std::size_t min_points) {
  if (x.size() != y.size()) throw std::invalid_argument("x and y lengths differ");
  if (x.size() < min_points) {
    throw std::invalid_argument("need at least " + std::to_string(min_points) + " points");
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw std::invalid_argument("non-finite data");
  }
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

FitResult make_result(std::string model, std::vector<std::string> names, const LmOutcome& o) {
  FitResult r;
  r.model = std::move(model);
  r.names = std::move(names);
  r.values.assign(o.params.data(), o.params.data() + o.params.size());
  r.sigma.assign(o.sigma.data(), o.sigma.data() + o.sigma.size());
  r.residual_rms = o.residual_rms;
  r.converged = o.converged;
  r.iterations = o.iterations;
  return r;
}

double span_of(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi - *lo;
}

}  // namespace

double FitResult::param(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw std::invalid_argument("fit has no parameter '" + name + "'");
  return values[static_cast<std::size_t>(it - names.begin())];
}

double FitResult::error(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw std::invalid_argument("fit has no parameter '" + name + "'");
  return sigma[static_cast<std::size_t>(it - names.begin())];
}

nlohmann::json to_json(const FitResult& r) {
  nlohmann::json params = nlohmann::json::object(), sigma = nlohmann::json::object();
  for (std::size_t i = 0; i < r.names.size(); ++i) {
    params[r.names[i]] = r.values[i];
    sigma[r.names[i]] = i < r.sigma.size() ? r.sigma[i] : 0.0;
  }
  return {{"model", r.model},
          {"params", params},
          {"sigma", sigma},
          {"residual_rms", r.residual_rms},
          {"converged", r.converged}};
}

LmOutcome levenberg_marquardt(const ResidualFn& fn, Eigen::VectorXd p, int m, const LmOptions& opt) {
  const auto n = p.size();
  Eigen::VectorXd r(m), r_new(m);
  Eigen::MatrixXd jac(m, n), jac_new(m, n);
  fn(p, r, jac);
  double cost = 0.5 * r.squaredNorm();
  const double initial_cost = cost;
  double lambda = opt.initial_lambda;

  auto gradient_measure = [&](const Eigen::VectorXd& res, const Eigen::MatrixXd& j) {
    const double rn = res.norm();
    if (rn == 0.0) return 0.0;
    double g = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      const double cn = j.col(k).norm();
      if (cn > 0) g = std::max(g, std::abs(j.col(k).dot(res)) / (cn * rn));
    }
    return g;
  };

  LmOutcome out;
  bool stalled = false;
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    if (gradient_measure(r, jac) < opt.gradient_tol) break;
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd g = jac.transpose() * r;
    bool improved = false;
    bool tiny_step = false;
    for (int inner = 0; inner < 60; ++inner) {
      Eigen::MatrixXd a = jtj;
      for (Eigen::Index k = 0; k < n; ++k) a(k, k) += lambda * std::max(jtj(k, k), 1e-300);
      const Eigen::VectorXd step = a.ldlt().solve(-g);
      if (!step.allFinite()) {
        lambda *= 10;
        continue;
      }
      const Eigen::VectorXd trial = p + step;
      fn(trial, r_new, jac_new);
      const double c_new = r_new.allFinite() ? 0.5 * r_new.squaredNorm() : std::numeric_limits<double>::infinity();
      if (c_new <= cost) {
        tiny_step = step.norm() <= opt.step_tol * (p.norm() + opt.step_tol);
        p = trial;
        r = r_new;
        jac = jac_new;
        improved = c_new < cost;
        cost = c_new;
        lambda = std::max(lambda / 10, 1e-15);
        break;
      }
      lambda *= 10;
      if (lambda > 1e30) break;
    }
    if (!improved || tiny_step) {
      stalled = true;
      ++it;
      break;
    }
  }

  out.params = p;
  out.cost = cost;
  out.iterations = it;
  out.residual_rms = std::sqrt(2.0 * cost / m);
  out.gradient = gradient_measure(r, jac);
  // A step that cannot lower the cost means the minimum is resolved to rounding. Near an exact
  // fit the orthogonality measure is itself rounding noise, so the cost reduction decides there.
  const bool exact_fit = cost <= 1e-24 * initial_cost;
  out.converged = out.gradient < opt.gradient_tol ||
                  (stalled && (exact_fit || out.gradient < std::sqrt(opt.gradient_tol)));
  out.sigma = Eigen::VectorXd::Zero(n);
  if (m > n) {
    const double s2 = 2.0 * cost / static_cast<double>(m - n);
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    // Invert in units where every column has unit norm; parameters span many decades.
    Eigen::VectorXd d = jtj.diagonal().cwiseSqrt();
    for (Eigen::Index k = 0; k < n; ++k) d(k) = d(k) > 0 ? d(k) : 1.0;
    const Eigen::MatrixXd scaled = d.cwiseInverse().asDiagonal() * jtj * d.cwiseInverse().asDiagonal();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(scaled);
    if (lu.isInvertible()) {
      const Eigen::MatrixXd inv = lu.inverse();
      for (Eigen::Index k = 0; k < n; ++k) out.sigma(k) = std::sqrt(std::max(0.0, s2 * inv(k, k))) / d(k);
    }
  }
  return out;
}

double bloch_length(double x, double y, double z) { return std::sqrt(x * x + y * y + z * z); }

double bloch_length(const std::array<double, 6>& e) {
  for (double v : e) {
    if (!std::isfinite(v)) throw std::invalid_argument("missing axis expectation");
  }
  return bloch_length(0.5 * (e[0] - e[1]), 0.5 * (e[2] - e[3]), 0.5 * (e[4] - e[5]));
}

// ---------------------------------------------------------------------------------------------

FitResult fit_rabi(const std::vector<double>& t, const std::vector<double>& y) {
  check_xy(t, y, 8);
  const std::size_t m = t.size();
  const double span = span_of(t);
  if (!(span > 0)) throw std::invalid_argument("degenerate time grid");
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(m);
  double var = 0.0;
  for (double v : y) var += (v - mean) * (v - mean);
  var /= static_cast<double>(m);

  const std::vector<std::string> names = {"amplitude", "f_rabi", "t2_rabi", "phase", "offset"};
  if (var < 1e-20) {
    FitResult r;
    r.model = "rabi";
    r.names = names;
    r.values = {0.0, 0.0, 0.0, 0.0, mean};
    r.sigma.assign(5, 0.0);
    r.converged = false;
    return r;
  }

  // Periodogram peak of the mean-removed data seeds the frequency.
  const double f_max = 0.5 * static_cast<double>(m - 1) / span;
  const double df = 1.0 / (span * 20.0);
  double best_f = df, best_power = -1.0;
  for (double f = 0.5 / span; f <= f_max; f += df) {
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) acc += (y[i] - mean) * std::polar(1.0, -kTwoPi * f * t[i]);
    if (std::norm(acc) > best_power) {
      best_power = std::norm(acc);
      best_f = f;
    }
  }
  if (best_f * span < 2.0 - 1e-9) throw std::invalid_argument("data must span at least two oscillation periods");

  const auto residual = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd& jac) {
    const double a = p[0], f = p[1], tau = p[2], phi = p[3], c = p[4];
    for (std::size_t i = 0; i < m; ++i) {
      const double e = std::exp(-t[i] / tau);
      const double arg = kTwoPi * f * t[i] + phi;
      const double co = std::cos(arg), si = std::sin(arg);
      const auto k = static_cast<Eigen::Index>(i);
      r(k) = a * e * co + c - y[i];
      jac(k, 0) = e * co;
      jac(k, 1) = -a * e * si * kTwoPi * t[i];
      jac(k, 2) = a * e * co * t[i] / (tau * tau);
      jac(k, 3) = -a * e * si;
      jac(k, 4) = 1.0;
    }
  };

  const double amp0 = std::sqrt(2.0 * var);
  LmOutcome best;
  best.cost = std::numeric_limits<double>::infinity();
  for (double tau0 : {span, span / 4, 4 * span}) {
    for (int k = 0; k < 8; ++k) {
      Eigen::VectorXd p0(5);
      p0 << amp0, best_f, tau0, kTwoPi * k / 8.0, mean;
      LmOutcome o = levenberg_marquardt(residual, p0, static_cast<int>(m));
      if (o.cost < best.cost) best = o;
    }
  }
  // Canonical form: positive amplitude, positive decay time, phase in (-pi, pi].
  Eigen::VectorXd& p = best.params;
  if (p[1] < 0) {
    p[1] = -p[1];
    p[3] = -p[3];
  }
  if (p[0] < 0) {
    p[0] = -p[0];
    p[3] += std::numbers::pi;
  }
  p[3] = std::remainder(p[3], kTwoPi);
  FitResult r = make_result("rabi", names, best);
  if (p[2] <= 0) r.converged = false;
  return r;
}

namespace {

FitResult fit_stretched(const std::string& model, const std::string& time_name, const std::vector<double>& t,
                        const std::vector<double>& y, double exponent) {
  const bool free_p = std::isnan(exponent);
  check_xy(t, y, free_p ? 8 : 6);
  if (!free_p && !(exponent > 0)) throw std::invalid_argument("exponent must be positive");
  const std::size_t m = t.size();
  const double span = span_of(t);
  if (!(span > 0)) throw std::invalid_argument("degenerate time grid");

  std::vector<std::string> names = {time_name, "amplitude", "offset", "p"};
  const double y_range = span_of(y);
  if (y_range < 1e-9) {
    FitResult r;
    r.model = model;
    r.names = names;
    r.values = {std::numeric_limits<double>::infinity(), 0.0, y.front(), free_p ? 1.0 : exponent};
    r.sigma.assign(4, 0.0);
    r.converged = false;
    return r;
  }

  // Seeds: offset at the tail, amplitude from the head, time at the 1/e crossing.
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return t[a] < t[b]; });
  const double c0 = y[order.back()];
  const double a0 = y[order.front()] - c0;
  double tau0 = span / 2;
  for (std::size_t k = 1; k < m; ++k) {
    const double v0 = (y[order[k - 1]] - c0) / a0, v1 = (y[order[k]] - c0) / a0;
    if (v0 >= std::exp(-1.0) && v1 < std::exp(-1.0)) {
      const double w = (v0 - std::exp(-1.0)) / (v0 - v1);
      tau0 = t[order[k - 1]] + w * (t[order[k]] - t[order[k - 1]]);
      break;
    }
  }
  if (!(tau0 > 0)) tau0 = span / 2;

  const auto residual = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd& jac) {
    const double tau = p[0], a = p[1], c = p[2];
    const double pw = free_p ? p[3] : exponent;
    for (std::size_t i = 0; i < m; ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      const double x = std::abs(t[i] / tau);
      const double xp = t[i] == 0 ? 0.0 : std::pow(x, pw);
      const double e = std::exp(-xp);
      r(k) = a * e + c - y[i];
      jac(k, 0) = a * e * pw * xp / tau;
      jac(k, 1) = e;
      jac(k, 2) = 1.0;
      if (free_p) jac(k, 3) = x > 0 ? -a * e * xp * std::log(x) : 0.0;
    }
  };

  const int n = free_p ? 4 : 3;
  LmOutcome best;
  best.cost = std::numeric_limits<double>::infinity();
  for (double scale : {1.0, 0.5, 2.0}) {
    Eigen::VectorXd p0(n);
    p0[0] = tau0 * scale;
    p0[1] = a0;
    p0[2] = c0;
    if (free_p) p0[3] = 1.5;
    LmOutcome o = levenberg_marquardt(residual, p0, static_cast<int>(m));
    if (o.cost < best.cost) best = o;
  }
  best.params[0] = std::abs(best.params[0]);
  FitResult r;
  r.model = model;
  r.names = names;
  r.values = {best.params[0], best.params[1], best.params[2], free_p ? best.params[3] : exponent};
  r.sigma = {best.sigma[0], best.sigma[1], best.sigma[2], free_p ? best.sigma[3] : 0.0};
  r.residual_rms = best.residual_rms;
  r.converged = best.converged;
  r.iterations = best.iterations;
  return r;
}

}  // namespace

FitResult fit_ramsey(const std::vector<double>& t, const std::vector<double>& y) {
  FitResult r = fit_stretched("ramsey", "t2_star", t, y, 2.0);
  r.names.pop_back();
  r.values.pop_back();
  r.sigma.pop_back();
  return r;
}

FitResult fit_hahn(const std::vector<double>& t, const std::vector<double>& y, double exponent) {
  return fit_stretched("hahn", "t2_hahn", t, y, exponent);
}

FitResult fit_exchange(const std::vector<double>& dv, const std::vector<double>& j) {
  if (dv.size() != j.size()) throw std::invalid_argument("x and y lengths differ");
  for (double v : j) {
    if (!(v > 0)) throw std::invalid_argument("exchange values must be positive");
  }
  const std::vector<std::string> names = {"a", "b", "c", "decades_per_volt"};
  if (dv.size() == 2) {
    // Closed form for c = 0.
    const double b = std::log(j[1] / j[0]) / (dv[1] - dv[0]);
    const double a = j[0] * std::exp(-b * dv[0]);
    FitResult r;
    r.model = "exchange";
    r.names = names;
    r.values = {a, b, 0.0, b / std::log(10.0)};
    r.sigma.assign(4, 0.0);
    r.converged = std::isfinite(a) && std::isfinite(b);
    return r;
  }
  check_xy(dv, j, 5);
  const auto [jmin, jmax] = std::minmax_element(j.begin(), j.end());
  if (*jmax / *jmin < 10.0 - 1e-9) throw std::invalid_argument("exchange data must span at least one decade");
  const std::size_t m = dv.size();

  // Log-linear regression over the upper half seeds a and b.
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dv[a] < dv[b]; });
  const std::size_t half = m / 2;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double cnt = static_cast<double>(m - half);
  for (std::size_t k = half; k < m; ++k) {
    const double x = dv[order[k]], ly = std::log(j[order[k]]);
    sx += x;
    sy += ly;
    sxx += x * x;
    sxy += x * ly;
  }
  const double b0 = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  const double alpha0 = (sy - b0 * sx) / cnt;
  const double c0 = std::max(0.0, j[order.front()] - std::exp(alpha0 + b0 * dv[order.front()]));

  // Parameters (log a, b, sqrt c) keep a > 0 and c >= 0.
  const auto residual = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd& jac) {
    const double a = std::exp(p[0]), b = p[1], g = p[2];
    for (std::size_t i = 0; i < m; ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      const double e = a * std::exp(b * dv[i]);
      const double model = e + g * g;
      r(k) = std::log(model) - std::log(j[i]);
      jac(k, 0) = e / model;
      jac(k, 1) = e * dv[i] / model;
      jac(k, 2) = 2.0 * g / model;
    }
  };
  LmOutcome best;
  best.cost = std::numeric_limits<double>::infinity();
  for (double gscale : {1.0, 0.1}) {
    Eigen::VectorXd p0(3);
    p0 << alpha0, b0, std::sqrt(c0) * gscale + 1e-12;
    LmOutcome o = levenberg_marquardt(residual, p0, static_cast<int>(m));
    if (o.cost < best.cost) best = o;
  }
  const double a = std::exp(best.params[0]), b = best.params[1], c = best.params[2] * best.params[2];
  FitResult r;
  r.model = "exchange";
  r.names = names;
  r.values = {a, b, c, b / std::log(10.0)};
  r.sigma = {a * best.sigma[0], best.sigma[1], 2.0 * std::abs(best.params[2]) * best.sigma[2],
             best.sigma[1] / std::log(10.0)};
  r.residual_rms = best.residual_rms;
  // Exact data drive the residual to zero, where the orthogonality test is trivially met.
  r.converged = best.converged || best.residual_rms < 1e-12;
  r.iterations = best.iterations;
  return r;
}

// ---------------------------------------------------------------------------------------------

double mixture_misclassification(double mu1, double s1, double mu2, double s2, double w1, double t) {
  const double e1 = s1 > 0 ? 1.0 - normal_cdf((t - mu1) / s1) : (t < mu1 ? 1.0 : 0.0);
  const double e2 = s2 > 0 ? normal_cdf((t - mu2) / s2) : (t > mu2 ? 1.0 : 0.0);
  return w1 * e1 + (1.0 - w1) * e2;
}

double optimal_threshold(double mu1, double s1, double mu2, double s2, double w1) {
  double lo = mu1, hi = mu2;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = mixture_misclassification(mu1, s1, mu2, s2, w1, x1);
  double f2 = mixture_misclassification(mu1, s1, mu2, s2, w1, x2);
  for (int it = 0; it < 200 && hi - lo > 1e-14 * (1.0 + std::abs(lo)); ++it) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = mixture_misclassification(mu1, s1, mu2, s2, w1, x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = mixture_misclassification(mu1, s1, mu2, s2, w1, x2);
    }
  }
  return 0.5 * (lo + hi);
}

FitResult fit_bimodal(const std::vector<double>& centres, const std::vector<double>& counts) {
  if (centres.size() != counts.size()) throw std::invalid_argument("centres and counts lengths differ");
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  if (total < 1000) throw std::invalid_argument("bimodal fit needs at least 1000 samples");
  const std::size_t m = centres.size();

  // Seed with a two-means split.
  double lo = *std::min_element(centres.begin(), centres.end());
  double hi = *std::max_element(centres.begin(), centres.end());
  double mu1 = lo + 0.25 * (hi - lo), mu2 = lo + 0.75 * (hi - lo);
  for (int it = 0; it < 100; ++it) {
    double s1 = 0, n1 = 0, s2 = 0, n2 = 0;
    const double split = 0.5 * (mu1 + mu2);
    for (std::size_t i = 0; i < m; ++i) {
      if (centres[i] < split) {
        s1 += counts[i] * centres[i];
        n1 += counts[i];
      } else {
        s2 += counts[i] * centres[i];
        n2 += counts[i];
      }
    }
    if (n1 == 0 || n2 == 0) break;
    const double a = s1 / n1, b = s2 / n2;
    if (a == mu1 && b == mu2) break;
    mu1 = a;
    mu2 = b;
  }
  double w1 = 0.5, var1 = 0, var2 = 0, n1 = 0, n2 = 0;
  for (std::size_t i = 0; i < m; ++i) {
    if (centres[i] < 0.5 * (mu1 + mu2)) {
      var1 += counts[i] * (centres[i] - mu1) * (centres[i] - mu1);
      n1 += counts[i];
    } else {
      var2 += counts[i] * (centres[i] - mu2) * (centres[i] - mu2);
      n2 += counts[i];
    }
  }
  const double floor_var = 1e-12 * (hi - lo) * (hi - lo) + 1e-300;
  var1 = std::max(n1 > 0 ? var1 / n1 : 0.0, floor_var);
  var2 = std::max(n2 > 0 ? var2 / n2 : 0.0, floor_var);
  w1 = n1 / total;

  double prev_ll = -std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  for (; iterations < 2000; ++iterations) {
    double r1_sum = 0, r1_x = 0, r2_x = 0, ll = 0;
    std::vector<double> resp(m);
    const double norm1 = 1.0 / std::sqrt(kTwoPi * var1), norm2 = 1.0 / std::sqrt(kTwoPi * var2);
    for (std::size_t i = 0; i < m; ++i) {
      const double p1 = w1 * norm1 * std::exp(-0.5 * (centres[i] - mu1) * (centres[i] - mu1) / var1);
      const double p2 = (1 - w1) * norm2 * std::exp(-0.5 * (centres[i] - mu2) * (centres[i] - mu2) / var2);
      const double pt = p1 + p2;
      resp[i] = pt > 0 ? p1 / pt : (std::abs(centres[i] - mu1) < std::abs(centres[i] - mu2) ? 1.0 : 0.0);
      ll += counts[i] * std::log(std::max(pt, 1e-300));
      r1_sum += counts[i] * resp[i];
      r1_x += counts[i] * resp[i] * centres[i];
      r2_x += counts[i] * (1 - resp[i]) * centres[i];
    }
    const double r2_sum = total - r1_sum;
    if (r1_sum <= 0 || r2_sum <= 0) break;
    mu1 = r1_x / r1_sum;
    mu2 = r2_x / r2_sum;
    double v1 = 0, v2 = 0;
    for (std::size_t i = 0; i < m; ++i) {
      v1 += counts[i] * resp[i] * (centres[i] - mu1) * (centres[i] - mu1);
      v2 += counts[i] * (1 - resp[i]) * (centres[i] - mu2) * (centres[i] - mu2);
    }
    var1 = std::max(v1 / r1_sum, floor_var);
    var2 = std::max(v2 / r2_sum, floor_var);
    w1 = r1_sum / total;
    if (std::abs(ll - prev_ll) <= 1e-12 * std::abs(ll)) {
      converged = true;
      break;
    }
    prev_ll = ll;
  }

  double s1 = std::sqrt(var1), s2 = std::sqrt(var2);
  if (mu1 > mu2) {
    std::swap(mu1, mu2);
    std::swap(s1, s2);
    w1 = 1 - w1;
  }
  if (mu2 - mu1 < std::max(s1, s2)) throw std::invalid_argument("data are unimodal (mode separation below 1 sigma)");
  const double snr = (mu2 - mu1) / (0.5 * (s1 + s2));
  const double thr = optimal_threshold(mu1, s1, mu2, s2, w1);
  const double fid = 1.0 - mixture_misclassification(mu1, s1, mu2, s2, w1, thr);

  FitResult r;
  r.model = "bimodal";
  r.names = {"mu1", "mu2", "sigma1", "sigma2", "weight", "snr", "best_threshold", "charge_fidelity"};
  r.values = {mu1, mu2, s1, s2, w1, snr, thr, fid};
  // Large-sample standard errors of the component moments.
  const double n1e = w1 * total, n2e = (1 - w1) * total;
  r.sigma = {s1 / std::sqrt(n1e), s2 / std::sqrt(n2e), s1 / std::sqrt(2 * n1e), s2 / std::sqrt(2 * n2e),
             std::sqrt(w1 * (1 - w1) / total), 0.0, 0.0, 0.0};
  r.converged = converged;
  r.iterations = iterations;
  return r;
}

FitResult fit_bimodal(const std::vector<double>& samples) {
  return fit_bimodal(samples, std::vector<double>(samples.size(), 1.0));
}

}  // namespace spinsim
