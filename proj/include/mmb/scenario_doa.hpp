// SPDX-License-Identifier: Apache-2.0
//
// Bayesian single-input multi-sensor receiver with a mismatched direction of
// arrival. The symbol s ~ N(0, 1) is received as x = a(phi) s + v with
// v ~ N(0, I / snr) and estimated by the linear MMSE rule built for phi_assumed:
//
//   s_hat = snr / (1 + snr) * a(phi_assumed)^T x
//
// The error is Gaussian under both the presumed (matched) and true models,
// so MSE_Q, MSE_P, chi2 and the upper bound all have closed forms that
// depend on the angles only through rho = a(phi)^T a(phi_assumed).

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "mmb/divergence.hpp"
#include "mmb/mismatch_bounds.hpp"
#include "mmb/sim_engine.hpp"

namespace mmb::doa {

// How the mismatched-MSE inflation factor is evaluated.
//  exact:        1 + 2(1-rho) snr/(1+snr) + (snr(1-rho))^2/(1+snr), the MSE of the rule above.
//  conservative: 3 - 2 rho + (snr(1-rho))^2/(1+snr), larger than exact by 2(1-rho)/(1+snr).
enum class InflationForm { exact, conservative };

struct DoaConfig {
  int m_sensors = 8;
  double phi_true_deg = 55.0;
  double phi_assumed_deg = 55.0;
  double snr = 10.0;  // linear
  InflationForm inflation = InflationForm::exact;

  void validate() const {
    if (m_sensors < 1) throw std::invalid_argument("DoaConfig: need at least one sensor");
    auto in_range = [](double a) { return a >= 0.0 && a < 180.0; };
    if (!in_range(phi_true_deg) || !in_range(phi_assumed_deg))
      throw std::invalid_argument("DoaConfig: angles must lie in [0, 180) degrees");
    if (!(snr > 0.0) || !std::isfinite(snr)) throw std::invalid_argument("DoaConfig: snr must be positive");
  }
};

// Normalized sampled-cosine response: a_m ~ cos(pi (m-1) cos phi).
inline std::vector<double> steering(double phi_deg, int m_sensors) {
  if (m_sensors < 1) throw std::invalid_argument("steering: need at least one sensor");
  const double c = std::cos(phi_deg * std::numbers::pi / 180.0);
  std::vector<double> a(static_cast<std::size_t>(m_sensors));
  double norm2 = 0.0;
  for (int m = 0; m < m_sensors; ++m) {
    a[static_cast<std::size_t>(m)] = std::cos(std::numbers::pi * m * c);
    norm2 += a[static_cast<std::size_t>(m)] * a[static_cast<std::size_t>(m)];
  }
  // a_1 = 1, so the norm is at least 1
  const double inv = 1.0 / std::sqrt(norm2);
  for (auto& v : a) v *= inv;
  return a;
}

inline double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  double r = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) r += a[i] * b[i];
  return r;
}

struct DoaClosedForms {
  double rho = 1.0;
  double inflation = 1.0;  // MSE_P / MSE_Q >= 1
  double mse_q = 0.0;
  double gamma2 = 1.0;     // MSE_Q / MSE_P
  double mse_p = 0.0;
  double chi2 = 0.0;       // +inf when gamma2 <= 1/2
  double upper = 0.0;      // +inf when chi2 is
};

inline double inflation_factor(double rho, double snr, InflationForm form) {
  const double u = 1.0 - rho;
  const double quad = (snr * u) * (snr * u) / (1.0 + snr);
  if (form == InflationForm::conservative) return 3.0 - 2.0 * rho + quad;
  return 1.0 + 2.0 * u * snr / (1.0 + snr) + quad;
}

inline DoaClosedForms closed_forms_from_rho(double rho, double snr, InflationForm form) {
  DoaClosedForms out;
  out.rho = rho;
  out.mse_q = 1.0 / (1.0 + snr);
  out.inflation = inflation_factor(rho, snr, form);
  out.gamma2 = 1.0 / out.inflation;
  out.mse_p = out.inflation * out.mse_q;
  // error laws are P = N(0, mse_p), Q = N(0, mse_q), and Var_Q(e^2) = 2 mse_q^2
  out.chi2 = chi2_scalar_gaussian(ScalarGaussian(0.0, out.mse_p), ScalarGaussian(0.0, out.mse_q)).value;
  out.upper = bilateral_bound(out.mse_q, 2.0 * out.mse_q * out.mse_q, out.chi2).upper;
  return out;
}

inline DoaClosedForms doa_closed_forms(const DoaConfig& cfg) {
  cfg.validate();
  const auto a = steering(cfg.phi_true_deg, cfg.m_sensors);
  const double rho = cfg.phi_true_deg == cfg.phi_assumed_deg
                         ? 1.0
                         : correlation(a, steering(cfg.phi_assumed_deg, cfg.m_sensors));
  return closed_forms_from_rho(rho, cfg.snr, cfg.inflation);
}

struct DoaSimulation {
  ErrorSampleSet errors;  // squared errors under the true model
  SummaryStats summary;
};

// Monte-Carlo MSE of the mismatched receiver. Trial t always consumes the
// stream (seed, "doa", t), so runs at different angles share random numbers.
inline DoaSimulation simulate_doa(const DoaConfig& cfg, std::size_t trials, std::uint64_t seed,
                                  unsigned workers = 1) {
  cfg.validate();
  if (trials < 100) throw std::invalid_argument("insufficient trials");
  const auto a_true = steering(cfg.phi_true_deg, cfg.m_sensors);
  const auto a_assumed = steering(cfg.phi_assumed_deg, cfg.m_sensors);
  const double gain = cfg.snr / (1.0 + cfg.snr);
  const double noise_sd = 1.0 / std::sqrt(cfg.snr);

  auto truth = [](Engine& eng) { return std::normal_distribution<double>(0.0, 1.0)(eng); };
  auto data = [&](double s, Engine& eng) {
    std::normal_distribution<double> nd(0.0, noise_sd);
    std::vector<double> x(a_true.size());
    for (std::size_t m = 0; m < x.size(); ++m) x[m] = a_true[m] * s + nd(eng);
    return x;
  };
  auto estimator = [&](const std::vector<double>& x) { return gain * correlation(a_assumed, x); };

  TrialOptions opt;
  opt.trials = trials;
  opt.seed = seed;
  opt.workers = workers;
  opt.law = Law::under_P;
  opt.label = "doa";
  DoaSimulation out;
  out.errors = run_trials(truth, data, estimator, opt);
  out.summary = summarize(out.errors);
  return out;
}

}  // namespace mmb::doa
