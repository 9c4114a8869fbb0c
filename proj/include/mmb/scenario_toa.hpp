// SPDX-License-Identifier: Apache-2.0
//
// Time-of-arrival estimation with a mismatched pulse width.
//
// Data x = h(tau, T) + v, v ~ N(0, sigma^2 I_M), with a sampled Gaussian pulse
// h_m(tau, T) = exp(-((t_m - tau) / T)^2). The true width is T_P, the
// estimator assumes T_Q and picks the least-squares (ML under Q) delay on a
// search grid, refined by one parabolic step.
//
// Units: times in microseconds; SNR = 1 / sigma^2 (unit peak amplitude),
// expressed in dB as 10 log10.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmb/divergence.hpp"
#include "mmb/mismatch_bounds.hpp"
#include "mmb/sim_engine.hpp"

namespace mmb::toa {

// Sample instants t_m = (m - floor(M/2)) * Ts, m = 0..M-1, so the
// observation window is centred on the origin.
struct SampleGrid {
  int m = 2000;
  double ts_us = 1e-2;

  double time(int i) const { return (i - m / 2) * ts_us; }
  double window_lo() const { return time(0); }
  double window_hi() const { return time(m - 1); }
};

// n evenly spaced points from lo to hi inclusive
inline std::vector<double> linear_grid(double lo, double hi, int n) {
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
  return g;
}

struct ToaConfig {
  int m_samples = 2000;
  double ts_us = 1e-2;
  double tp_true_us = 2.0;
  double tq_assumed_us = 2.2;
  double tau_lo_us = -5.0;
  double tau_hi_us = 5.0;
  std::vector<double> snr_grid_db = linear_grid(-29.0, -9.0, 10);
  std::size_t trials_per_snr = 2000;
  double grid_step_us = 1e-2;
  std::uint64_t seed = 1;

  SampleGrid samples() const { return {m_samples, ts_us}; }

  // Ts = 10 ns, T_P = 2 us, T_Q = 1.1 T_P, M = 2000, tau ~ U(-5, 5) us
  static ToaConfig full_profile() { return ToaConfig{}; }

  // Same 20 us window and pulse shapes sampled 4x coarser. The SNR grid is
  // shifted by +6 dB so the per-pulse energy-to-noise ratios match the full
  // profile.
  static ToaConfig fast_profile() {
    ToaConfig c;
    c.m_samples = 500;
    c.ts_us = 4e-2;
    c.grid_step_us = 4e-2;
    c.trials_per_snr = 2000;
    c.snr_grid_db = linear_grid(-23.0, -3.0, 10);
    return c;
  }

  void validate() const {
    if (m_samples < 2) throw std::invalid_argument("ToaConfig: need at least 2 samples");
    if (!(ts_us > 0.0) || !(tp_true_us > 0.0) || !(tq_assumed_us > 0.0))
      throw std::invalid_argument("ToaConfig: sampling period and pulse widths must be positive");
    if (!(tau_hi_us > tau_lo_us)) throw std::invalid_argument("ToaConfig: empty tau range");
    if (!(grid_step_us > 0.0)) throw std::invalid_argument("ToaConfig: grid step must be positive");
    if (snr_grid_db.empty()) throw std::invalid_argument("ToaConfig: empty SNR grid");
    for (std::size_t i = 1; i < snr_grid_db.size(); ++i) {
      if (!(snr_grid_db[i] > snr_grid_db[i - 1]))
        throw std::invalid_argument("ToaConfig: SNR grid must be strictly ascending");
    }
    if (trials_per_snr < 100) throw std::invalid_argument("insufficient trials");
  }
};

inline double noise_variance(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

inline std::vector<double> pulse(double tau, double width, const SampleGrid& g) {
  std::vector<double> h(static_cast<std::size_t>(g.m));
  for (int i = 0; i < g.m; ++i) {
    const double u = (g.time(i) - tau) / width;
    h[static_cast<std::size_t>(i)] = std::exp(-u * u);
  }
  return h;
}

struct PulseDerivatives {
  std::vector<double> first;   // d h / d tau
  std::vector<double> second;  // d^2 h / d tau^2
};

inline PulseDerivatives pulse_derivs(double tau, double width, const SampleGrid& g) {
  PulseDerivatives d{std::vector<double>(static_cast<std::size_t>(g.m)),
                     std::vector<double>(static_cast<std::size_t>(g.m))};
  const double w2 = width * width;
  for (int i = 0; i < g.m; ++i) {
    const double dt = g.time(i) - tau;
    const double h = std::exp(-dt * dt / w2);
    d.first[static_cast<std::size_t>(i)] = 2.0 * dt / w2 * h;
    d.second[static_cast<std::size_t>(i)] = (4.0 * dt * dt / (w2 * w2) - 2.0 / w2) * h;
  }
  return d;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// lo, lo + step, ... up to hi (inclusive within rounding)
inline std::vector<double> tau_search_grid(double lo, double hi, double step) {
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = lo + static_cast<double>(i) * step;
  return g;
}

// Vertex of the parabola through three points; returns x1 when degenerate
// or when the parabola opens upward.
inline double parabolic_peak(double x0, double y0, double x1, double y1, double x2, double y2) {
  const double a = (x1 - x0) * (y1 - y2);
  const double b = (x1 - x2) * (y1 - y0);
  const double den = a - b;
  if (den == 0.0) return x1;
  const double curvature = (y2 - y1) / (x2 - x1) - (y1 - y0) / (x1 - x0);
  if (!(curvature < 0.0)) return x1;
  return x1 - 0.5 * ((x1 - x0) * a - (x1 - x2) * b) / den;
}

// Least-squares delay estimator under the presumed width: maximizes
// x^T h(tau') - |h(tau')|^2 / 2 over the search grid, then takes one
// parabolic step through the best point and its neighbours (skipped at
// the grid edges). Ties resolve to the smaller delay.
class CrossCorrelationEstimator {
 public:
  CrossCorrelationEstimator(std::vector<double> tau_grid, double width, const SampleGrid& samples)
      : grid_(std::move(tau_grid)), m_(static_cast<std::size_t>(samples.m)) {
    if (grid_.empty()) throw std::invalid_argument("CrossCorrelationEstimator: empty search grid");
    for (std::size_t i = 1; i < grid_.size(); ++i) {
      if (!(grid_[i] > grid_[i - 1]))
        throw std::invalid_argument("CrossCorrelationEstimator: search grid must be ascending");
    }
    templates_.reserve(grid_.size() * m_);
    half_energy_.reserve(grid_.size());
    for (double tau : grid_) {
      const auto h = pulse(tau, width, samples);
      templates_.insert(templates_.end(), h.begin(), h.end());
      half_energy_.push_back(0.5 * dot(h, h));
    }
  }

  const std::vector<double>& grid() const { return grid_; }

  double objective(std::span<const double> x, std::size_t k) const {
    return dot(x, std::span<const double>(templates_.data() + k * m_, m_)) - half_energy_[k];
  }

  double operator()(std::span<const double> x) const {
    if (x.size() != m_) throw std::invalid_argument("CrossCorrelationEstimator: data length mismatch");
    std::size_t best = 0;
    double best_val = objective(x, 0);
    for (std::size_t k = 1; k < grid_.size(); ++k) {
      const double v = objective(x, k);
      if (v > best_val) {
        best_val = v;
        best = k;
      }
    }
    if (best == 0 || best + 1 == grid_.size()) return grid_[best];
    return parabolic_peak(grid_[best - 1], objective(x, best - 1), grid_[best], best_val,
                          grid_[best + 1], objective(x, best + 1));
  }

 private:
  std::vector<double> grid_;
  std::size_t m_;
  std::vector<double> templates_;  // row k holds h(grid_[k], width)
  std::vector<double> half_energy_;
};

inline double cce_estimate(std::span<const double> x, double tq, const std::vector<double>& tau_grid,
                           const SampleGrid& samples) {
  return CrossCorrelationEstimator(tau_grid, tq, samples)(x);
}

// argmin over tau' of |h(tau, T_P) - h(tau', T_Q)|^2: grid search on
// tau +- 3 max(T_P, T_Q) at step Ts, then Newton on the stationarity
// condition r^T dh(tau') = 0.
inline double pseudo_true_tau(double tau, const ToaConfig& cfg) {
  cfg.validate();
  const SampleGrid g = cfg.samples();
  const auto hp = pulse(tau, cfg.tp_true_us, g);
  auto cost = [&](double t) {
    const auto hq = pulse(t, cfg.tq_assumed_us, g);
    double s = 0.0;
    for (std::size_t i = 0; i < hp.size(); ++i) {
      const double r = hp[i] - hq[i];
      s += r * r;
    }
    return s;
  };
  const double reach = 3.0 * std::max(cfg.tp_true_us, cfg.tq_assumed_us);
  double best = tau;
  double best_cost = cost(tau);
  for (double t = tau - reach; t <= tau + reach; t += cfg.ts_us) {
    const double c = cost(t);
    if (c < best_cost) {
      best_cost = c;
      best = t;
    }
  }
  double t = best;
  for (int it = 0; it < 60; ++it) {
    const auto hq = pulse(t, cfg.tq_assumed_us, g);
    const auto d = pulse_derivs(t, cfg.tq_assumed_us, g);
    double grad = 0.0, curv = 0.0;
    for (std::size_t i = 0; i < hp.size(); ++i) {
      const double r = hp[i] - hq[i];
      grad -= r * d.first[i];
      curv += d.first[i] * d.first[i] - r * d.second[i];
    }
    if (!(curv > 0.0)) break;
    const double step = std::clamp(-grad / curv, -cfg.ts_us, cfg.ts_us);
    t += step;
    if (std::abs(step) <= 1e-14 * std::max(1.0, std::abs(t))) break;
  }
  return t;
}

struct McrbResult {
  double value = 0.0;      // variance about the pseudo-true delay plus squared bias (us^2)
  double pseudo_true = 0.0;
  double a = 0.0;          // (r^T d2h - dh^T dh) / sigma^2
  double b = 0.0;          // dh^T dh / sigma^2
};

// Misspecified CRB for the delay (sandwich form):
//   r = h(tau, T_P) - h(tau0, T_Q), A = (r^T d2h - dh^T dh) / s2, B = dh^T dh / s2,
//   MCRB = B / A^2 + (tau0 - tau)^2, derivatives taken at tau0 with width T_Q.
inline McrbResult mcrb_detail(double tau, double sigma2, const ToaConfig& cfg) {
  const SampleGrid g = cfg.samples();
  McrbResult out;
  out.pseudo_true = pseudo_true_tau(tau, cfg);
  const auto hp = pulse(tau, cfg.tp_true_us, g);
  const auto hq = pulse(out.pseudo_true, cfg.tq_assumed_us, g);
  const auto d = pulse_derivs(out.pseudo_true, cfg.tq_assumed_us, g);
  double r_d2 = 0.0;
  for (std::size_t i = 0; i < hp.size(); ++i) r_d2 += (hp[i] - hq[i]) * d.second[i];
  const double fisher = dot(d.first, d.first);
  out.a = (r_d2 - fisher) / sigma2;
  out.b = fisher / sigma2;
  if (std::abs(out.a) < 1e-12 * out.b) throw std::domain_error("degenerate curvature");
  const double bias = out.pseudo_true - tau;
  out.value = out.b / (out.a * out.a) + bias * bias;
  return out;
}

inline double mcrb(double tau, double sigma2, const ToaConfig& cfg) { return mcrb_detail(tau, sigma2, cfg).value; }

// exp(|h(tau, T_P) - h(tau, T_Q)|^2 / sigma^2) - 1
inline DivergenceEstimate chi2_toa_data_level(double tau, const ToaConfig& cfg, double sigma2) {
  const SampleGrid g = cfg.samples();
  return chi2_iso_gaussian_equal_cov(pulse(tau, cfg.tp_true_us, g), pulse(tau, cfg.tq_assumed_us, g), sigma2);
}

// Squared delay errors of the T_Q-designed estimator with data generated
// under P (width T_P) or Q (width T_Q). The delay is drawn uniformly on the
// tau range in every trial.
inline ErrorSampleSet simulate_toa_errors(const ToaConfig& cfg, const CrossCorrelationEstimator& est,
                                          double snr_db, Law law, std::uint64_t seed, unsigned workers) {
  const SampleGrid g = cfg.samples();
  const double width = law == Law::under_P ? cfg.tp_true_us : cfg.tq_assumed_us;
  const double noise_sd = std::sqrt(noise_variance(snr_db));
  auto truth = [&](Engine& eng) {
    return std::uniform_real_distribution<double>(cfg.tau_lo_us, cfg.tau_hi_us)(eng);
  };
  auto data = [&](double tau, Engine& eng) {
    std::normal_distribution<double> nd(0.0, noise_sd);
    auto x = pulse(tau, width, g);
    for (auto& v : x) v += nd(eng);
    return x;
  };
  auto estimator = [&](const std::vector<double>& x) { return est(x); };
  TrialOptions opt;
  opt.trials = cfg.trials_per_snr;
  opt.seed = seed;
  opt.workers = workers;
  opt.law = law;
  opt.label = std::string("toa/") + to_string(law);
  return run_trials(truth, data, estimator, opt);
}

inline CrossCorrelationEstimator make_estimator(const ToaConfig& cfg) {
  return CrossCorrelationEstimator(tau_search_grid(cfg.tau_lo_us, cfg.tau_hi_us, cfg.grid_step_us),
                                   cfg.tq_assumed_us, cfg.samples());
}

// Stream seed for the run at SNR index i under `law`.
inline std::uint64_t run_seed(std::uint64_t base, Law law, std::size_t snr_index) {
  return derive_seed(base, std::string("toa/run/") + to_string(law), snr_index);
}

struct ToaRecord {
  double snr_db = 0.0;
  double sigma2 = 0.0;
  SummaryStats under_p;
  SummaryStats under_q;
  DivergenceEstimate chi2_hat;
  BoundReport bound;  // refined_lower and mcrb are filled in

  double rmse_p() const { return std::sqrt(under_p.mean); }
  double rmse_q() const { return std::sqrt(under_q.mean); }
};

struct ToaExperiment {
  ToaConfig config;
  double mcrb_tau = 0.0;  // representative delay used for the MCRB
  std::vector<ToaRecord> records;
};

inline ToaExperiment run_toa_experiment(const ToaConfig& cfg, unsigned workers = 1) {
  cfg.validate();
  const auto est = make_estimator(cfg);
  ToaExperiment out{cfg, 0.5 * (cfg.tau_lo_us + cfg.tau_hi_us), {}};
  std::vector<double> raw_lb;
  for (std::size_t i = 0; i < cfg.snr_grid_db.size(); ++i) {
    ToaRecord rec;
    rec.snr_db = cfg.snr_grid_db[i];
    rec.sigma2 = noise_variance(rec.snr_db);
    const auto ep = simulate_toa_errors(cfg, est, rec.snr_db, Law::under_P, run_seed(cfg.seed, Law::under_P, i), workers);
    const auto eq = simulate_toa_errors(cfg, est, rec.snr_db, Law::under_Q, run_seed(cfg.seed, Law::under_Q, i), workers);
    rec.under_p = summarize(ep);
    rec.under_q = summarize(eq);
    rec.chi2_hat = chi2_partition_estimate(ep.values, eq.values);
    rec.bound = bilateral_bound(rec.under_q.mean, rec.under_q.variance, rec.chi2_hat.value);
    rec.bound.mcrb = mcrb(out.mcrb_tau, rec.sigma2, cfg);
    raw_lb.push_back(rec.bound.lower);
    out.records.push_back(std::move(rec));
  }
  const auto refined = refine_lower_bound_monotone(cfg.snr_grid_db, raw_lb);
  for (std::size_t i = 0; i < refined.size(); ++i) out.records[i].bound.refined_lower = refined[i];
  return out;
}

}  // namespace mmb::toa
