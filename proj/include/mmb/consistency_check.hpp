// SPDX-License-Identifier: Apache-2.0
//
// MSE-consistency check for the Gaussian location MLE (the sample mean) when
// the noise is not Gaussian. With P_bar the exact law of the sample mean of N
// noise draws and Q_bar = N(q_mean, q_var / N) the presumed one, the bound
//
//   MSE_P(N) <= q_var / N + sqrt(2 q_var^2 / N^2 * chi2(P_bar || Q_bar))
//
// tends to zero whenever chi2(P_bar || Q_bar) grows slower than N^2.

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
#include "mmb/stats_models.hpp"

namespace mmb {

inline DivergenceEstimate chi2_bar(const GaussianMixture1D& noise, double q_mean, double q_var, int n,
                                   const Chi2QuadratureOptions& opt = {}) {
  if (!(q_var > 0.0)) throw std::invalid_argument("chi2_bar: q_var must be positive");
  const GaussianMixture1D p_bar = sample_mean_law(noise, n);
  const ScalarGaussian q_bar(q_mean, q_var / n);
  if (!(2.0 * q_bar.var() > p_bar.max_var())) {
    DivergenceEstimate out;
    out.value = kInf;
    out.method = DivergenceMethod::quadrature;
    out.diagnostics.note = "component variance of the sample-mean law is at least 2 q_var / N";
    return out;
  }
  if (p_bar.components() == 1)
    return chi2_scalar_gaussian(ScalarGaussian(p_bar.means()[0], p_bar.vars()[0]), q_bar);
  return chi2_quadrature(p_bar, q_bar, opt);
}

// Values at or below this count as zero divergence.
inline constexpr double kChi2Zero = 1e-14;

struct GrowthFit {
  double exponent = 0.0;
  bool condition_met = true;
};

// Least-squares slope of log chi2 against log N over the last `tail_points`
// grid points (all of them when tail_points is 0). An infinite value anywhere
// gives exponent +inf. Zero values are left out of the fit; a tail with fewer
// than two positive values has exponent 0.
inline GrowthFit growth_exponent(std::span<const int> n_grid, std::span<const double> chi2_values,
                                 std::size_t tail_points = 4) {
  if (n_grid.size() != chi2_values.size()) throw std::invalid_argument("growth_exponent: length mismatch");
  if (n_grid.size() < 4) throw std::invalid_argument("growth_exponent: need at least 4 grid points");
  for (double c : chi2_values) {
    if (std::isnan(c) || c < 0.0) throw std::invalid_argument("growth_exponent: chi2 values must be nonnegative");
    if (std::isinf(c)) return {kInf, false};
  }
  const std::size_t first = tail_points == 0 ? 0 : n_grid.size() - std::min(tail_points, n_grid.size());
  std::vector<double> lx, ly;
  for (std::size_t i = first; i < n_grid.size(); ++i) {
    if (chi2_values[i] <= kChi2Zero) continue;
    lx.push_back(std::log(static_cast<double>(n_grid[i])));
    ly.push_back(std::log(chi2_values[i]));
  }
  GrowthFit fit;
  if (lx.size() >= 2) {
    const double k = static_cast<double>(lx.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      mx += lx[i];
      my += ly[i];
    }
    mx /= k;
    my /= k;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxy += (lx[i] - mx) * (ly[i] - my);
      sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    fit.exponent = sxy / sxx;
  }
  fit.condition_met = fit.exponent < 2.0;
  return fit;
}

struct ConsistencyReport {
  std::vector<int> n_grid;
  std::vector<double> chi2_bar;
  std::vector<double> mse_q_sequence;
  std::vector<double> ub_sequence;
  double growth_exponent = 0.0;
  bool condition_met = true;
};

inline std::vector<int> default_n_grid() { return {1, 2, 4, 8, 16, 32, 64}; }

inline ConsistencyReport consistency_report(const GaussianMixture1D& noise, double q_mean, double q_var,
                                            std::vector<int> n_grid = default_n_grid(), unsigned workers = 1) {
  if (n_grid.size() < 4) throw std::invalid_argument("consistency_report: need at least 4 grid points");
  if (n_grid.front() < 1) throw std::invalid_argument("consistency_report: N must be >= 1");
  for (std::size_t i = 1; i < n_grid.size(); ++i) {
    if (!(n_grid[i] > n_grid[i - 1]))
      throw std::invalid_argument("consistency_report: N grid must be strictly ascending");
  }
  ConsistencyReport r;
  r.n_grid = std::move(n_grid);
  const std::size_t k = r.n_grid.size();
  r.chi2_bar.assign(k, 0.0);
  parallel_for(k, workers, [&](std::size_t i) { r.chi2_bar[i] = chi2_bar(noise, q_mean, q_var, r.n_grid[i]).value; });
  for (std::size_t i = 0; i < k; ++i) {
    const double n = r.n_grid[i];
    const double mse_q = q_var / n;
    r.mse_q_sequence.push_back(mse_q);
    r.ub_sequence.push_back(mse_q + delta_term(2.0 * q_var * q_var / (n * n), r.chi2_bar[i]));
  }
  const auto fit = growth_exponent(r.n_grid, r.chi2_bar);
  r.growth_exponent = fit.exponent;
  r.condition_met = fit.condition_met;
  return r;
}

inline double draw(const GaussianMixture1D& g, Engine& eng) {
  double u = std::uniform_real_distribution<double>(0.0, 1.0)(eng);
  std::size_t c = 0;
  while (c + 1 < g.components() && u >= g.weights()[c]) u -= g.weights()[c++];
  return std::normal_distribution<double>(g.means()[c], std::sqrt(g.vars()[c]))(eng);
}

// Monte-Carlo squared errors (x_bar - q_mean)^2 of the sample mean of n noise draws.
inline ErrorSampleSet sample_mean_errors(const GaussianMixture1D& noise, double q_mean, int n, std::size_t trials,
                                         std::uint64_t seed, unsigned workers = 1) {
  if (n < 1) throw std::invalid_argument("sample_mean_errors: N must be >= 1");
  auto truth = [&](Engine&) { return q_mean; };
  auto data = [&](double, Engine& eng) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += draw(noise, eng);
    return s / n;
  };
  auto estimator = [](double x_bar) { return x_bar; };
  TrialOptions opt;
  opt.trials = trials;
  opt.seed = seed;
  opt.workers = workers;
  opt.label = "consistency/N=" + std::to_string(n);
  return run_trials(truth, data, estimator, opt);
}

}  // namespace mmb
