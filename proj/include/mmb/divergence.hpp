// SPDX-License-Identifier: Apache-2.0
//
// Chi-square divergence chi2(P||Q) = E_Q[(dP/dQ)^2] - 1: Gaussian closed
// forms, a data-dependent partition estimator over samples, a quadrature
// route for arbitrary univariate densities, and the variational ratio
// (E_P g - E_Q g)^2 / Var_Q g that every chi2 dominates.

#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mmb/quadrature.hpp"
#include "mmb/stats_models.hpp"

namespace mmb {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class DivergenceMethod { closed_form, partition, quadrature };

inline const char* to_string(DivergenceMethod m) {
  switch (m) {
    case DivergenceMethod::closed_form: return "closed_form";
    case DivergenceMethod::partition: return "partition";
    case DivergenceMethod::quadrature: return "quadrature";
  }
  return "unknown";
}

struct DivergenceDiagnostics {
  std::optional<std::size_t> cell_count;
  std::optional<double> quad_abs_err;
  std::optional<std::pair<std::size_t, std::size_t>> sample_sizes;
  std::string note;
};

struct DivergenceEstimate {
  double value = 0.0;  // >= 0, may be +inf
  DivergenceMethod method = DivergenceMethod::closed_form;
  DivergenceDiagnostics diagnostics;

  bool finite() const { return std::isfinite(value); }
};

class QuadratureFailed : public std::runtime_error {
 public:
  explicit QuadratureFailed(const std::string& detail)
      : std::runtime_error("quadrature failed: " + detail) {}
};

// Anything with a log-density on the real line.
template <class D>
concept UnivariateDensity = requires(const D& d, double x) {
  { d.log_density(x) } -> std::convertible_to<double>;
};

// Adapts a plain density callable (returning p(x) >= 0).
struct DensityFunction {
  std::function<double(double)> pdf;
  double log_density(double x) const { return std::log(pdf(x)); }
};

// ---------------------------------------------------------------------------
// Closed forms

// chi2(N(mu_p, v_p) || N(mu_q, v_q)); finite iff 2 v_q > v_p.
//   v_q / (sqrt(v_p) sqrt(2 v_q - v_p)) * exp((mu_p - mu_q)^2 / (2 v_q - v_p)) - 1
// evaluated as expm1(-log1p(-(1 - r)^2) / 2 + d^2 / (v_q (2 - r))), r = v_p / v_q,
// which keeps full relative precision when P and Q are close.
inline DivergenceEstimate chi2_scalar_gaussian(const ScalarGaussian& p, const ScalarGaussian& q) {
  DivergenceEstimate out;
  out.method = DivergenceMethod::closed_form;
  if (!(2.0 * q.var() > p.var())) {
    out.value = kInf;
    out.diagnostics.note = "P variance >= 2 * Q variance";
    return out;
  }
  const double r = p.var() / q.var();
  const double one_minus_r = (q.var() - p.var()) / q.var();
  const double d = p.mu() - q.mu();
  const double exponent = -0.5 * std::log1p(-one_minus_r * one_minus_r) + d * d / (q.var() * (2.0 - r));
  out.value = std::max(0.0, std::expm1(exponent));
  return out;
}

// chi2(N(mu_p, v I) || N(mu_q, v I)) = exp(|mu_p - mu_q|^2 / v) - 1
inline DivergenceEstimate chi2_iso_gaussian_equal_cov(std::span<const double> mu_p,
                                                      std::span<const double> mu_q, double var) {
  if (mu_p.size() != mu_q.size())
    throw std::invalid_argument("chi2_iso_gaussian_equal_cov: mean vectors differ in length");
  if (!(var > 0.0)) throw std::invalid_argument("chi2_iso_gaussian_equal_cov: variance must be positive");
  double ss = 0.0;
  for (std::size_t i = 0; i < mu_p.size(); ++i) {
    const double d = mu_p[i] - mu_q[i];
    ss += d * d;
  }
  DivergenceEstimate out;
  out.method = DivergenceMethod::closed_form;
  out.value = std::expm1(ss / var);
  return out;
}

// ---------------------------------------------------------------------------
// Partition estimator

// max(10, floor(n_q^(1/3)))
inline std::size_t default_cell_count(std::size_t n_q) {
  auto t = static_cast<std::size_t>(std::floor(std::cbrt(static_cast<double>(n_q)) + 1e-9));
  return std::max<std::size_t>(10, t);
}

// Boundaries of `cells` cells holding (near-)equal numbers of Q samples. Each
// boundary is the midpoint of a gap between consecutive distinct order
// statistics, chosen as close as possible to the equal-mass position.
inline std::vector<double> equal_mass_boundaries(std::span<const double> q_sorted, std::size_t cells) {
  const std::size_t n = q_sorted.size();
  std::vector<std::size_t> gaps;  // k such that q[k-1] < q[k]
  for (std::size_t k = 1; k < n; ++k) {
    if (q_sorted[k - 1] < q_sorted[k]) gaps.push_back(k);
  }
  if (gaps.size() + 1 < cells) throw std::invalid_argument("degenerate partition");

  std::vector<double> bounds;
  bounds.reserve(cells - 1);
  std::size_t lo_pos = 0;
  for (std::size_t j = 1; j < cells; ++j) {
    const double target = static_cast<double>(j) * static_cast<double>(n) / static_cast<double>(cells);
    const std::size_t hi_pos = gaps.size() - (cells - 1 - j) - 1;
    auto it = std::lower_bound(gaps.begin() + static_cast<std::ptrdiff_t>(lo_pos),
                               gaps.begin() + static_cast<std::ptrdiff_t>(hi_pos) + 1, target,
                               [](std::size_t g, double t) { return static_cast<double>(g) < t; });
    std::size_t pos = static_cast<std::size_t>(it - gaps.begin());
    // prefer the nearer of the two neighbouring gaps; ties go to the lower index
    if (pos > lo_pos &&
        (pos > hi_pos || target - static_cast<double>(gaps[pos - 1]) <= static_cast<double>(gaps[pos]) - target))
      --pos;
    pos = std::clamp(pos, lo_pos, hi_pos);
    const std::size_t k = gaps[pos];
    bounds.push_back(0.5 * (q_sorted[k - 1] + q_sorted[k]));
    lo_pos = pos + 1;
  }
  return bounds;
}

// Cell index: number of boundaries strictly below x.
inline std::size_t cell_of(std::span<const double> bounds, double x) {
  return static_cast<std::size_t>(std::lower_bound(bounds.begin(), bounds.end(), x) - bounds.begin());
}

// Plug-in sum_j p_j^2 / q_j - 1 on cells with equal Q-sample mass. The outer
// cells extend to +-infinity, so every cell holds at least one Q sample.
inline DivergenceEstimate chi2_partition_estimate(std::span<const double> p_samples,
                                                  std::span<const double> q_samples,
                                                  std::optional<std::size_t> cells = std::nullopt) {
  if (p_samples.empty() || q_samples.empty())
    throw std::invalid_argument("chi2_partition_estimate: empty sample set");
  const std::size_t t = cells.value_or(default_cell_count(q_samples.size()));
  if (t < 2) throw std::invalid_argument("chi2_partition_estimate: need at least 2 cells");

  std::vector<double> q_sorted(q_samples.begin(), q_samples.end());
  std::sort(q_sorted.begin(), q_sorted.end());
  const auto bounds = equal_mass_boundaries(q_sorted, t);

  std::vector<double> p_count(t, 0.0), q_count(t, 0.0);
  for (double x : p_samples) p_count[cell_of(bounds, x)] += 1.0;
  for (double x : q_samples) q_count[cell_of(bounds, x)] += 1.0;

  const double np = static_cast<double>(p_samples.size());
  const double nq = static_cast<double>(q_samples.size());
  double acc = 0.0;
  for (std::size_t j = 0; j < t; ++j) {
    if (p_count[j] == 0.0) continue;
    const double pj = p_count[j] / np;
    const double qj = q_count[j] / nq;
    acc += pj * pj / qj;
  }
  DivergenceEstimate out;
  out.method = DivergenceMethod::partition;
  // the plug-in value can dip below zero by rounding only
  out.value = std::max(0.0, acc - 1.0);
  out.diagnostics.cell_count = t;
  out.diagnostics.sample_sizes = std::pair{p_samples.size(), q_samples.size()};
  return out;
}

// ---------------------------------------------------------------------------
// Quadrature

struct Chi2QuadratureOptions {
  double abs_tol = 1e-10;
  double fail_err = 1e-6;  // error estimates above this (relative to max(1, value)) fail
  std::size_t max_intervals = 1u << 16;
  // On finite domains the integrand must have decayed below this at both ends.
  double edge_tol = 1e-10;
};

// Integrand q * (p/q - 1)^2 = (p - q)^2 / q, computed in the log domain so
// that neither underflow of q nor cancellation near p == q loses accuracy.
inline double chi2_integrand(double log_p, double log_q) {
  if (log_q == -kInf) return log_p == -kInf ? 0.0 : kInf;
  if (std::isnan(log_p) || std::isnan(log_q)) return kInf;
  const double d = log_p - log_q;
  if (d == -kInf) return std::exp(log_q);
  if (d > 30.0) return std::exp(2.0 * log_p - log_q + 2.0 * std::log1p(-std::exp(-d)));
  const double em = std::expm1(d);
  if (em == 0.0) return 0.0;
  return std::exp(log_q + 2.0 * std::log(std::abs(em)));
}

// Integrates (p - q)^2 / q over `domain`. Non-convergence signals an
// infinite (or numerically unreachable) divergence.
template <UnivariateDensity P, UnivariateDensity Q>
DivergenceEstimate chi2_quadrature(const P& p, const Q& q, const Interval& domain,
                                   const Chi2QuadratureOptions& opt = {}) {
  auto f = [&](double x) { return chi2_integrand(p.log_density(x), q.log_density(x)); };
  if (domain.is_finite()) {
    const double fa = f(domain.lo), fb = f(domain.hi);
    if (!(fa <= opt.edge_tol && fb <= opt.edge_tol))
      throw QuadratureFailed("integrand has not decayed at the domain edges");
  }
  QuadratureOptions qo;
  qo.abs_tol = opt.abs_tol;
  qo.max_intervals = opt.max_intervals;
  const QuadratureResult r = integrate(f, domain, qo);
  if (!std::isfinite(r.value) || !std::isfinite(r.abs_err) ||
      r.abs_err > opt.fail_err * std::max(1.0, std::abs(r.value)))
    throw QuadratureFailed("error estimate " + std::to_string(r.abs_err) + " after " +
                           std::to_string(r.intervals) + " subintervals");
  DivergenceEstimate out;
  out.method = DivergenceMethod::quadrature;
  out.value = std::max(0.0, r.value);
  out.diagnostics.quad_abs_err = r.abs_err;
  return out;
}

// Whole real line, anchored at Q's location and scale.
template <UnivariateDensity P>
DivergenceEstimate chi2_quadrature(const P& p, const ScalarGaussian& q, const Chi2QuadratureOptions& opt = {}) {
  return chi2_quadrature(p, q, Interval::whole_line(q.mu(), q.sd()), opt);
}

// ---------------------------------------------------------------------------

// (E_P g - E_Q g)^2 / Var_Q g, a lower bound on chi2(P||Q) for every g.
inline double variational_ratio(double mean_g_p, double mean_g_q, double var_g_q) {
  if (!(var_g_q > 0.0)) throw std::invalid_argument("variational_ratio: Var_Q(g) must be positive");
  const double d = mean_g_p - mean_g_q;
  return d * d / var_g_q;
}

}  // namespace mmb
