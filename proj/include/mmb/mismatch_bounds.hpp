// SPDX-License-Identifier: Apache-2.0
//
// Bilateral MSE bound for an estimator designed under a presumed model Q
// while the data follow P:
//
//   MSE_Q - Delta <= MSE_P <= MSE_Q + Delta,   Delta = sqrt(Var_Q(|e|^2) * chi2(P||Q))
//
// chi2 may be taken between the squared-error laws (error level) or, more
// loosely, between the data laws (data level); the latter never gives a
// narrower bracket.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace mmb {

enum class BoundLevel { error_level, data_level };

inline const char* to_string(BoundLevel l) {
  return l == BoundLevel::error_level ? "error_level" : "data_level";
}

struct BoundReport {
  double mse_q = 0.0;
  double var_q_sq_err = 0.0;
  double chi2 = 0.0;
  double delta = 0.0;
  double lower = 0.0;  // may be negative; clamp only for presentation
  double upper = 0.0;
  BoundLevel level = BoundLevel::error_level;
  std::optional<double> refined_lower;
  std::optional<double> mcrb;

  bool informative() const { return std::isfinite(delta); }
  double lower_clamped() const { return std::max(0.0, lower); }
};

// sqrt(var * chi2), with 0 * inf taken as 0: a squared error that is constant
// under Q pins MSE_P regardless of the divergence.
inline double delta_term(double var_q_sq_err, double chi2) {
  if (!(var_q_sq_err >= 0.0) || !(chi2 >= 0.0))
    throw std::invalid_argument("delta_term: inputs must be nonnegative");
  if (var_q_sq_err == 0.0 || chi2 == 0.0) return 0.0;
  return std::sqrt(var_q_sq_err) * std::sqrt(chi2);
}

inline BoundReport bilateral_bound(double mse_q, double var_q_sq_err, double chi2,
                                   BoundLevel level = BoundLevel::error_level) {
  if (!(mse_q >= 0.0)) throw std::invalid_argument("bilateral_bound: MSE_Q must be nonnegative");
  BoundReport r;
  r.mse_q = mse_q;
  r.var_q_sq_err = var_q_sq_err;
  r.chi2 = chi2;
  r.level = level;
  r.delta = delta_term(var_q_sq_err, chi2);
  r.lower = mse_q - r.delta;
  r.upper = mse_q + r.delta;
  return r;
}

// Suffix running maximum: out[i] = max(lb[i..]). Valid whenever the true MSE
// is nonincreasing along the (ascending) SNR grid.
inline std::vector<double> refine_lower_bound_monotone(std::span<const double> snr_grid,
                                                       std::span<const double> lb_values) {
  if (snr_grid.size() != lb_values.size())
    throw std::invalid_argument("refine_lower_bound_monotone: length mismatch");
  for (std::size_t i = 1; i < snr_grid.size(); ++i) {
    if (!(snr_grid[i] > snr_grid[i - 1]))
      throw std::invalid_argument("refine_lower_bound_monotone: SNR grid must be strictly ascending");
  }
  std::vector<double> out(lb_values.begin(), lb_values.end());
  for (std::size_t i = out.size(); i-- > 1;) out[i - 1] = std::max(out[i - 1], out[i]);
  return out;
}

// Diagonal of the inverse Fisher information of one observation, and the
// number of observations N.
struct CrbDiagonal {
  std::vector<double> sigma2_crb;
  int n = 1;

  CrbDiagonal(std::vector<double> s2, int n_obs) : sigma2_crb(std::move(s2)), n(n_obs) {
    if (sigma2_crb.empty()) throw std::invalid_argument("CrbDiagonal: need at least one entry");
    for (double v : sigma2_crb) {
      if (!(v > 0.0)) throw std::invalid_argument("CrbDiagonal: entries must be positive");
    }
    if (n < 1) throw std::invalid_argument("CrbDiagonal: N must be >= 1");
  }
};

// Upper bound on Var(|e|^2) for asymptotically Gaussian errors
// e ~ N(0, diag(sigma2_crb) / N): (2 / N^2) * ||S||_F^2 with S_kl = sigma_k sigma_l.
// Exact (Isserlis) for K = 1; covariances are bounded by Cauchy-Schwarz for K > 1.
inline double gaussian_sq_error_variance_bound(const CrbDiagonal& crb) {
  const auto& s2 = crb.sigma2_crb;
  double frob = 0.0;
  for (std::size_t k = 0; k < s2.size(); ++k) {
    for (std::size_t l = 0; l < s2.size(); ++l) {
      const double e = (k == l) ? s2[k] : std::sqrt(s2[k]) * std::sqrt(s2[l]);
      frob += e * e;
    }
  }
  const double n = crb.n;
  return 2.0 * frob / (n * n);
}

}  // namespace mmb
