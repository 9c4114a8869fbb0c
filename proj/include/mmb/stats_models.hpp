// SPDX-License-Identifier: Apache-2.0
//
// Parametric probability models: scalar and isotropic Gaussians, and
// one-dimensional Gaussian mixtures. All models are validated on
// construction and immutable afterwards.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mmb/rng.hpp"

namespace mmb {

using SampleSet = std::vector<double>;

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2*pi))

// Closed interval; either end may be infinite. For infinite domains `center`
// and `scale` anchor the change of variables used by the quadrature.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  double center = 0.0;
  double scale = 1.0;

  static Interval finite(double lo, double hi) { return {lo, hi, 0.5 * (lo + hi), 0.5 * (hi - lo)}; }
  static Interval whole_line(double center, double scale) {
    return {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
            center, scale};
  }
  bool is_finite() const { return std::isfinite(lo) && std::isfinite(hi); }
};

class ScalarGaussian {
 public:
  ScalarGaussian(double mu, double var) : mu_(mu), var_(var) {
    if (!(var > 0.0) || !std::isfinite(var) || !std::isfinite(mu))
      throw std::invalid_argument("ScalarGaussian: variance must be positive and finite");
  }

  double mu() const { return mu_; }
  double var() const { return var_; }
  double sd() const { return std::sqrt(var_); }

  double log_density(double x) const {
    const double z = x - mu_;
    return -0.5 * z * z / var_ - 0.5 * std::log(var_) - kLogSqrt2Pi;
  }
  double density(double x) const { return std::exp(log_density(x)); }

  friend bool operator==(const ScalarGaussian&, const ScalarGaussian&) = default;

 private:
  double mu_;
  double var_;
};

// N(mean, var * I_M)
class IsoGaussianVec {
 public:
  IsoGaussianVec(std::vector<double> mean, double var) : mean_(std::move(mean)), var_(var) {
    if (mean_.empty()) throw std::invalid_argument("IsoGaussianVec: dimension must be >= 1");
    if (!(var > 0.0) || !std::isfinite(var))
      throw std::invalid_argument("IsoGaussianVec: variance must be positive and finite");
  }

  std::size_t dim() const { return mean_.size(); }
  const std::vector<double>& mean() const { return mean_; }
  double var() const { return var_; }

  double log_density(std::span<const double> x) const {
    if (x.size() != mean_.size()) throw std::invalid_argument("IsoGaussianVec: dimension mismatch");
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double z = x[i] - mean_[i];
      ss += z * z;
    }
    const auto m = static_cast<double>(mean_.size());
    return -0.5 * ss / var_ - m * (0.5 * std::log(var_) + kLogSqrt2Pi);
  }
  // Underflows to 0 for large M; prefer log_density there.
  double density(std::span<const double> x) const { return std::exp(log_density(x)); }

 private:
  std::vector<double> mean_;
  double var_;
};

class GaussianMixture1D {
 public:
  GaussianMixture1D(std::vector<double> weights, std::vector<double> means, std::vector<double> vars)
      : weights_(std::move(weights)), means_(std::move(means)), vars_(std::move(vars)) {
    if (weights_.empty()) throw std::invalid_argument("GaussianMixture1D: need at least one component");
    if (weights_.size() != means_.size() || weights_.size() != vars_.size())
      throw std::invalid_argument("GaussianMixture1D: parameter vectors differ in length");
    double total = 0.0;
    for (std::size_t c = 0; c < weights_.size(); ++c) {
      if (!(weights_[c] >= 0.0)) throw std::invalid_argument("GaussianMixture1D: negative weight");
      if (!(vars_[c] > 0.0) || !std::isfinite(vars_[c]))
        throw std::invalid_argument("GaussianMixture1D: variances must be positive");
      if (!std::isfinite(means_[c])) throw std::invalid_argument("GaussianMixture1D: non-finite mean");
      total += weights_[c];
    }
    if (std::abs(total - 1.0) > 1e-12)
      throw std::invalid_argument("GaussianMixture1D: weights must sum to 1");
  }

  static GaussianMixture1D single(double mu, double var) { return {{1.0}, {mu}, {var}}; }

  std::size_t components() const { return weights_.size(); }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& means() const { return means_; }
  const std::vector<double>& vars() const { return vars_; }

  double mean() const {
    double m = 0.0;
    for (std::size_t c = 0; c < components(); ++c) m += weights_[c] * means_[c];
    return m;
  }
  // law of total variance
  double variance() const {
    const double m = mean();
    double v = 0.0;
    for (std::size_t c = 0; c < components(); ++c) {
      const double d = means_[c] - m;
      v += weights_[c] * (vars_[c] + d * d);
    }
    return v;
  }
  double max_var() const { return *std::max_element(vars_.begin(), vars_.end()); }

  double log_density(double x) const {
    // log-sum-exp over components with positive weight
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < components(); ++c) {
      if (weights_[c] > 0.0) top = std::max(top, component_log(c, x));
    }
    if (!std::isfinite(top)) return top;
    double acc = 0.0;
    for (std::size_t c = 0; c < components(); ++c) {
      if (weights_[c] > 0.0) acc += std::exp(component_log(c, x) - top);
    }
    return top + std::log(acc);
  }
  double density(double x) const { return std::exp(log_density(x)); }

 private:
  double component_log(std::size_t c, double x) const {
    const double z = x - means_[c];
    return std::log(weights_[c]) - 0.5 * z * z / vars_[c] - 0.5 * std::log(vars_[c]) - kLogSqrt2Pi;
  }

  std::vector<double> weights_;
  std::vector<double> means_;
  std::vector<double> vars_;
};

// [min(means) - 10*max(sd), max(means) + 10*max(sd)]
inline Interval integration_domain(const GaussianMixture1D& g) {
  const auto [lo, hi] = std::minmax_element(g.means().begin(), g.means().end());
  const double sd = std::sqrt(g.max_var());
  return Interval::finite(*lo - 10.0 * sd, *hi + 10.0 * sd);
}
inline Interval integration_domain(const ScalarGaussian& g) {
  return Interval::finite(g.mu() - 10.0 * g.sd(), g.mu() + 10.0 * g.sd());
}

namespace detail {
inline void check_count(std::size_t count) {
  if (count == 0) throw std::invalid_argument("empty sample request");
}
}  // namespace detail

inline SampleSet sample(const ScalarGaussian& g, std::size_t count, std::uint64_t seed) {
  detail::check_count(count);
  Engine eng = make_engine(seed, "sample/scalar_gaussian");
  std::normal_distribution<double> nd(g.mu(), g.sd());
  SampleSet out(count);
  for (auto& v : out) v = nd(eng);
  return out;
}

inline std::vector<std::vector<double>> sample(const IsoGaussianVec& g, std::size_t count,
                                               std::uint64_t seed) {
  detail::check_count(count);
  Engine eng = make_engine(seed, "sample/iso_gaussian");
  std::normal_distribution<double> nd(0.0, std::sqrt(g.var()));
  std::vector<std::vector<double>> out(count, std::vector<double>(g.dim()));
  for (auto& row : out) {
    for (std::size_t i = 0; i < row.size(); ++i) row[i] = g.mean()[i] + nd(eng);
  }
  return out;
}

struct LabeledSamples {
  SampleSet values;
  std::vector<std::size_t> component;
};

// Mixture draws together with the index of the component each draw came from.
inline LabeledSamples sample_labeled(const GaussianMixture1D& g, std::size_t count,
                                     std::uint64_t seed) {
  detail::check_count(count);
  Engine eng = make_engine(seed, "sample/gaussian_mixture");
  std::vector<double> cumulative(g.components());
  std::partial_sum(g.weights().begin(), g.weights().end(), cumulative.begin());
  std::uniform_real_distribution<double> ud(0.0, cumulative.back());
  std::normal_distribution<double> nd(0.0, 1.0);
  LabeledSamples out{SampleSet(count), std::vector<std::size_t>(count)};
  for (std::size_t i = 0; i < count; ++i) {
    const double u = ud(eng);
    auto c = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                                      cumulative.begin());
    c = std::min(c, g.components() - 1);
    out.component[i] = c;
    out.values[i] = g.means()[c] + std::sqrt(g.vars()[c]) * nd(eng);
  }
  return out;
}

inline SampleSet sample(const GaussianMixture1D& g, std::size_t count, std::uint64_t seed) {
  return sample_labeled(g, count, seed).values;
}

// Exact law of (1/N) * sum of N iid draws from `noise`. Two components give
// N+1 binomially weighted components; more than two are not supported.
inline GaussianMixture1D sample_mean_law(const GaussianMixture1D& noise, int n) {
  if (n < 1) throw std::invalid_argument("sample_mean_law: N must be >= 1");
  const double nn = n;
  if (noise.components() == 1)
    return GaussianMixture1D::single(noise.means()[0], noise.vars()[0] / nn);
  if (noise.components() != 2)
    throw std::invalid_argument("sample-mean law implemented for <=2 components");
  if (n == 1) return noise;

  const double w1 = noise.weights()[0], w2 = noise.weights()[1];
  const double m1 = noise.means()[0], m2 = noise.means()[1];
  const double v1 = noise.vars()[0], v2 = noise.vars()[1];
  std::vector<double> w(n + 1), m(n + 1), v(n + 1);
  const double log_n_fact = std::lgamma(nn + 1.0);
  double total = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double kk = k;
    double weight;
    if ((w1 == 0.0 && k > 0) || (w2 == 0.0 && k < n)) {
      weight = 0.0;
    } else {
      const double log_binom = log_n_fact - std::lgamma(kk + 1.0) - std::lgamma(nn - kk + 1.0);
      const double lw1 = k > 0 ? kk * std::log(w1) : 0.0;
      const double lw2 = k < n ? (nn - kk) * std::log(w2) : 0.0;
      weight = std::exp(log_binom + lw1 + lw2);
    }
    w[k] = weight;
    m[k] = (kk * m1 + (nn - kk) * m2) / nn;
    v[k] = (kk * v1 + (nn - kk) * v2) / (nn * nn);
    total += weight;
  }
  for (auto& x : w) x /= total;
  return {std::move(w), std::move(m), std::move(v)};
}

}  // namespace mmb
