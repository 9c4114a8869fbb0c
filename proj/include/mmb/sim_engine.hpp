// SPDX-License-Identifier: Apache-2.0
//
// Seeded Monte-Carlo trial runner and summary statistics.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "mmb/rng.hpp"

namespace mmb {

enum class Law { under_P, under_Q };
enum class ErrorKind { squared_error, raw_error };

inline const char* to_string(Law l) { return l == Law::under_P ? "under_P" : "under_Q"; }

struct TrialFailure {
  std::size_t trial;
  std::string message;
};

struct ErrorSampleSet {
  std::vector<double> values;  // successful trials, in trial order
  Law law = Law::under_P;
  std::uint64_t seed = 0;
  ErrorKind kind = ErrorKind::squared_error;
  std::vector<TrialFailure> failures;
};

inline constexpr double kZ99 = 2.576;

struct SummaryStats {
  double mean = 0.0;
  double variance = 0.0;
  double ci99_half_width = 0.0;
  std::size_t n = 0;
};

// One-pass Welford update with Neumaier-compensated accumulators.
class RunningMoments {
 public:
  void push(double x) {
    ++n_;
    const double delta = x - mean();
    add(mean_hi_, mean_c_, delta / static_cast<double>(n_));
    add(m2_hi_, m2_c_, delta * (x - mean()));
  }
  std::size_t count() const { return n_; }
  double mean() const { return mean_hi_ + mean_c_; }
  double m2() const { return m2_hi_ + m2_c_; }

 private:
  static void add(double& sum, double& comp, double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  std::size_t n_ = 0;
  double mean_hi_ = 0.0, mean_c_ = 0.0;
  double m2_hi_ = 0.0, m2_c_ = 0.0;
};

inline SummaryStats summarize(std::span<const double> values) {
  if (values.size() < 2) throw std::invalid_argument("summarize: need at least 2 samples");
  RunningMoments acc;
  for (double v : values) acc.push(v);
  SummaryStats s;
  s.n = values.size();
  s.mean = acc.mean();
  s.variance = std::max(0.0, acc.m2() / static_cast<double>(s.n - 1));
  s.ci99_half_width = kZ99 * std::sqrt(s.variance / static_cast<double>(s.n));
  return s;
}

inline SummaryStats summarize(const ErrorSampleSet& set) { return summarize(set.values); }

inline unsigned default_workers() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1u : hw;
}

// Runs body(i) for i in [0, count) on `workers` threads with a static
// striped assignment. body must only write to state owned by index i.
template <class Body>
void parallel_for(std::size_t count, unsigned workers, const Body& body) {
  if (workers <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  const unsigned w = static_cast<unsigned>(std::min<std::size_t>(workers, count));
  std::vector<std::exception_ptr> errors(w);
  {
    std::vector<std::jthread> pool;
    pool.reserve(w);
    for (unsigned k = 0; k < w; ++k) {
      pool.emplace_back([&, k] {
        try {
          for (std::size_t i = k; i < count; i += w) body(i);
        } catch (...) {
          errors[k] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct TrialOptions {
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  Law law = Law::under_P;
  std::string label = "trial";
  double max_failure_rate = 1e-3;
};

// Per trial t: engine from (seed, label, t); truth = truth_sampler(engine);
// x = data_sampler(truth, engine); estimate = estimator(x). Records
// (estimate - truth)^2. Output order is trial order for any worker count.
template <class TruthSampler, class DataSampler, class Estimator>
ErrorSampleSet run_trials(const TruthSampler& truth_sampler, const DataSampler& data_sampler,
                          const Estimator& estimator, const TrialOptions& opt) {
  if (opt.trials < 100) throw std::invalid_argument("insufficient trials");
  std::vector<double> sq(opt.trials, 0.0);
  std::vector<std::optional<std::string>> failed(opt.trials);

  parallel_for(opt.trials, opt.workers, [&](std::size_t t) {
    Engine eng = make_engine(opt.seed, opt.label, t);
    try {
      const double truth = truth_sampler(eng);
      const auto x = data_sampler(truth, eng);
      const double est = estimator(x);
      if (!std::isfinite(est)) throw std::runtime_error("non-finite estimate");
      const double e = est - truth;
      sq[t] = e * e;
    } catch (const std::exception& ex) {
      failed[t] = ex.what();
    }
  });

  ErrorSampleSet out;
  out.law = opt.law;
  out.seed = opt.seed;
  out.kind = ErrorKind::squared_error;
  out.values.reserve(opt.trials);
  for (std::size_t t = 0; t < opt.trials; ++t) {
    if (failed[t])
      out.failures.push_back({t, *failed[t]});
    else
      out.values.push_back(sq[t]);
  }
  if (static_cast<double>(out.failures.size()) > opt.max_failure_rate * static_cast<double>(opt.trials))
    throw std::runtime_error("run_trials: " + std::to_string(out.failures.size()) +
                             " estimator failures exceed the allowed rate; first: " +
                             out.failures.front().message);
  return out;
}

}  // namespace mmb
