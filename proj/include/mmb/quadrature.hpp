// SPDX-License-Identifier: Apache-2.0
//
// Globally adaptive Gauss-Kronrod (7/15) quadrature with interval bisection.
// Infinite domains are mapped onto (-1, 1) with x = c + s*t/(1 - t^2).

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <vector>

#include "mmb/stats_models.hpp"

namespace mmb {

struct QuadratureOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-12;              // applied to |value| when larger than abs_tol
  std::size_t max_intervals = 1u << 16;
};

struct QuadratureResult {
  double value = 0.0;
  double abs_err = 0.0;
  std::size_t intervals = 0;
  bool converged = false;
};

namespace detail {

inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for Kronrod nodes 1, 3, 5 and the centre
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, err;
  bool operator<(const Segment& o) const { return err < o.err; }
};

template <class F>
Segment gauss_kronrod(const F& f, double a, double b) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  const double fc = f(mid);
  double kronrod = fc * kKronrodWeights[7];
  double gauss = fc * kGaussWeights[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kKronrodNodes[j];
    const double s = f(mid - dx) + f(mid + dx);
    kronrod += kKronrodWeights[j] * s;
    if (j % 2 == 1) gauss += kGaussWeights[j / 2] * s;
  }
  kronrod *= half;
  gauss *= half;
  double err = std::abs(kronrod - gauss);
  if (!std::isfinite(kronrod) || !std::isfinite(err)) err = std::numeric_limits<double>::infinity();
  return {a, b, kronrod, err};
}

}  // namespace detail

// Integrates f over [a, b] (finite). The worst segment is bisected until the
// summed error estimate meets the tolerance or the segment cap is reached.
template <class F>
QuadratureResult integrate_finite(const F& f, double a, double b, const QuadratureOptions& opt = {}) {
  std::priority_queue<detail::Segment> heap;
  heap.push(detail::gauss_kronrod(f, a, b));
  double value = heap.top().value;
  double err = heap.top().err;
  std::vector<detail::Segment> frozen;  // too narrow to bisect further

  auto tolerance = [&] { return std::max(opt.abs_tol, opt.rel_tol * std::abs(value)); };

  while (!heap.empty() && err > tolerance() && heap.size() + frozen.size() < opt.max_intervals) {
    const detail::Segment worst = heap.top();
    heap.pop();
    const double m = 0.5 * (worst.a + worst.b);
    if (!(m > worst.a && m < worst.b)) {
      frozen.push_back(worst);
      // the worst segment cannot be refined, so the target is out of reach
      if (heap.empty() || worst.err > tolerance()) break;
      continue;
    }
    const auto left = detail::gauss_kronrod(f, worst.a, m);
    const auto right = detail::gauss_kronrod(f, m, worst.b);
    heap.push(left);
    heap.push(right);
    value += left.value + right.value - worst.value;
    err += left.err + right.err - worst.err;
    if (!std::isfinite(err) || !std::isfinite(value)) {
      // an infinite segment may have just been split; resum
      value = 0.0;
      err = 0.0;
      auto copy = heap;
      while (!copy.empty()) {
        value += copy.top().value;
        err += copy.top().err;
        copy.pop();
      }
      for (const auto& s : frozen) {
        value += s.value;
        err += s.err;
      }
    }
  }

  // final resummation for accuracy
  QuadratureResult r;
  r.intervals = heap.size() + frozen.size();
  double v = 0.0, e = 0.0;
  while (!heap.empty()) {
    v += heap.top().value;
    e += heap.top().err;
    heap.pop();
  }
  for (const auto& s : frozen) {
    v += s.value;
    e += s.err;
  }
  r.value = v;
  r.abs_err = e;
  r.converged = std::isfinite(v) && e <= std::max(opt.abs_tol, opt.rel_tol * std::abs(v));
  return r;
}

// Integrates f over an Interval; infinite ends use the tangent-like map.
template <class F>
QuadratureResult integrate(const F& f, const Interval& dom, const QuadratureOptions& opt = {}) {
  if (dom.is_finite()) return integrate_finite(f, dom.lo, dom.hi, opt);
  if (std::isfinite(dom.lo) || std::isfinite(dom.hi)) {
    // half line: x = edge +/- s * u / (1 - u), u in [0, 1)
    const bool right = std::isfinite(dom.lo);
    const double edge = right ? dom.lo : dom.hi;
    const double s = dom.scale;
    auto g = [&](double u) {
      const double w = 1.0 - u;
      const double x = right ? edge + s * u / w : edge - s * u / w;
      const double jac = s / (w * w);
      const double y = f(x);
      return y == 0.0 ? 0.0 : y * jac;
    };
    return integrate_finite(g, 0.0, 1.0, opt);
  }
  const double c = dom.center;
  const double s = dom.scale;
  auto g = [&](double t) {
    const double w = 1.0 - t * t;
    const double x = c + s * t / w;
    const double jac = s * (1.0 + t * t) / (w * w);
    const double y = f(x);
    return y == 0.0 ? 0.0 : y * jac;
  };
  return integrate_finite(g, -1.0, 1.0, opt);
}

}  // namespace mmb
