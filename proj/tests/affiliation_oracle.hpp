#pragma once

// Brute-force affiliation precision/recall: survival functions are measured
// directly as lengths of interval sets, distances are plain minima, and the
// zone integrals are evaluated by adaptive Simpson quadrature. Shares no code
// with the closed-form implementation.

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

namespace oracle {

using Span = std::pair<double, double>;  // half-open [first, second)

inline double overlap(Span a, Span b) { return std::max(0.0, std::min(a.second, b.second) - std::max(a.first, b.first)); }

inline double simpson_step(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                           double whole, double eps, int depth, int min_depth) {
  const double m = (a + b) / 2;
  const double lm = (a + m) / 2;
  const double rm = (m + b) / 2;
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6 * (fa + 4 * flm + fm);
  const double right = (b - m) / 6 * (fm + 4 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || (min_depth <= 0 && std::abs(delta) <= 15 * eps)) return left + right + delta / 15;
  return simpson_step(f, a, m, fa, flm, fm, left, eps / 2, depth - 1, min_depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, eps / 2, depth - 1, min_depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b) {
  if (!(b > a)) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f((a + b) / 2);
  const double whole = (b - a) / 6 * (fa + 4 * fm + fb);
  return simpson_step(f, a, b, fa, fm, fb, whole, 1e-14, 60, 8);
}

// Integral over [a, b) split at the given points, so jumps sit on piece edges.
inline double integrate_split(const std::function<double(double)>& f, double a, double b, std::vector<double> at) {
  at.push_back(a);
  at.push_back(b);
  std::sort(at.begin(), at.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < at.size(); ++i) {
    const double lo = std::max(a, at[i]);
    const double hi = std::min(b, at[i + 1]);
    if (hi > lo) total += integrate(f, lo, hi);
  }
  return total;
}

struct Result {
  double precision = 0.0;
  double recall = 0.0;
  bool precision_defined = true;
};

// Events are half-open spans, sorted and disjoint; timeline is [lo, hi).
inline Result affiliation(const std::vector<Span>& pred, const std::vector<Span>& truth, Span timeline) {
  Result out;
  double psum = 0.0;
  double rsum = 0.0;
  int pzones = 0;
  for (std::size_t j = 0; j < truth.size(); ++j) {
    const Span J = truth[j];
    const double lo = j == 0 ? timeline.first : (truth[j - 1].second + J.first) / 2;
    const double hi = j + 1 == truth.size() ? timeline.second : (J.second + truth[j + 1].first) / 2;
    const Span I{lo, hi};
    const double zone_len = hi - lo;
    std::vector<Span> ys;
    for (const auto& p : pred) {
      const Span c{std::max(p.first, lo), std::min(p.second, hi)};
      if (c.second > c.first) ys.push_back(c);
    }
    if (ys.empty()) continue;

    auto dist_to_J = [&](double y) { return y < J.first ? J.first - y : (y > J.second ? y - J.second : 0.0); };
    // P(dist(X, J) >= d): the zone minus J dilated by d.
    auto surv_p = [&](double d) {
      if (d <= 0) return 1.0;
      return (zone_len - overlap(I, {J.first - d, J.second + d})) / zone_len;
    };
    double mass = 0.0;
    double integral = 0.0;
    for (const auto& y : ys) {
      mass += y.second - y.first;
      integral += integrate_split([&](double t) { return surv_p(dist_to_J(t)); }, y.first, y.second,
                                  {J.first, J.second});
    }
    psum += integral / mass;
    ++pzones;

    auto dist_to_Y = [&](double x) {
      double best = INFINITY;
      for (const auto& y : ys) best = std::min(best, x < y.first ? y.first - x : (x > y.second ? x - y.second : 0.0));
      return best;
    };
    // P(|X - x| >= d): the zone minus the open ball around x.
    auto surv_r = [&](double x, double d) { return (zone_len - overlap(I, {x - d, x + d})) / zone_len; };
    std::vector<double> edges;
    for (const auto& y : ys) {
      edges.push_back(y.first);
      edges.push_back(y.second);
    }
    rsum += integrate_split([&](double x) { return surv_r(x, dist_to_Y(x)); }, J.first, J.second, edges) /
            (J.second - J.first);
  }
  if (pzones == 0) {
    out.precision_defined = false;
  } else {
    out.precision = psum / pzones;
  }
  out.recall = truth.empty() ? 0.0 : rsum / static_cast<double>(truth.size());
  return out;
}

}  // namespace oracle
