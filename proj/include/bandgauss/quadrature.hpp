#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <queue>
#include <vector>

#include "bandgauss/errors.hpp"

namespace bandgauss::quad {

struct Tolerance {
  double abs = 1e-12;
  double rel = 1e-9;
};

struct Result {
  double value = 0.0;
  double error = 0.0;
  std::size_t intervals = 0;
};

namespace detail {

// Kronrod 15-point abscissae on [-1, 1] (positive half, descending) and the
// matching Kronrod / embedded Gauss 7-point weights (QUADPACK qk15).
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a;
  double b;
  double value;
  double error;
  bool operator<(const Segment& other) const { return error < other.error; }
};

template <class F>
Segment kronrod15(F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * kWgk[7];
  double gauss = fc * kWg[3];
  for (std::size_t j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const double pair = f(center - dx) + f(center + dx);
    kronrod += kWgk[j] * pair;
    if (j % 2 == 1) gauss += kWg[j / 2] * pair;
  }
  kronrod *= half;
  gauss *= half;
  return {a, b, kronrod, std::abs(kronrod - gauss)};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (7/15) on a finite interval. Bisects the
/// segment with the largest error estimate until the summed estimate drops
/// below max(tol.abs, tol.rel * |I|).
///
/// Throws NumericError when `max_segments` is exhausted.
template <class F>
Result integrate(F&& f, double a, double b, Tolerance tol = {}, std::size_t max_segments = 20000) {
  if (a == b) return {};
  if (!(std::isfinite(a) && std::isfinite(b))) throw DomainError("quad::integrate needs finite bounds");
  if (b < a) {
    Result r = integrate(f, b, a, tol, max_segments);
    r.value = -r.value;
    return r;
  }

  std::priority_queue<detail::Segment> heap;
  detail::Segment first = detail::kronrod15(f, a, b);
  double total = first.value;
  double total_err = first.error;
  heap.push(first);

  while (total_err > std::max(tol.abs, tol.rel * std::abs(total))) {
    if (heap.size() >= max_segments) {
      throw NumericError("adaptive quadrature did not converge within the segment budget");
    }
    detail::Segment worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) break;  // hit floating-point resolution
    heap.pop();
    detail::Segment left = detail::kronrod15(f, worst.a, mid);
    detail::Segment right = detail::kronrod15(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }

  // Re-sum to shed drift from the incremental updates.
  Result out;
  out.intervals = heap.size();
  while (!heap.empty()) {
    out.value += heap.top().value;
    out.error += heap.top().error;
    heap.pop();
  }
  return out;
}

/// Integrates over [a, b] split into panels no wider than `panel`. Used for
/// integrands that oscillate on a known scale so the adaptive scheme starts
/// from a grid that already resolves it.
template <class F>
double integrate_panels(F&& f, double a, double b, double panel, Tolerance tol = {}) {
  if (b <= a) return 0.0;
  const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil((b - a) / panel)));
  const double h = (b - a) / static_cast<double>(n);
  const Tolerance per{tol.abs / static_cast<double>(n), tol.rel};
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = a + h * static_cast<double>(i);
    const double hi = (i + 1 == n) ? b : lo + h;
    sum += integrate(f, lo, hi, per).value;
  }
  return sum;
}

}  // namespace bandgauss::quad
