#pragma once

// Reference computations that share no numerical route with the primary
// paths: composite Simpson instead of Gauss-Kronrod, direct W-matrix
// propagation instead of the secular-coefficient form, eigen-decomposition
// instead of invariant formulas.

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bandgauss/coefficients.hpp"
#include "bandgauss/dynamics.hpp"
#include "bandgauss/entanglement.hpp"
#include "bandgauss/errors.hpp"
#include "bandgauss/spectral.hpp"

namespace bandgauss::oracle {

enum class DeviationKind { absolute, relative };

struct OracleReport {
  std::string quantity;
  double primary = 0.0;
  double reference = 0.0;
  double abs_deviation = 0.0;
  double rel_deviation = 0.0;
  double tolerance = 0.0;
  DeviationKind kind = DeviationKind::absolute;
  bool pass = false;
};

/// pass <=> (chosen deviation) < tolerance. Relative deviation is measured
/// against max(|reference|, floor).
inline OracleReport compare(std::string quantity, double primary, double reference, double tolerance,
                            DeviationKind kind, double floor = 0.0) {
  OracleReport r;
  r.quantity = std::move(quantity);
  r.primary = primary;
  r.reference = reference;
  r.abs_deviation = std::abs(primary - reference);
  const double denom = std::max(std::abs(reference), floor);
  r.rel_deviation = denom > 0.0 ? r.abs_deviation / denom : (r.abs_deviation == 0.0 ? 0.0 : INFINITY);
  r.tolerance = tolerance;
  r.kind = kind;
  const double dev = kind == DeviationKind::absolute ? r.abs_deviation : r.rel_deviation;
  r.pass = dev < tolerance;
  return r;
}

/// Composite Simpson on a doubling grid with a Richardson error estimate;
/// returns the extrapolated value once |S_2n - S_n| / 15 <= tol.
inline double quad_reference(const std::function<double(double)>& f, double a, double b, double tol,
                             std::size_t max_intervals = std::size_t{1} << 24) {
  if (!std::isfinite(a) || !std::isfinite(b)) throw DomainError("quad_reference needs finite bounds");
  if (!(tol > 0.0)) throw DomainError("quad_reference tolerance must be > 0");
  if (a == b) return 0.0;
  std::size_t n = 2;
  const double h0 = (b - a) / 2.0;
  double ends = f(a) + f(b);
  double odd = f(a + h0);
  double even = 0.0;
  double prev = h0 / 3.0 * (ends + 4.0 * odd);
  while (n < max_intervals) {
    even += odd;
    n *= 2;
    const double h = (b - a) / static_cast<double>(n);
    odd = 0.0;
    for (std::size_t i = 1; i < n; i += 2) odd += f(a + h * static_cast<double>(i));
    const double cur = h / 3.0 * (ends + 4.0 * odd + 2.0 * even);
    const double err = std::abs(cur - prev) / 15.0;
    if (n >= 16 && err <= tol) return cur + (cur - prev) / 15.0;
    prev = cur;
  }
  throw NumericError("quad_reference did not converge");
}

/// Central difference, or forward difference when tau - h < 0.
inline double finite_diff(const std::function<double(double)>& f, double tau, double h) {
  if (!(h > 0.0)) throw DomainError("finite_diff step must be > 0");
  if (tau - h < 0.0) return (f(tau + h) - f(tau)) / h;
  return (f(tau + h) - f(tau - h)) / (2.0 * h);
}

struct WPropagation {
  Mat2 w_bar = Mat2::Zero();
  double gamma_int = 0.0;
};

namespace detail {

// Running integrals of samples on a uniform grid: Simpson on even nodes, a
// three-point partial panel for odd ones. `f` needs an odd number of nodes.
inline std::vector<double> cumulative(const std::vector<double>& f, double h) {
  const std::size_t n = f.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t k = 2; k < n; k += 2) out[k] = out[k - 2] + h / 3.0 * (f[k - 2] + 4.0 * f[k - 1] + f[k]);
  for (std::size_t k = 1; k < n; k += 2) {
    out[k] = out[k - 1] + h / 12.0 * (5.0 * f[k - 1] + 8.0 * f[k] - f[k + 1]);
  }
  return out;
}

}  // namespace detail

/// Direct quadrature of W(t) = int_0^t e^{Gamma} R^T M R ds with
/// M = [[Delta, -Pi/2], [-Pi/2, 0]], returning
/// W_bar = e^{-Gamma(t)} (R^{-1})^T W R^{-1} and Gamma(t). Coefficients and
/// Gamma are integrated on the same uniform grid with composite Simpson.
inline WPropagation propagate_w(const EnvironmentParams& env, double tau, std::size_t grid_n) {
  if (grid_n < 256) throw DomainError("propagate_w_matrix needs grid_n >= 256");
  if (!(tau >= 0.0)) throw DomainError("tau must be >= 0");
  if (tau == 0.0) return {};
  const std::size_t n = 8 * grid_n;  // even
  const double h = tau / static_cast<double>(n);
  std::vector<double> dg(n + 1), dd(n + 1), dp(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    const double s = h * static_cast<double>(k);
    const double ks = kernel_sin(env.spectral, s);
    const double kc = kernel_cos_thermal(env.spectral, s, env.temperature);
    dg[k] = std::sin(s) * ks;
    dd[k] = std::cos(s) * kc;
    dp[k] = std::sin(s) * kc;
  }
  const std::vector<double> gamma = detail::cumulative(dg, h);
  const std::vector<double> delta = detail::cumulative(dd, h);
  const std::vector<double> pi = detail::cumulative(dp, h);
  std::vector<double> two_gamma(n + 1);
  for (std::size_t k = 0; k <= n; ++k) two_gamma[k] = 2.0 * gamma[k];
  const std::vector<double> big_gamma = detail::cumulative(two_gamma, h);
  if (big_gamma[n] > 700.0) throw NumericError("propagate_w_matrix: e^{Gamma} overflows");

  Mat2 w = Mat2::Zero();
  for (std::size_t k = 0; k <= n; ++k) {
    const double s = h * static_cast<double>(k);
    Mat2 m;
    m << delta[k], -0.5 * pi[k], -0.5 * pi[k], 0.0;
    const Mat2 r = rotation(s);
    const double weight = (k == 0 || k == n) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
    w += weight * std::exp(big_gamma[k]) * (r.transpose() * m * r);
  }
  w *= h / 3.0;
  const Mat2 r_inv = rotation(tau).inverse();
  return {std::exp(-big_gamma[n]) * r_inv.transpose() * w * r_inv, big_gamma[n]};
}

inline Mat2 propagate_w_matrix(const EnvironmentParams& env, double tau, std::size_t grid_n = 256) {
  return propagate_w(env, tau, grid_n).w_bar;
}

/// sigma_t = e^{-Gamma} (R + R) sigma_0 (R + R)^T + 2 (W_bar + W_bar), the
/// characteristic-function propagation of an arbitrary two-mode CM.
inline Mat4 propagate_cm_characteristic(const TwoModeGaussianState& state, const EnvironmentParams& env, double tau,
                                        std::size_t grid_n = 256) {
  const WPropagation p = propagate_w(env, tau, grid_n);
  Mat4 rr = Mat4::Zero();
  rr.topLeftCorner<2, 2>() = rotation(tau);
  rr.bottomRightCorner<2, 2>() = rotation(tau);
  Mat4 noise = Mat4::Zero();
  noise.topLeftCorner<2, 2>() = 2.0 * p.w_bar;
  noise.bottomRightCorner<2, 2>() = 2.0 * p.w_bar;
  return std::exp(-p.gamma_int) * rr * state.cm() * rr.transpose() + noise;
}

}  // namespace bandgauss::oracle
