#pragma once

#include <cmath>
#include <limits>
#include <numbers>

#include "bandgauss/errors.hpp"
#include "bandgauss/quadrature.hpp"

namespace bandgauss {

/// Bath temperature: either an inverse temperature beta (units 1/omega0) or
/// the low-temperature limit, where coth(beta*omega/2) -> 1.
class Temperature {
public:
  static Temperature low() { return Temperature(); }

  static Temperature inverse(double beta) {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw DomainError("beta must be finite and > 0");
    Temperature t;
    t.beta_ = beta;
    return t;
  }

  bool is_low() const noexcept { return !std::isfinite(beta_); }
  /// +inf in the low-temperature limit.
  double beta() const noexcept { return beta_; }

  /// coth(beta*omega/2), the thermal weight 2N(omega)+1.
  double thermal_factor(double omega) const {
    if (is_low()) return 1.0;
    return 1.0 / std::tanh(0.5 * beta_ * omega);
  }

private:
  Temperature() = default;
  double beta_ = std::numeric_limits<double>::infinity();
};

/// Rectangular band J(w) = j0 on [omega_lo, omega_lo + delta), zero elsewhere.
/// All quantities are in units of the mode frequency omega0.
class SpectralDensity {
public:
  SpectralDensity(double j0, double omega_lo, double delta) : j0_(j0), omega_lo_(omega_lo), delta_(delta) {
    if (!(j0 > 0.0)) throw DomainError("spectral amplitude j0 must be > 0");
    if (!(delta > 0.0)) throw DomainError("bandwidth delta must be > 0");
    if (!(omega_lo >= 0.0)) throw DomainError("band start omega_lo must be >= 0");
    if (!std::isfinite(j0) || !std::isfinite(delta) || !std::isfinite(omega_lo)) {
      throw DomainError("spectral parameters must be finite");
    }
  }

  double j0() const noexcept { return j0_; }
  double omega_lo() const noexcept { return omega_lo_; }
  double delta() const noexcept { return delta_; }
  double omega_hi() const noexcept { return omega_lo_ + delta_; }
  double j0_delta() const noexcept { return j0_ * delta_; }

  double evaluate(double omega) const {
    if (!(omega >= 0.0)) throw DomainError("frequency must be >= 0");
    return (omega >= omega_lo_ && omega < omega_hi()) ? j0_ : 0.0;
  }

  friend bool operator==(const SpectralDensity&, const SpectralDensity&) = default;

private:
  double j0_;
  double omega_lo_;
  double delta_;
};

namespace detail {

// Below this value of s*(omega_lo + delta) the kernels switch to their Taylor series.
inline constexpr double kSeriesCrossover = 1e-4;

inline double sinc(double x) {
  if (std::abs(x) < 1e-4) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

inline void require_time(double s) {
  if (!(s >= 0.0)) throw DomainError("time argument must be >= 0");
}

}  // namespace detail

/// Integral over the band of J(w) sin(w s) dw.
inline double kernel_sin(const SpectralDensity& J, double s) {
  detail::require_time(s);
  const double lo = J.omega_lo();
  const double hi = J.omega_hi();
  if (s * hi < detail::kSeriesCrossover) {
    const double lo2 = lo * lo;
    const double hi2 = hi * hi;
    return J.j0() * (0.5 * s * (hi2 - lo2) - s * s * s * (hi2 * hi2 - lo2 * lo2) / 24.0);
  }
  // cos(lo s) - cos(hi s) = 2 sin(mid s) sin(delta s / 2), free of cancellation.
  const double mid = lo + 0.5 * J.delta();
  return J.j0_delta() * std::sin(mid * s) * detail::sinc(0.5 * J.delta() * s);
}

/// Integral over the band of coth(beta w / 2) J(w) cos(w s) dw. Closed form in
/// the low-temperature limit, adaptive quadrature over the band otherwise.
inline double kernel_cos_thermal(const SpectralDensity& J, double s, const Temperature& T) {
  detail::require_time(s);
  const double lo = J.omega_lo();
  const double hi = J.omega_hi();
  if (T.is_low()) {
    if (s * hi < detail::kSeriesCrossover) {
      return J.j0() * (J.delta() - s * s * (hi * hi * hi - lo * lo * lo) / 6.0);
    }
    const double mid = lo + 0.5 * J.delta();
    return J.j0_delta() * std::cos(mid * s) * detail::sinc(0.5 * J.delta() * s);
  }
  if (lo == 0.0) throw DomainError("finite-temperature kernel diverges for a band starting at omega = 0");
  auto integrand = [&](double w) { return T.thermal_factor(w) * std::cos(w * s); };
  const double period = s > 0.0 ? 2.0 * std::numbers::pi / s : J.delta();
  return J.j0() * quad::integrate_panels(integrand, lo, hi, std::min(J.delta(), period));
}

}  // namespace bandgauss
