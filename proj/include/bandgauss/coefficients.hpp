#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "bandgauss/errors.hpp"
#include "bandgauss/quadrature.hpp"
#include "bandgauss/spectral.hpp"

namespace bandgauss {

/// How master-equation coefficients are obtained: the low-temperature
/// short-time closed forms, or adaptive quadrature of the full second-order
/// integrals.
enum class Method { closed_form, quadrature };

inline std::string_view to_string(Method m) {
  return m == Method::closed_form ? "closed-form" : "quadrature";
}

inline Method parse_method(std::string_view tag) {
  if (tag == "closed" || tag == "closed-form") return Method::closed_form;
  if (tag == "quad" || tag == "quadrature") return Method::quadrature;
  throw UsageError("method", "unknown coefficient method '" + std::string(tag) + "' (expected closed|quad)");
}

/// Environment seen by each mode. Times and frequencies are in units of the
/// mode frequency (omega0 = 1).
struct EnvironmentParams {
  SpectralDensity spectral;
  Temperature temperature = Temperature::low();
};

/// Oscillatory weighted integrals of the diffusion coefficients,
/// e^{-G(t)} int_0^t e^{G(s)} X(s) trig(2(t - s)) ds.
struct SecularTerms {
  double delta_co = 0.0;
  double delta_si = 0.0;
  double pi_co = 0.0;
  double pi_si = 0.0;

  bool is_zero() const noexcept { return delta_co == 0.0 && delta_si == 0.0 && pi_co == 0.0 && pi_si == 0.0; }
};

namespace detail {

inline void require_tau(double tau) {
  if (!(tau >= 0.0)) throw DomainError("tau must be >= 0");
}

// Integrands of the s-integrals defining gamma, Delta, Pi and r.
inline double d_gamma(const EnvironmentParams& env, double s) { return std::sin(s) * kernel_sin(env.spectral, s); }
inline double d_delta(const EnvironmentParams& env, double s) {
  return std::cos(s) * kernel_cos_thermal(env.spectral, s, env.temperature);
}
inline double d_pi(const EnvironmentParams& env, double s) {
  return std::sin(s) * kernel_cos_thermal(env.spectral, s, env.temperature);
}
inline double d_r(const EnvironmentParams& env, double s) { return std::cos(s) * kernel_sin(env.spectral, s); }

// Panel width resolving the fastest oscillation of the s-integrands.
inline double coefficient_panel(const EnvironmentParams& env) {
  return std::min(1.0, std::numbers::pi / (1.0 + env.spectral.omega_hi()));
}

// Absolute tolerance 1e-12 for J0*delta >= 1, scaled down with the
// coefficient magnitude below that; relative tolerance 1e-9.
inline quad::Tolerance tolerance_for(const EnvironmentParams& env) {
  return {1e-12 * std::min(1.0, env.spectral.j0_delta()), 1e-9};
}

// Weighted integrals are dropped where G(t) - G(s) exceeds this.
inline constexpr double kWeightCutoff = 60.0;

}  // namespace detail

// Quadrature of the coefficient integrals.

inline double gamma_quad(const EnvironmentParams& env, double tau) {
  detail::require_tau(tau);
  return quad::integrate_panels([&](double s) { return detail::d_gamma(env, s); }, 0.0, tau,
                                detail::coefficient_panel(env), detail::tolerance_for(env));
}

inline double delta_quad(const EnvironmentParams& env, double tau) {
  detail::require_tau(tau);
  return quad::integrate_panels([&](double s) { return detail::d_delta(env, s); }, 0.0, tau,
                                detail::coefficient_panel(env), detail::tolerance_for(env));
}

inline double pi_quad(const EnvironmentParams& env, double tau) {
  detail::require_tau(tau);
  return quad::integrate_panels([&](double s) { return detail::d_pi(env, s); }, 0.0, tau,
                                detail::coefficient_panel(env), detail::tolerance_for(env));
}

/// Energy shift r(tau). Diagnostic only; the propagator never uses it.
inline double r_quad(const EnvironmentParams& env, double tau) {
  detail::require_tau(tau);
  return quad::integrate_panels([&](double s) { return detail::d_r(env, s); }, 0.0, tau,
                                detail::coefficient_panel(env), detail::tolerance_for(env));
}

// Low-temperature short-time closed forms. They depend on the spectrum only
// through j0*delta and omega_lo, and ignore beta.

inline double gamma_closed(const EnvironmentParams& env, double tau) {
  detail::require_tau(tau);
  return env.spectral.j0_delta() * env.spectral.omega_lo() * tau * tau * tau / 3.0;
}
inline double delta_closed(const EnvironmentParams& env, double tau) {
  detail::require_tau(tau);
  return env.spectral.j0_delta() * tau;
}
inline double pi_closed(const EnvironmentParams& env, double tau) {
  detail::require_tau(tau);
  return 0.5 * env.spectral.j0_delta() * tau * tau;
}
inline double r_closed(const EnvironmentParams& env, double tau) {
  detail::require_tau(tau);
  return 0.5 * env.spectral.j0_delta() * env.spectral.omega_lo() * tau * tau;
}
inline double gamma_int_closed(const EnvironmentParams& env, double tau) {
  detail::require_tau(tau);
  const double t2 = tau * tau;
  return env.spectral.j0_delta() * env.spectral.omega_lo() * t2 * t2 / 6.0;
}
inline double delta_gamma_closed(const EnvironmentParams& env, double tau) {
  detail::require_tau(tau);
  return 0.5 * env.spectral.j0_delta() * tau * tau;
}

/// Damping integral Gamma(tau) = 2 int_0^tau gamma.
inline double gamma_int(const EnvironmentParams& env, double tau, Method method) {
  detail::require_tau(tau);
  if (method == Method::closed_form) return gamma_int_closed(env, tau);
  // int_0^t gamma(u) du = int_0^t (t - s) gamma'(s) ds
  return 2.0 * quad::integrate_panels([&](double s) { return (tau - s) * detail::d_gamma(env, s); }, 0.0, tau,
                                      detail::coefficient_panel(env), detail::tolerance_for(env));
}

/// Coefficients as continuous functions of time on [0, tau_max].
///
/// Closed-form profiles are analytic. Quadrature profiles tabulate gamma,
/// Delta, Pi, r and Gamma on a uniform grid (at least 2048 steps) by
/// accumulating per-step adaptive integrals, and interpolate between nodes
/// with cubic Hermite polynomials built from the known derivatives.
class CoefficientProfile {
public:
  CoefficientProfile(EnvironmentParams env, Method method, double tau_max)
      : env_(std::move(env)), method_(method), tau_max_(tau_max) {
    detail::require_tau(tau_max);
    if (method_ == Method::quadrature) tabulate();
  }

  const EnvironmentParams& environment() const noexcept { return env_; }
  Method method() const noexcept { return method_; }
  double tau_max() const noexcept { return tau_max_; }

  double gamma(double s) const { return eval(Series::gamma, s); }
  double delta(double s) const { return eval(Series::delta, s); }
  double pi(double s) const { return eval(Series::pi, s); }
  double r_shift(double s) const { return eval(Series::r, s); }
  double gamma_int(double s) const { return eval(Series::big_gamma, s); }

  /// Delta_Gamma(tau). The closed-form method returns the closed form
  /// J0 delta tau^2 / 2, which neglects the e^{Gamma} weighting.
  double delta_gamma(double tau) const {
    if (method_ == Method::closed_form) return delta_gamma_closed(env_, check(tau));
    return weighted(tau, [this](double s) { return delta(s); }, [](double) { return 1.0; });
  }

  SecularTerms secular(double tau) const {
    check(tau);
    SecularTerms out;
    if (tau == 0.0) return out;
    auto co = [tau](double s) { return std::cos(2.0 * (tau - s)); };
    auto si = [tau](double s) { return std::sin(2.0 * (tau - s)); };
    auto d = [this](double s) { return delta(s); };
    auto p = [this](double s) { return pi(s); };
    out.delta_co = weighted(tau, d, co);
    out.delta_si = weighted(tau, d, si);
    out.pi_co = weighted(tau, p, co);
    out.pi_si = weighted(tau, p, si);
    return out;
  }

private:
  enum class Series { gamma, delta, pi, r, big_gamma };

  double check(double s) const {
    detail::require_tau(s);
    if (s > tau_max_ * (1.0 + 1e-12)) throw DomainError("time beyond the coefficient profile range");
    return std::min(s, tau_max_);
  }

  double eval(Series which, double s) const {
    s = check(s);
    if (method_ == Method::closed_form) {
      switch (which) {
        case Series::gamma: return gamma_closed(env_, s);
        case Series::delta: return delta_closed(env_, s);
        case Series::pi: return pi_closed(env_, s);
        case Series::r: return r_closed(env_, s);
        case Series::big_gamma: return gamma_int_closed(env_, s);
      }
    }
    const Table& t = table(which);
    if (steps_ == 0) return t.value[0];
    const double x = s / h_;
    const auto i = std::min(static_cast<std::size_t>(x), steps_ - 1);
    const double u = x - static_cast<double>(i);
    const double u2 = u * u;
    const double u3 = u2 * u;
    const double h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
    const double h10 = u3 - 2.0 * u2 + u;
    const double h01 = -2.0 * u3 + 3.0 * u2;
    const double h11 = u3 - u2;
    return h00 * t.value[i] + h10 * h_ * t.slope[i] + h01 * t.value[i + 1] + h11 * h_ * t.slope[i + 1];
  }

  // Lower integration limit below which e^{G(s) - G(tau)} is negligible.
  double weight_floor(double tau) const {
    const double target = gamma_int(tau) - detail::kWeightCutoff;
    if (target <= 0.0) return 0.0;
    if (method_ == Method::closed_form) {
      const double rate = env_.spectral.j0_delta() * env_.spectral.omega_lo();
      return std::min(tau, std::sqrt(std::sqrt(6.0 * target / rate)));
    }
    // running_max_ is non-decreasing; last node whose prefix max stays below target.
    const auto it = std::lower_bound(running_max_.begin(), running_max_.end(), target);
    if (it == running_max_.begin()) return 0.0;
    const auto idx = static_cast<std::size_t>(std::distance(running_max_.begin(), it)) - 1;
    return std::min(tau, h_ * static_cast<double>(idx));
  }

  template <class X, class W>
  double weighted(double tau, X&& x, W&& w) const {
    check(tau);
    if (tau == 0.0) return 0.0;
    const double g_tau = gamma_int(tau);
    auto integrand = [&](double s) { return std::exp(gamma_int(s) - g_tau) * x(s) * w(s); };
    return quad::integrate_panels(integrand, weight_floor(tau), tau, 0.5 * std::numbers::pi,
                                  detail::tolerance_for(env_));
  }

  struct Table {
    std::vector<double> value;
    std::vector<double> slope;
  };

  const Table& table(Series which) const {
    switch (which) {
      case Series::gamma: return gamma_;
      case Series::delta: return delta_;
      case Series::pi: return pi_;
      case Series::r: return r_;
      case Series::big_gamma: break;
    }
    return big_gamma_;
  }

  void tabulate() {
    const double rate = 1.0 + env_.spectral.omega_hi();
    steps_ = tau_max_ == 0.0 ? 0
                             : std::max<std::size_t>(2048, static_cast<std::size_t>(std::ceil(tau_max_ * rate / 0.2)));
    h_ = steps_ == 0 ? 0.0 : tau_max_ / static_cast<double>(steps_);
    for (Table* t : {&gamma_, &delta_, &pi_, &r_, &big_gamma_}) {
      t->value.assign(steps_ + 1, 0.0);
      t->slope.assign(steps_ + 1, 0.0);
    }
    const quad::Tolerance tol{1e-15 * std::min(1.0, env_.spectral.j0_delta()), 1e-11};
    auto node = [this](std::size_t i) { return h_ * static_cast<double>(i); };
    auto fill_slopes = [&](std::size_t i) {
      const double s = node(i);
      gamma_.slope[i] = detail::d_gamma(env_, s);
      delta_.slope[i] = detail::d_delta(env_, s);
      pi_.slope[i] = detail::d_pi(env_, s);
      r_.slope[i] = detail::d_r(env_, s);
    };
    fill_slopes(0);
    for (std::size_t i = 0; i < steps_; ++i) {
      const double a = node(i);
      const double b = (i + 1 == steps_) ? tau_max_ : node(i + 1);
      auto step = [&](auto&& f) { return quad::integrate(f, a, b, tol).value; };
      gamma_.value[i + 1] = gamma_.value[i] + step([&](double s) { return detail::d_gamma(env_, s); });
      delta_.value[i + 1] = delta_.value[i] + step([&](double s) { return detail::d_delta(env_, s); });
      pi_.value[i + 1] = pi_.value[i] + step([&](double s) { return detail::d_pi(env_, s); });
      r_.value[i + 1] = r_.value[i] + step([&](double s) { return detail::d_r(env_, s); });
      // int_a^b gamma = (b - a) gamma(a) + int_a^b (b - s) gamma'(s) ds
      big_gamma_.value[i + 1] =
          big_gamma_.value[i] +
          2.0 * ((b - a) * gamma_.value[i] + step([&](double s) { return (b - s) * detail::d_gamma(env_, s); }));
      fill_slopes(i + 1);
    }
    for (std::size_t i = 0; i <= steps_; ++i) big_gamma_.slope[i] = 2.0 * gamma_.value[i];
    running_max_.resize(steps_ + 1);
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i <= steps_; ++i) running_max_[i] = m = std::max(m, big_gamma_.value[i]);
  }

  EnvironmentParams env_;
  Method method_;
  double tau_max_;
  std::size_t steps_ = 0;
  double h_ = 0.0;
  Table gamma_, delta_, pi_, r_, big_gamma_;
  std::vector<double> running_max_;
};

/// Delta_Gamma(tau) = e^{-Gamma(tau)} int_0^tau e^{Gamma(s)} Delta(s) ds.
inline double delta_gamma(const EnvironmentParams& env, double tau, Method method) {
  detail::require_tau(tau);
  if (method == Method::closed_form) return delta_gamma_closed(env, tau);
  return CoefficientProfile(env, method, tau).delta_gamma(tau);
}

inline SecularTerms secular_coeffs(const EnvironmentParams& env, double tau, Method method) {
  detail::require_tau(tau);
  return CoefficientProfile(env, method, tau).secular(tau);
}

/// All coefficients sampled on a time grid.
struct CoefficientTrace {
  Method method = Method::closed_form;
  std::vector<double> tau_grid;
  std::vector<double> gamma, delta_coef, pi_coef, r_shift;
  std::vector<double> gamma_int, delta_gamma;
  std::vector<double> sec_delta_co, sec_delta_si, sec_pi_co, sec_pi_si;

  std::size_t size() const noexcept { return tau_grid.size(); }

  SecularTerms secular_at(std::size_t i) const {
    return {sec_delta_co.at(i), sec_delta_si.at(i), sec_pi_co.at(i), sec_pi_si.at(i)};
  }
};

/// Samples every coefficient on an ascending grid of non-negative times.
inline CoefficientTrace make_trace(const EnvironmentParams& env, std::vector<double> tau_grid, Method method) {
  if (tau_grid.empty()) throw UsageError("tau", "time grid is empty");
  for (std::size_t i = 0; i < tau_grid.size(); ++i) {
    detail::require_tau(tau_grid[i]);
    if (i > 0 && !(tau_grid[i] > tau_grid[i - 1])) throw UsageError("tau", "time grid must be strictly ascending");
  }
  const CoefficientProfile profile(env, method, tau_grid.back());
  CoefficientTrace tr;
  tr.method = method;
  const std::size_t n = tau_grid.size();
  for (auto* v : {&tr.gamma, &tr.delta_coef, &tr.pi_coef, &tr.r_shift, &tr.gamma_int, &tr.delta_gamma,
                  &tr.sec_delta_co, &tr.sec_delta_si, &tr.sec_pi_co, &tr.sec_pi_si}) {
    v->resize(n);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double t = tau_grid[i];
    tr.gamma[i] = profile.gamma(t);
    tr.delta_coef[i] = profile.delta(t);
    tr.pi_coef[i] = profile.pi(t);
    tr.r_shift[i] = profile.r_shift(t);
    tr.gamma_int[i] = profile.gamma_int(t);
    tr.delta_gamma[i] = profile.delta_gamma(t);
    const SecularTerms sec = profile.secular(t);
    tr.sec_delta_co[i] = sec.delta_co;
    tr.sec_delta_si[i] = sec.delta_si;
    tr.sec_pi_co[i] = sec.pi_co;
    tr.sec_pi_si[i] = sec.pi_si;
  }
  tr.tau_grid = std::move(tau_grid);
  return tr;
}

}  // namespace bandgauss
