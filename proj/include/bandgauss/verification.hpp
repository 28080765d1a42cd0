#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "bandgauss/coefficients.hpp"
#include "bandgauss/dynamics.hpp"
#include "bandgauss/entanglement.hpp"
#include "bandgauss/oracle.hpp"
#include "bandgauss/scenario.hpp"
#include "bandgauss/spectral.hpp"

namespace bandgauss {

/// Scenario used by `verify` when no config is given.
inline SweepScenario default_verify_scenario() {
  SweepScenario s;
  s.tau = {0.0, 5.0, 6};
  s.r = {0.5, 1.0};
  s.j0 = {1.0};
  s.delta = {1e-3};
  s.omega_lo = {1.0};
  s.method = Method::quadrature;
  s.mode = ModeSelection::full;
  return s;
}

namespace detail {

inline std::string label(const char* what, const EnvironmentKey& k, double tau, double r = -1.0) {
  char buf[200];
  if (r >= 0.0) {
    std::snprintf(buf, sizeof buf, "%s[j0=%g,delta=%g,omega_lo=%g,tau=%g,r=%g]", what, k.j0, k.delta, k.omega_lo, tau,
                  r);
  } else {
    std::snprintf(buf, sizeof buf, "%s[j0=%g,delta=%g,omega_lo=%g,tau=%g]", what, k.j0, k.delta, k.omega_lo, tau);
  }
  return buf;
}

// Largest Gamma the direct W(t) propagation handles without overflow risk.
inline constexpr double kOracleGammaLimit = 50.0;

}  // namespace detail

/// Oracle rows for one environment: kernels against Simpson quadrature,
/// coefficient integrals, Gamma' = 2 gamma, the W(t) propagation against the
/// closed channel output, and the PT eigenvalue against the invariant formula.
inline std::vector<oracle::OracleReport> verify_environment(const SweepScenario& s, const EnvironmentKey& key,
                                                            double tolerance_scale = 1.0) {
  using oracle::compare;
  using oracle::DeviationKind;
  const EnvironmentParams env = s.environment(key);
  const SpectralDensity& J = env.spectral;
  const double jd = J.j0_delta();
  const std::vector<double> grid = s.tau_grid();
  const double t = tolerance_scale;
  const CoefficientProfile quad_profile(env, Method::quadrature, grid.back());
  const CoefficientProfile profile(env, s.method, grid.back());
  std::vector<oracle::OracleReport> rows;

  for (double tau : grid) {
    // Kernels at s = tau.
    const double ks_ref = oracle::quad_reference(
        [&](double w) { return J.j0() * std::sin(w * tau); }, J.omega_lo(), J.omega_hi(), 1e-14 * jd);
    rows.push_back(compare(detail::label("kernel_sin", key, tau), kernel_sin(J, tau), ks_ref, 1e-10 * jd * t,
                           DeviationKind::absolute));
    const double kc_ref = oracle::quad_reference(
        [&](double w) { return J.j0() * env.temperature.thermal_factor(w) * std::cos(w * tau); }, J.omega_lo(),
        J.omega_hi(), 1e-14 * jd);
    rows.push_back(compare(detail::label("kernel_cos", key, tau), kernel_cos_thermal(J, tau, env.temperature), kc_ref,
                           1e-9 * jd * t, DeviationKind::absolute));

    if (tau > 0.0) {
      const double scale = jd * std::max(1.0, tau * tau);
      const double g_ref = oracle::quad_reference([&](double u) { return detail::d_gamma(env, u); }, 0.0, tau,
                                                  1e-13 * scale);
      rows.push_back(compare(detail::label("gamma_quad", key, tau), quad_profile.gamma(tau), g_ref, 1e-9 * scale * t,
                             DeviationKind::absolute));
      const double d_ref = oracle::quad_reference([&](double u) { return detail::d_delta(env, u); }, 0.0, tau,
                                                  1e-13 * scale);
      rows.push_back(compare(detail::label("delta_quad", key, tau), quad_profile.delta(tau), d_ref, 1e-9 * scale * t,
                             DeviationKind::absolute));

      const double h = 1e-3 * tau;
      const double fd = oracle::finite_diff([&](double u) { return gamma_int(env, u, s.method); }, tau, h);
      rows.push_back(compare(detail::label("gamma_int_derivative", key, tau), fd, 2.0 * profile.gamma(tau),
                             1e-4 * t, DeviationKind::relative, 1e-3 * jd));
    }

    const bool propagate = quad_profile.gamma_int(tau) < detail::kOracleGammaLimit;
    for (double r : s.squeezings()) {
      const auto s0 = make_twb({r});
      if (propagate && tau > 0.0) {
        const Mat4 ref = oracle::propagate_cm_characteristic(s0, env, tau, 512);
        const Mat4 out = evolve_cm_full(s0, env, tau, Method::quadrature).cm();
        const double dev = (out - ref).cwiseAbs().maxCoeff();
        rows.push_back(compare(detail::label("cm_full_vs_w_propagation", key, tau, r), dev, 0.0,
                               1e-6 * std::max(1.0, s0.cm()(0, 0)) * t, DeviationKind::absolute));
      }
      if (r <= 3.0) {
        for (ChannelMode mode : channel_modes(s.mode)) {
          const ChannelSnapshot snap = snapshot(profile, tau);
          const auto out = apply_channel(s0, snap, mode);
          const double eig = nu_min_pt(out);
          const std::string suffix = std::string("(") + std::string(to_string(mode)) + ")";
          rows.push_back(compare(detail::label(("pt_invariant_vs_eigen" + suffix).c_str(), key, tau, r),
                                 pt_eigenvalue_symmetric(invariants(out)), eig, 1e-7 * t, DeviationKind::relative));
          rows.push_back(compare(detail::label(("pt_twb_vs_eigen" + suffix).c_str(), key, tau, r),
                                 twb_pt_eigenvalue(r, snap, mode), eig, 1e-9 * t, DeviationKind::relative));
        }
      }
    }
  }
  return rows;
}

}  // namespace bandgauss
