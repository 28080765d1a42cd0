#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "bandgauss/coefficients.hpp"
#include "bandgauss/errors.hpp"

namespace bandgauss {

using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat4 = Eigen::Matrix4d;

/// Covariance convention. `unit`: vacuum CM is the identity (TWB a = cosh 2r).
/// `half`: vacuum CM is I/2, the convention of chi(z) = exp(-z^T sigma z / 2)
/// with X = (a + a^dag)/sqrt(2).
enum class VacuumNormalization { unit, half };

inline double vacuum_variance(VacuumNormalization n) { return n == VacuumNormalization::unit ? 1.0 : 0.5; }

/// Whether the oscillatory secular terms are kept in the diagonal blocks.
enum class ChannelMode { secular, full };

inline std::string_view to_string(ChannelMode m) { return m == ChannelMode::secular ? "secular" : "full"; }

/// Symplectic form, direct sum of [[0, 1], [-1, 0]] per mode.
inline Mat4 symplectic_form() {
  Mat4 w = Mat4::Zero();
  w(0, 1) = 1.0;
  w(1, 0) = -1.0;
  w(2, 3) = 1.0;
  w(3, 2) = -1.0;
  return w;
}

/// Two-mode Gaussian state: quadrature means (x1, p1, x2, p2) and the 4x4
/// covariance matrix.
class TwoModeGaussianState {
public:
  /// Validated construction: symmetric to 1e-12, positive semidefinite to
  /// -1e-10, and sigma + i v Omega >= -1e-8 with v the vacuum variance.
  static TwoModeGaussianState create(const Vec4& mean, const Mat4& cm,
                                     VacuumNormalization norm = VacuumNormalization::unit) {
    if ((cm - cm.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw DomainError("covariance matrix is not symmetric");
    TwoModeGaussianState s(mean, cm, norm);
    if (s.min_eigenvalue() < -1e-10) throw DomainError("covariance matrix is not positive semidefinite");
    if (s.uncertainty_margin() < -1e-8) throw DomainError("covariance matrix violates the uncertainty relation");
    return s;
  }

  /// No physicality checks. Used for channel outputs and oracles.
  static TwoModeGaussianState unchecked(const Vec4& mean, const Mat4& cm,
                                        VacuumNormalization norm = VacuumNormalization::unit) {
    return TwoModeGaussianState(mean, cm, norm);
  }

  const Vec4& mean() const noexcept { return mean_; }
  const Mat4& cm() const noexcept { return cm_; }
  VacuumNormalization normalization() const noexcept { return norm_; }

  Mat2 block_a() const { return cm_.topLeftCorner<2, 2>(); }
  Mat2 block_b() const { return cm_.bottomRightCorner<2, 2>(); }
  Mat2 block_c() const { return cm_.topRightCorner<2, 2>(); }

  double min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Mat4> es(cm_, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }

  /// Smallest eigenvalue of the Hermitian matrix sigma + i v Omega.
  double uncertainty_margin() const {
    const Eigen::Matrix4cd h =
        cm_.cast<std::complex<double>>() + std::complex<double>(0.0, vacuum_variance(norm_)) * symplectic_form();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }

  bool is_physical() const {
    return (cm_ - cm_.transpose()).cwiseAbs().maxCoeff() <= 1e-12 && min_eigenvalue() >= -1e-10 &&
           uncertainty_margin() >= -1e-8;
  }

private:
  TwoModeGaussianState(const Vec4& mean, const Mat4& cm, VacuumNormalization norm)
      : mean_(mean), cm_(cm), norm_(norm) {}

  Vec4 mean_;
  Mat4 cm_;
  VacuumNormalization norm_;
};

/// Twin-beam (two-mode squeezed vacuum) with squeezing r.
struct TwbSpec {
  double r = 0.0;
};

inline TwoModeGaussianState make_twb(const TwbSpec& spec, VacuumNormalization norm = VacuumNormalization::unit) {
  if (!(spec.r >= 0.0) || !std::isfinite(spec.r)) throw DomainError("squeezing r must be finite and >= 0");
  const double v = vacuum_variance(norm);
  const double a = v * std::cosh(2.0 * spec.r);
  const double c = v * std::sinh(2.0 * spec.r);
  Mat4 cm = Mat4::Zero();
  cm.diagonal().setConstant(a);
  cm(0, 2) = cm(2, 0) = c;
  cm(1, 3) = cm(3, 1) = -c;
  return TwoModeGaussianState::unchecked(Vec4::Zero(), cm, norm);
}

/// Free rotation of one mode over dimensionless time tau.
inline Mat2 rotation(double tau) {
  Mat2 r;
  r << std::cos(tau), std::sin(tau), -std::sin(tau), std::cos(tau);
  return r;
}

/// Channel parameters at one instant.
struct ChannelSnapshot {
  double tau = 0.0;
  double gamma_int = 0.0;
  double delta_gamma = 0.0;
  SecularTerms secular;
  double rotation_angle = 0.0;
};

inline ChannelSnapshot snapshot(const CoefficientProfile& profile, double tau) {
  return {tau, profile.gamma_int(tau), profile.delta_gamma(tau), profile.secular(tau), tau};
}

/// As above, skipping the secular integrals when `mode` does not use them.
inline ChannelSnapshot snapshot(const CoefficientProfile& profile, double tau, ChannelMode mode) {
  if (mode == ChannelMode::full) return snapshot(profile, tau);
  return {tau, profile.gamma_int(tau), profile.delta_gamma(tau), {}, tau};
}

inline ChannelSnapshot snapshot(const EnvironmentParams& env, double tau, Method method) {
  detail::require_tau(tau);
  return snapshot(CoefficientProfile(env, method, tau), tau);
}

inline ChannelSnapshot snapshot(const CoefficientTrace& trace, std::size_t i) {
  const double t = trace.tau_grid.at(i);
  return {t, trace.gamma_int.at(i), trace.delta_gamma.at(i), trace.secular_at(i), t};
}

/// Additive noise block of one mode: Delta_Gamma on the diagonal, plus the
/// secular corrections in full mode.
inline Mat2 noise_block(const ChannelSnapshot& snap, ChannelMode mode) {
  Mat2 n = snap.delta_gamma * Mat2::Identity();
  if (mode == ChannelMode::full) {
    const SecularTerms& s = snap.secular;
    const double diag = s.delta_co - s.pi_si;
    const double off = -(s.delta_si + s.pi_co);
    n(0, 0) += diag;
    n(1, 1) -= diag;
    n(0, 1) = n(1, 0) = off;
  }
  return n;
}

namespace detail {

inline Vec4 rotate_damp_mean(const Vec4& mean, const ChannelSnapshot& snap) {
  const Mat2 r = rotation(snap.rotation_angle);
  const double k = std::exp(-0.5 * snap.gamma_int);
  Vec4 out;
  out.head<2>() = k * r * mean.head<2>();
  out.tail<2>() = k * r * mean.tail<2>();
  return out;
}

struct SymmetricForm {
  double a;
  double c;
};

// Extracts (a, c) from A0 = B0 = a I, C0 = diag(c, -c).
inline SymmetricForm symmetric_form(const TwoModeGaussianState& state) {
  const Mat4& m = state.cm();
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double eps = 1e-12 * scale;
  const Mat2 a = state.block_a();
  const Mat2 b = state.block_b();
  const Mat2 c = state.block_c();
  const bool ok = std::abs(a(0, 1)) <= eps && std::abs(a(1, 0)) <= eps && std::abs(a(0, 0) - a(1, 1)) <= eps &&
                  (a - b).cwiseAbs().maxCoeff() <= eps && std::abs(c(0, 1)) <= eps && std::abs(c(1, 0)) <= eps &&
                  std::abs(c(0, 0) + c(1, 1)) <= eps;
  if (!ok) {
    throw UnsupportedStateError("channel formulas need A0 = B0 = a I and C0 = diag(c, -c)");
  }
  return {a(0, 0), c(0, 0)};
}

}  // namespace detail

/// Mean after the channel: e^{-Gamma/2} (R + R) mean.
inline Vec4 evolve_mean(const TwoModeGaussianState& state, const ChannelSnapshot& snap) {
  if (!(snap.gamma_int >= 0.0)) throw DomainError("damping integral Gamma must be >= 0");
  return detail::rotate_damp_mean(state.mean(), snap);
}

/// Applies the channel to a symmetric two-mode state. Both modes see identical
/// independent environments, so both diagonal blocks of the output are equal.
///
/// Noise blocks follow the W-matrix propagator: off-diagonal entry
/// -(Delta_si + Pi_co). C_t is R C0 R^T with the same rotation as the mean.
inline TwoModeGaussianState apply_channel(const TwoModeGaussianState& state, const ChannelSnapshot& snap,
                                          ChannelMode mode) {
  const detail::SymmetricForm f = detail::symmetric_form(state);
  const double damp = std::exp(-snap.gamma_int);
  const Mat2 a_t = f.a * damp * Mat2::Identity() + noise_block(snap, mode);
  const double two_tau = 2.0 * snap.rotation_angle;
  const double ce = f.c * damp;
  Mat2 c_t;
  c_t << ce * std::cos(two_tau), -ce * std::sin(two_tau), -ce * std::sin(two_tau), -ce * std::cos(two_tau);
  Mat4 cm;
  cm << a_t, c_t, c_t.transpose(), a_t;
  return TwoModeGaussianState::unchecked(detail::rotate_damp_mean(state.mean(), snap), cm, state.normalization());
}

inline TwoModeGaussianState evolve_cm_full(const TwoModeGaussianState& state, const EnvironmentParams& env,
                                           double tau, Method method = Method::closed_form) {
  detail::symmetric_form(state);
  return apply_channel(state, snapshot(env, tau, method), ChannelMode::full);
}

/// Secular approximation: A_t = A0 e^{-Gamma} + Delta_Gamma I.
inline TwoModeGaussianState evolve_cm_secular(const TwoModeGaussianState& state, const EnvironmentParams& env,
                                              double tau, Method method = Method::closed_form) {
  detail::symmetric_form(state);
  detail::require_tau(tau);
  ChannelSnapshot snap{tau, gamma_int(env, tau, method), delta_gamma(env, tau, method), {}, tau};
  return apply_channel(state, snap, ChannelMode::secular);
}

}  // namespace bandgauss
