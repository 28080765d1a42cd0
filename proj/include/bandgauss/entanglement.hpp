#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "bandgauss/coefficients.hpp"
#include "bandgauss/dynamics.hpp"
#include "bandgauss/errors.hpp"

namespace bandgauss {

/// I1 = det A, I3 = det C, I4 = det sigma of a symmetric two-mode state.
struct SymplecticInvariants {
  double i1 = 0.0;
  double i3 = 0.0;
  double i4 = 0.0;
};

inline SymplecticInvariants invariants(const TwoModeGaussianState& state) {
  const Mat2 a = state.block_a();
  const Mat2 b = state.block_b();
  const double eps = 1e-12 * std::max(1.0, state.cm().cwiseAbs().maxCoeff());
  if ((a - b).cwiseAbs().maxCoeff() > eps) {
    throw UnsupportedStateError("invariants need identical diagonal blocks");
  }
  return {a.determinant(), state.block_c().determinant(), state.cm().determinant()};
}

namespace detail {

inline double clamp_radicand(double x, const char* what, double scale = 1.0) {
  if (x >= 0.0) return x;
  if (x > -1e-12 * std::max(1.0, scale)) return 0.0;
  throw NumericError(std::string("negative radicand in ") + what + " (unphysical input)");
}

// I1 - I3 - sqrt((I1 - I3)^2 - I4), rationalized so it stays accurate when
// the result is tiny compared to I1 - I3.
inline double pt_radicand(const SymplecticInvariants& inv, const char* what) {
  const double x = inv.i1 - inv.i3;
  const double root = std::sqrt(clamp_radicand(x * x - inv.i4, what));
  if (x <= 0.0) return clamp_radicand(x - root, what);
  const double denom = x + root;
  return clamp_radicand(denom > 0.0 ? inv.i4 / denom : 0.0, what);
}

}  // namespace detail

/// kappa = sqrt(2) sqrt(I1 - I3 - sqrt((I1 - I3)^2 - I4)), prefactor as printed.
inline double kappa_symmetric(const SymplecticInvariants& inv) {
  return std::sqrt(2.0) * std::sqrt(detail::pt_radicand(inv, "kappa_symmetric"));
}

/// Exact minimum symplectic eigenvalue of the partial transpose of a
/// symmetric state, same expression without the sqrt(2).
inline double pt_eigenvalue_symmetric(const SymplecticInvariants& inv) {
  return std::sqrt(detail::pt_radicand(inv, "pt_eigenvalue_symmetric"));
}

/// Secular-approximation kappa in closed form:
/// (tau^2 J0 delta + exp(-2r - tau^4 J0 delta Omega / 6)) / 2.
inline double kappa_secular_paper(double r, double j0_delta, double omega_lo, double tau) {
  if (!(r >= 0.0 && j0_delta >= 0.0 && omega_lo >= 0.0 && tau >= 0.0)) {
    throw DomainError("kappa_secular_paper parameters must be >= 0");
  }
  const double t2 = tau * tau;
  return 0.5 * (t2 * j0_delta + std::exp(-2.0 * r - t2 * t2 * j0_delta * omega_lo / 6.0));
}

/// Minimum symplectic eigenvalue of the partially transposed state, by
/// eigen-decomposition of i Omega sigma~ (p2 sign flipped). Works for any
/// two-mode CM; result is in the state's own units.
inline double nu_min_pt(const TwoModeGaussianState& state) {
  Mat4 flip = Mat4::Identity();
  flip(3, 3) = -1.0;
  const Mat4 pt = flip * state.cm() * flip;
  const Eigen::Matrix4cd m = std::complex<double>(0.0, 1.0) * (symplectic_form() * pt).cast<std::complex<double>>();
  Eigen::ComplexEigenSolver<Eigen::Matrix4cd> es(m, false);
  if (es.info() != Eigen::Success) throw NumericError("eigen-decomposition failed in nu_min_pt");
  return es.eigenvalues().cwiseAbs().minCoeff();
}

namespace detail {

// PT of the TWB channel output, moved by the symplectic map (R + R^T)^{-1}
// and a 50:50 beam splitter into blocks [[U, V], [V, W]] with
// U = e^{-G}(a + c) I + S, W = e^{-G}(a - c) I + S. The squeezing then sits
// on the diagonal and the determinant comes from a Schur complement of the
// larger block without cancellation.
struct TwbPtFrame {
  Mat2 u, v, w;
};

inline TwbPtFrame twb_pt_frame(double r, const ChannelSnapshot& snap, ChannelMode mode, VacuumNormalization norm) {
  if (!(r >= 0.0) || !std::isfinite(r)) throw DomainError("squeezing r must be finite and >= 0");
  const double vac = vacuum_variance(norm);
  const double damp = std::exp(-snap.gamma_int);
  const Mat2 rot = rotation(snap.rotation_angle);
  const Mat2 noise = noise_block(snap, mode);
  Mat2 flip = Mat2::Identity();
  flip(1, 1) = -1.0;
  const Mat2 n1 = rot.transpose() * noise * rot;
  const Mat2 n2 = rot * (flip * noise * flip) * rot.transpose();
  const Mat2 s = 0.5 * (n1 + n2);
  return {damp * vac * std::exp(2.0 * r) * Mat2::Identity() + s, 0.5 * (n2 - n1),
          damp * vac * std::exp(-2.0 * r) * Mat2::Identity() + s};
}

inline double twb_det(const TwbPtFrame& f) {
  const bool u_big = f.u.trace() >= f.w.trace();
  const Mat2& big = u_big ? f.u : f.w;
  const Mat2& small = u_big ? f.w : f.u;
  return big.determinant() * (small - f.v.transpose() * big.inverse() * f.v).determinant();
}

inline Mat2 adjugate(const Mat2& m) {
  Mat2 a;
  a << m(1, 1), -m(0, 1), -m(1, 0), m(0, 0);
  return a;
}

// Delta^2 - 4 det = (nu+^2 - nu-^2)^2, expanded so the near-degenerate case
// (r -> 0) does not cancel at O(1).
inline double twb_split(const TwbPtFrame& f) {
  const double du = f.u.determinant();
  const double dw = f.w.determinant();
  const double cross = f.v.determinant() * (du + dw) + (adjugate(f.w) * f.v.transpose() * adjugate(f.u) * f.v).trace();
  return (du - dw) * (du - dw) + 4.0 * cross;
}

}  // namespace detail

/// Invariants of the channel output for a TWB input, with I4 computed in a
/// frame where it does not cancel. Agrees with invariants(apply_channel(...))
/// wherever the latter is accurate, and stays accurate for large r.
inline SymplecticInvariants twb_invariants(double r, const ChannelSnapshot& snap, ChannelMode mode,
                                           VacuumNormalization norm = VacuumNormalization::unit) {
  const double vac = vacuum_variance(norm);
  const double damp = std::exp(-snap.gamma_int);
  const Mat2 a_t = vac * std::cosh(2.0 * r) * damp * Mat2::Identity() + noise_block(snap, mode);
  const double c = vac * std::sinh(2.0 * r) * damp;
  return {a_t.determinant(), -c * c, detail::twb_det(detail::twb_pt_frame(r, snap, mode, norm))};
}

/// Minimum PT symplectic eigenvalue of the channel output for a TWB input.
inline double twb_pt_eigenvalue(double r, const ChannelSnapshot& snap, ChannelMode mode,
                                VacuumNormalization norm = VacuumNormalization::unit) {
  const detail::TwbPtFrame f = detail::twb_pt_frame(r, snap, mode, norm);
  const double det = detail::twb_det(f);
  const double sum = f.u.determinant() + f.w.determinant() + 2.0 * f.v.determinant();
  const double root = std::sqrt(detail::clamp_radicand(detail::twb_split(f), "twb_pt_eigenvalue", sum * sum));
  const double denom = sum + root;
  return std::sqrt(detail::clamp_radicand(denom > 0.0 ? 2.0 * det / denom : 0.0, "twb_pt_eigenvalue", sum));
}

/// E_N = max(0, -2 ln kappa). Natural logarithm.
inline double negativity(double kappa) {
  if (!(kappa > 0.0)) throw DomainError("kappa must be > 0");
  return std::max(0.0, -2.0 * std::log(kappa));
}

/// Where kappa values come from.
///  - paper: secular closed form when applicable, otherwise the exact PT
///    eigenvalue of the half-vacuum-normalized TWB after the channel (the
///    normalization in which the closed form is that eigenvalue).
///  - symmetric: the printed sqrt(2) invariant formula on the unit-vacuum TWB.
///  - oracle: eigen-decomposition (nu_min_pt) of the unit-vacuum TWB.
enum class KappaSource { symmetric, paper, oracle };

inline std::string_view to_string(KappaSource k) {
  switch (k) {
    case KappaSource::symmetric: return "symmetric";
    case KappaSource::paper: return "paper";
    case KappaSource::oracle: return "oracle";
  }
  return "paper";
}

inline KappaSource parse_kappa_source(std::string_view tag) {
  if (tag == "symmetric" || tag == "symmetric-invariants") return KappaSource::symmetric;
  if (tag == "paper" || tag == "secular-paper") return KappaSource::paper;
  if (tag == "oracle" || tag == "pt-oracle") return KappaSource::oracle;
  throw UsageError("kappa", "unknown kappa source '" + std::string(tag) + "' (expected symmetric|paper|oracle)");
}

/// kappa of a TWB(r) after the channel described by `snap`.
inline double kappa_twb(KappaSource source, double r, const ChannelSnapshot& snap, ChannelMode mode) {
  switch (source) {
    case KappaSource::paper: return twb_pt_eigenvalue(r, snap, mode, VacuumNormalization::half);
    case KappaSource::symmetric: return kappa_symmetric(twb_invariants(r, snap, mode, VacuumNormalization::unit));
    case KappaSource::oracle: return nu_min_pt(apply_channel(make_twb({r}), snap, mode));
  }
  throw UsageError("kappa", "unknown kappa source");
}

/// Which kappa curve the sudden-death search follows.
enum class DeathSource { secular_closed_form, full };

struct SuddenDeathOptions {
  double tau_max = 100.0;
  double tolerance = 1e-6;
  double scan_step = 0.01;
  Method method = Method::closed_form;
};

namespace detail {

// Last upward crossing of kappa = 1 on [0, tau_max]; nullopt if kappa never
// returns to >= 1 after being below it.
inline std::optional<double> last_threshold_crossing(const std::function<double(double)>& kappa,
                                                     const SuddenDeathOptions& opt) {
  if (!(opt.tau_max > 0.0) || !(opt.tolerance > 0.0) || !(opt.scan_step > 0.0)) {
    throw DomainError("sudden-death options must be positive");
  }
  const auto n = static_cast<std::size_t>(std::ceil(opt.tau_max / opt.scan_step));
  const double h = opt.tau_max / static_cast<double>(n);
  std::optional<std::size_t> last_entangled;
  for (std::size_t i = 0; i <= n; ++i) {
    if (kappa(h * static_cast<double>(i)) < 1.0) last_entangled = i;
  }
  if (!last_entangled || *last_entangled == n) return std::nullopt;
  double lo = h * static_cast<double>(*last_entangled);
  double hi = h * static_cast<double>(*last_entangled + 1);
  while (hi - lo >= opt.tolerance) {
    const double mid = 0.5 * (lo + hi);
    (kappa(mid) < 1.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Sudden-death time of an arbitrary kappa curve (threshold kappa = 1).
inline std::optional<double> sudden_death_time(const std::function<double(double)>& kappa,
                                               const SuddenDeathOptions& opt = {}) {
  return detail::last_threshold_crossing(kappa, opt);
}

/// Time after which E_N is zero for good (kappa >= 1 through tau_max), found
/// by scanning for the last kappa = 1 crossing and bisecting it. nullopt when
/// there is no such transition inside the horizon.
inline std::optional<double> sudden_death_time(double r, double j0_delta, double omega_lo, DeathSource source,
                                               const SuddenDeathOptions& opt = {}) {
  if (!(r >= 0.0 && j0_delta >= 0.0 && omega_lo >= 0.0)) throw DomainError("sudden-death parameters must be >= 0");
  if (j0_delta == 0.0) return std::nullopt;
  if (source == DeathSource::secular_closed_form) {
    return detail::last_threshold_crossing(
        [&](double t) { return kappa_secular_paper(r, j0_delta, omega_lo, t); }, opt);
  }
  const CoefficientProfile profile(EnvironmentParams{SpectralDensity(1.0, omega_lo, j0_delta)}, opt.method,
                                   opt.tau_max);
  return detail::last_threshold_crossing(
      [&](double t) {
        return twb_pt_eigenvalue(r, snapshot(profile, t), ChannelMode::full, VacuumNormalization::half);
      },
      opt);
}

}  // namespace bandgauss
