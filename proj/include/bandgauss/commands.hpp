#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "bandgauss/coefficients.hpp"
#include "bandgauss/csv.hpp"
#include "bandgauss/dynamics.hpp"
#include "bandgauss/entanglement.hpp"
#include "bandgauss/scenario.hpp"
#include "bandgauss/verification.hpp"

#ifndef BANDGAUSS_VERSION
#define BANDGAUSS_VERSION "0.0.0"
#endif

namespace bandgauss {

struct CommandOutput {
  csv::Table table;
  nlohmann::ordered_json meta;
  std::vector<std::string> warnings;
  bool ok = true;
};

/// out[i] = fn(i) on up to `jobs` threads; results land by index so the
/// order never depends on scheduling. The first exception (by index) is
/// rethrown.
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t n, int jobs, Fn&& fn) {
  std::vector<std::optional<T>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto threads = static_cast<std::size_t>(std::max(1, jobs));
  if (threads == 1 || n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(threads, n); ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  std::vector<T> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    out.push_back(std::move(*slots[i]));
  }
  return out;
}

namespace detail {

inline double beta_cell(const SweepScenario& s) {
  return s.beta ? *s.beta : std::numeric_limits<double>::infinity();
}

inline nlohmann::ordered_json base_meta(const char* command, const SweepScenario& s) {
  nlohmann::ordered_json m;
  m["command"] = command;
  m["library_version"] = BANDGAUSS_VERSION;
  m["scenario"] = to_json(s);
  m["log_base"] = "e";
  m["negativity"] = "E_N = max(0, -2 ln kappa)";
  const std::vector<double> grid = s.tau_grid();
  m["tau_grid"] = {{"points", grid.size()}, {"first", grid.front()}, {"last", grid.back()}};
  m["row_order"] = "parameter tuple ascending, then tau";
  return m;
}

inline std::vector<std::unique_ptr<CoefficientProfile>> build_profiles(const SweepScenario& s,
                                                                      const std::vector<EnvironmentKey>& envs,
                                                                      double tau_max) {
  return parallel_map<std::unique_ptr<CoefficientProfile>>(envs.size(), s.jobs, [&](std::size_t i) {
    return std::make_unique<CoefficientProfile>(s.environment(envs[i]), s.method, tau_max);
  });
}

// (environment index, r) work items in output order: r, then environment.
struct Curve {
  std::size_t env;
  double r;
};

inline std::vector<Curve> curves(const SweepScenario& s, const std::vector<EnvironmentKey>& envs) {
  std::vector<Curve> out;
  for (double r : s.squeezings()) {
    for (std::size_t e = 0; e < envs.size(); ++e) out.push_back({e, r});
  }
  return out;
}

}  // namespace detail

/// kappa for a TWB(r) after the channel, honoring the scenario's kappa
/// source. With the paper source, secular mode and closed forms this is the
/// printed closed-form expression itself.
inline double scenario_kappa(const SweepScenario& s, const CoefficientProfile& profile, double r, ChannelMode mode,
                             double tau) {
  if (s.kappa == KappaSource::paper && mode == ChannelMode::secular && s.method == Method::closed_form) {
    const SpectralDensity& J = profile.environment().spectral;
    return kappa_secular_paper(r, J.j0_delta(), J.omega_lo(), tau);
  }
  return kappa_twb(s.kappa, r, snapshot(profile, tau, mode), mode);
}

inline CommandOutput cmd_coefficients(const SweepScenario& s) {
  validate(s);
  CommandOutput out;
  out.warnings = regime_warnings(s);
  out.table.header = {"tau",      "j0",        "delta",       "omega_lo", "beta",     "gamma",
                      "delta_t",  "pi",        "r_shift",     "gamma_int", "delta_gamma", "delta_co",
                      "delta_si", "pi_co",     "pi_si",       "method"};
  const auto envs = s.environments();
  const auto grid = s.tau_grid();
  const auto profiles = detail::build_profiles(s, envs, grid.back());
  const std::string method(to_string(s.method));
  const auto blocks = parallel_map<csv::Table>(envs.size(), s.jobs, [&](std::size_t e) {
    csv::Table t{out.table.header, {}};
    const CoefficientProfile& p = *profiles[e];
    for (double tau : grid) {
      const SecularTerms sec = p.secular(tau);
      t.add({tau, envs[e].j0, envs[e].delta, envs[e].omega_lo, detail::beta_cell(s), p.gamma(tau), p.delta(tau),
             p.pi(tau), p.r_shift(tau), p.gamma_int(tau), p.delta_gamma(tau), sec.delta_co, sec.delta_si, sec.pi_co,
             sec.pi_si, method});
    }
    return t;
  });
  for (const auto& b : blocks) out.table.append(b);
  out.meta = detail::base_meta("coefficients", s);
  out.meta["columns"] = out.table.header;
  return out;
}

/// Covariance blocks of the channel output for each (r, environment, mode, tau).
inline CommandOutput cmd_evolve(const SweepScenario& s) {
  validate(s);
  CommandOutput out;
  out.warnings = regime_warnings(s);
  out.table.header = {"tau", "r",   "j0",  "delta", "omega_lo", "beta", "mode",  "method",       "a11",
                      "a12", "a22", "c11", "c12",   "c21",      "c22",  "kappa", "kappa_source"};
  const auto envs = s.environments();
  const auto grid = s.tau_grid();
  const auto profiles = detail::build_profiles(s, envs, grid.back());
  const auto work = detail::curves(s, envs);
  const std::string method(to_string(s.method));
  const std::string source(to_string(s.kappa));
  const auto blocks = parallel_map<csv::Table>(work.size(), s.jobs, [&](std::size_t i) {
    csv::Table t{out.table.header, {}};
    const auto& [e, r] = work[i];
    const CoefficientProfile& p = *profiles[e];
    const auto s0 = make_twb({r});
    for (ChannelMode mode : channel_modes(s.mode)) {
      for (double tau : grid) {
        const ChannelSnapshot snap = snapshot(p, tau, mode);
        const auto st = apply_channel(s0, snap, mode);
        const Mat2 a = st.block_a();
        const Mat2 c = st.block_c();
        t.add({tau, r, envs[e].j0, envs[e].delta, envs[e].omega_lo, detail::beta_cell(s), std::string(to_string(mode)),
               method, a(0, 0), a(0, 1), a(1, 1), c(0, 0), c(0, 1), c(1, 0), c(1, 1),
               scenario_kappa(s, p, r, mode, tau), source});
      }
    }
    return t;
  });
  for (const auto& b : blocks) out.table.append(b);
  out.meta = detail::base_meta("evolve", s);
  out.meta["columns"] = out.table.header;
  out.meta["cm_vacuum_variance"] = 1.0;
  return out;
}

/// kappa and E_N over the scenario grid.
inline CommandOutput cmd_sweep(const SweepScenario& s) {
  validate(s);
  CommandOutput out;
  out.warnings = regime_warnings(s);
  out.table.header = {"tau",  "r",      "j0",           "delta", "omega_lo", "beta",
                      "mode", "method", "kappa_source", "kappa", "e_n"};
  const auto envs = s.environments();
  const auto grid = s.tau_grid();
  const auto profiles = detail::build_profiles(s, envs, grid.back());
  const auto work = detail::curves(s, envs);
  const std::string method(to_string(s.method));
  const std::string source(to_string(s.kappa));
  const auto blocks = parallel_map<csv::Table>(work.size(), s.jobs, [&](std::size_t i) {
    csv::Table t{out.table.header, {}};
    const auto& [e, r] = work[i];
    for (ChannelMode mode : channel_modes(s.mode)) {
      for (double tau : grid) {
        const double k = scenario_kappa(s, *profiles[e], r, mode, tau);
        t.add({tau, r, envs[e].j0, envs[e].delta, envs[e].omega_lo, detail::beta_cell(s), std::string(to_string(mode)),
               method, source, k, negativity(k)});
      }
    }
    return t;
  });
  for (const auto& b : blocks) out.table.append(b);
  out.meta = detail::base_meta("sweep", s);
  out.meta["columns"] = out.table.header;
  return out;
}

inline void require_panel(char panel) {
  if (panel != 'a' && panel != 'b' && panel != 'c') {
    throw UsageError("panel", std::string("unknown panel '") + panel + "' (expected a|b|c)");
  }
}

/// Fig. 1 recipe: kappa with and without the secular terms.
inline SweepScenario fig1_scenario(char panel) {
  require_panel(panel);
  SweepScenario s;
  s.tau = {0.0, 30.0, 600};
  s.r = {0.01, 0.1, 0.3, 0.5, 0.9};
  s.j0 = {1.0};
  s.delta = {panel == 'a' ? 1e-4 : 1e-3};
  s.omega_lo = {panel == 'c' ? 3.0 : 1.0};
  s.mode = ModeSelection::full;
  s.kappa = KappaSource::paper;
  return s;
}

/// Fig. 2 recipe: negativity dynamics. J0 = 1, so delta carries J0 delta.
inline SweepScenario fig2_scenario(char panel) {
  require_panel(panel);
  SweepScenario s;
  s.tau = {0.0, 30.0, 600};
  s.j0 = {1.0};
  s.r = {1.0};
  s.delta = {0.01};
  s.omega_lo = {1.0};
  if (panel == 'a') s.r = {10.0, 2.0, 1.0, 0.5, 0.1};
  if (panel == 'b') s.delta = {1e-3, std::pow(10.0, -2.5), 1e-2, std::pow(10.0, -1.5), 1e-1};
  if (panel == 'c') s.omega_lo = {10.0, 2.0, 1.0, 0.5, 0.1};
  s.mode = ModeSelection::secular;
  s.kappa = KappaSource::paper;
  return s;
}

inline void note_figure_grid(nlohmann::ordered_json& meta) {
  meta["tau_grid"]["note"] =
      "600 points over [0, 30] is a choice of this tool; the figure captions do not state a grid density";
}

/// Columns kappa_secular (closed-form secular kappa) and kappa_full (the
/// scenario's kappa source on the full channel, secular terms included).
inline CommandOutput cmd_fig1(char panel, const SweepScenario& s) {
  require_panel(panel);
  validate(s);
  CommandOutput out;
  out.warnings = regime_warnings(s);
  out.table.header = {"panel", "tau", "r", "kappa_secular", "kappa_full", "method", "kappa_source"};
  const auto envs = s.environments();
  const auto grid = s.tau_grid();
  const auto profiles = detail::build_profiles(s, envs, grid.back());
  const auto work = detail::curves(s, envs);
  const std::string method(to_string(s.method));
  const std::string source(to_string(s.kappa));
  const std::string tag(1, panel);
  const auto blocks = parallel_map<csv::Table>(work.size(), s.jobs, [&](std::size_t i) {
    csv::Table t{out.table.header, {}};
    const auto& [e, r] = work[i];
    const SpectralDensity& J = profiles[e]->environment().spectral;
    for (double tau : grid) {
      t.add({tag, tau, r, kappa_secular_paper(r, J.j0_delta(), J.omega_lo(), tau),
             kappa_twb(s.kappa, r, snapshot(*profiles[e], tau), ChannelMode::full), method, source});
    }
    return t;
  });
  for (const auto& b : blocks) out.table.append(b);
  out.meta = detail::base_meta("fig1", s);
  out.meta["panel"] = tag;
  out.meta["columns"] = out.table.header;
  out.meta["kappa_secular"] = "0.5*(tau^2*J0*delta + exp(-2r - tau^4*J0*delta*omega_lo/6))";
  out.meta["kappa_full"] = "kappa source '" + source + "' on the full channel (secular terms included)";
  note_figure_grid(out.meta);
  return out;
}

/// E_N curves plus one sudden_death row per curve (tau = nan when kappa
/// never settles above 1 inside the horizon).
inline CommandOutput cmd_fig2(char panel, const SweepScenario& s, double horizon = 100.0) {
  require_panel(panel);
  validate(s);
  CommandOutput out;
  out.warnings = regime_warnings(s);
  out.table.header = {"row_type", "panel", "tau",          "r",     "j0_delta", "omega_lo",
                      "mode",     "method", "kappa_source", "kappa", "e_n"};
  const auto envs = s.environments();
  const auto grid = s.tau_grid();
  const double tau_max = std::max(horizon, grid.back());
  const auto profiles = detail::build_profiles(s, envs, tau_max);
  const auto work = detail::curves(s, envs);
  const auto modes = channel_modes(s.mode);
  const std::string method(to_string(s.method));
  const std::string source(to_string(s.kappa));
  const std::string tag(1, panel);
  struct Block {
    csv::Table data, death;
  };
  const auto blocks = parallel_map<Block>(work.size(), s.jobs, [&](std::size_t i) {
    Block b{{out.table.header, {}}, {out.table.header, {}}};
    const auto& [e, r] = work[i];
    const CoefficientProfile& p = *profiles[e];
    const SpectralDensity& J = p.environment().spectral;
    for (ChannelMode mode : modes) {
      const std::string mode_tag(to_string(mode));
      for (double tau : grid) {
        const double k = scenario_kappa(s, p, r, mode, tau);
        b.data.add({"data", tag, tau, r, J.j0_delta(), J.omega_lo(), mode_tag, method, source, k, negativity(k)});
      }
      SuddenDeathOptions opt;
      opt.tau_max = horizon;
      const auto t_sd = sudden_death_time([&](double tau) { return scenario_kappa(s, p, r, mode, tau); }, opt);
      const double nan = std::numeric_limits<double>::quiet_NaN();
      b.death.add({"sudden_death", tag, t_sd ? *t_sd : nan, r, J.j0_delta(), J.omega_lo(), mode_tag, method, source,
                   t_sd ? 1.0 : nan, t_sd ? 0.0 : nan});
    }
    return b;
  });
  for (const auto& b : blocks) out.table.append(b.data);
  for (const auto& b : blocks) out.table.append(b.death);
  out.meta = detail::base_meta("fig2", s);
  out.meta["panel"] = tag;
  out.meta["columns"] = out.table.header;
  out.meta["sudden_death"] = {{"threshold_kappa", 1.0}, {"horizon", horizon}, {"bisection_tolerance", 1e-6}};
  note_figure_grid(out.meta);
  return out;
}

/// Oracle suite over every environment of the scenario. `ok` is false if
/// any row fails.
inline CommandOutput cmd_verify(const SweepScenario& s, double tolerance_scale = 1.0) {
  validate(s);
  if (!(tolerance_scale >= 0.0) || !std::isfinite(tolerance_scale)) {
    throw UsageError("tolerance-scale", "must be finite and >= 0");
  }
  CommandOutput out;
  out.warnings = regime_warnings(s);
  out.table.header = {"quantity", "primary", "reference", "abs_deviation", "rel_deviation",
                      "tolerance", "kind", "pass", "method"};
  const auto envs = s.environments();
  const auto reports = parallel_map<std::vector<oracle::OracleReport>>(
      envs.size(), s.jobs, [&](std::size_t e) { return verify_environment(s, envs[e], tolerance_scale); });
  const std::string method(to_string(s.method));
  std::size_t passed = 0;
  std::size_t total = 0;
  for (const auto& block : reports) {
    for (const auto& r : block) {
      out.table.add({r.quantity, r.primary, r.reference, r.abs_deviation, r.rel_deviation, r.tolerance,
                     std::string(r.kind == oracle::DeviationKind::absolute ? "absolute" : "relative"),
                     std::string(r.pass ? "pass" : "fail"), method});
      passed += r.pass ? 1 : 0;
      ++total;
    }
  }
  out.ok = passed == total;
  out.meta = detail::base_meta("verify", s);
  out.meta["columns"] = out.table.header;
  out.meta["tolerance_scale"] = tolerance_scale;
  out.meta["passed"] = passed;
  out.meta["total"] = total;
  return out;
}

}  // namespace bandgauss
