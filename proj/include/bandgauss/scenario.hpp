#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "bandgauss/coefficients.hpp"
#include "bandgauss/dynamics.hpp"
#include "bandgauss/entanglement.hpp"
#include "bandgauss/errors.hpp"

namespace bandgauss {

enum class ModeSelection { secular, full, both };

inline std::string_view to_string(ModeSelection m) {
  switch (m) {
    case ModeSelection::secular: return "secular";
    case ModeSelection::full: return "full";
    case ModeSelection::both: return "both";
  }
  return "both";
}

inline ModeSelection parse_mode(std::string_view tag) {
  if (tag == "secular") return ModeSelection::secular;
  if (tag == "full") return ModeSelection::full;
  if (tag == "both") return ModeSelection::both;
  throw UsageError("mode", "unknown mode '" + std::string(tag) + "' (expected secular|full|both)");
}

inline std::vector<ChannelMode> channel_modes(ModeSelection m) {
  switch (m) {
    case ModeSelection::secular: return {ChannelMode::secular};
    case ModeSelection::full: return {ChannelMode::full};
    case ModeSelection::both: break;
  }
  return {ChannelMode::secular, ChannelMode::full};
}

struct TauRange {
  double start = 0.0;
  double stop = 30.0;
  int steps = 600;
};

/// Spectral parameters of one environment in a sweep.
struct EnvironmentKey {
  double j0 = 1.0;
  double delta = 1e-3;
  double omega_lo = 1.0;

  auto tie() const { return std::tie(j0, delta, omega_lo); }
  bool operator<(const EnvironmentKey& o) const { return tie() < o.tie(); }
  bool operator==(const EnvironmentKey& o) const { return tie() == o.tie(); }
};

struct SweepScenario {
  TauRange tau;
  // Explicit grid; replaces the range when set.
  std::optional<std::vector<double>> tau_values;
  std::vector<double> r{1.0};
  std::vector<double> j0{1.0};
  std::vector<double> delta{1e-3};
  std::vector<double> omega_lo{1.0};
  bool low_t = true;
  std::optional<double> beta;
  ModeSelection mode = ModeSelection::both;
  Method method = Method::closed_form;
  KappaSource kappa = KappaSource::paper;
  std::string out;
  int jobs = 1;

  Temperature temperature() const { return beta ? Temperature::inverse(*beta) : Temperature::low(); }

  std::vector<double> tau_grid() const {
    if (tau_values) return *tau_values;
    std::vector<double> grid(static_cast<std::size_t>(tau.steps));
    const double span = tau.stop - tau.start;
    for (int i = 0; i < tau.steps; ++i) grid[static_cast<std::size_t>(i)] = tau.start + span * i / (tau.steps - 1);
    grid.back() = tau.stop;
    return grid;
  }

  double tau_max() const { return tau_grid().back(); }

  /// Sorted, de-duplicated environments.
  std::vector<EnvironmentKey> environments() const {
    std::vector<EnvironmentKey> keys;
    for (double j : j0) {
      for (double d : delta) {
        for (double w : omega_lo) keys.push_back({j, d, w});
      }
    }
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    return keys;
  }

  std::vector<double> squeezings() const {
    std::vector<double> v = r;
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  }

  EnvironmentParams environment(const EnvironmentKey& k) const {
    return {SpectralDensity(k.j0, k.omega_lo, k.delta), temperature()};
  }
};

namespace detail {

inline void require_list(const std::vector<double>& v, const char* field, bool strictly_positive) {
  if (v.empty()) throw UsageError(field, "list must not be empty");
  for (double x : v) {
    if (!std::isfinite(x) || (strictly_positive ? !(x > 0.0) : !(x >= 0.0))) {
      throw UsageError(field, std::string("values must be finite and ") + (strictly_positive ? "> 0" : ">= 0"));
    }
  }
}

}  // namespace detail

/// Throws UsageError naming the offending field.
inline void validate(const SweepScenario& s) {
  if (s.tau_values) {
    const auto& g = *s.tau_values;
    if (g.empty()) throw UsageError("tau_values", "tau grid is empty");
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!std::isfinite(g[i]) || g[i] < 0.0) throw UsageError("tau_values", "values must be finite and >= 0");
      if (i > 0 && !(g[i] > g[i - 1])) throw UsageError("tau_values", "values must be strictly ascending");
    }
  } else {
    if (s.tau.steps < 2) throw UsageError("tau.steps", "need at least 2 points");
    if (!(s.tau.start >= 0.0) || !std::isfinite(s.tau.start)) throw UsageError("tau.start", "must be finite and >= 0");
    if (!(s.tau.stop > s.tau.start) || !std::isfinite(s.tau.stop)) {
      throw UsageError("tau.stop", "must be finite and > tau.start");
    }
  }
  detail::require_list(s.r, "r", false);
  detail::require_list(s.j0, "j0", true);
  detail::require_list(s.delta, "delta", true);
  detail::require_list(s.omega_lo, "omega_lo", false);
  if (s.low_t && s.beta) throw UsageError("beta", "conflicts with low_t; set one of them");
  if (!s.low_t && !s.beta) throw UsageError("beta", "required when low_t is false");
  if (s.beta && !(*s.beta > 0.0 && std::isfinite(*s.beta))) throw UsageError("beta", "must be finite and > 0");
  if (s.beta && s.method == Method::quadrature) {
    for (double w : s.omega_lo) {
      if (w == 0.0) throw UsageError("omega_lo", "finite-temperature quadrature needs omega_lo > 0");
    }
  }
  if (s.jobs < 1) throw UsageError("jobs", "must be >= 1");
}

/// Environments where the closed forms (which ignore beta) are off-regime.
inline std::vector<std::string> regime_warnings(const SweepScenario& s) {
  std::vector<std::string> out;
  if (!s.beta || s.method != Method::closed_form) return out;
  for (double w : s.omega_lo) {
    const double x = w * *s.beta;
    if (x < 100.0) {
      char buf[200];
      std::snprintf(buf, sizeof buf,
                    "closed-form coefficients assume the low-temperature limit; omega_lo*beta = %g < 100 "
                    "for omega_lo = %g",
                    x, w);
      out.emplace_back(buf);
    }
  }
  return out;
}

namespace detail {

template <class T>
T json_get(const nlohmann::json& j, const char* key, const char* field) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(field, std::string("bad value: ") + e.what());
  }
}

inline std::vector<double> json_list(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_number()) return {json_get<double>(j, key, key)};
  return json_get<std::vector<double>>(j, key, key);
}

}  // namespace detail

/// Reads scenario fields present in `j` over the values already in `s`.
inline void apply_json(SweepScenario& s, const nlohmann::json& j) {
  if (!j.is_object()) throw UsageError("config", "scenario must be a JSON object");
  static const char* const known[] = {"tau", "tau_values", "r", "j0", "delta", "omega_lo", "low_t",
                                      "beta", "mode", "method", "kappa", "out", "jobs"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) ==
        std::end(known)) {
      throw UsageError(key, "unknown scenario key");
    }
  }
  if (j.contains("tau")) {
    const auto& t = j.at("tau");
    if (!t.is_object()) throw UsageError("tau", "expected {start, stop, steps}");
    if (t.contains("start")) s.tau.start = detail::json_get<double>(t, "start", "tau.start");
    if (t.contains("stop")) s.tau.stop = detail::json_get<double>(t, "stop", "tau.stop");
    if (t.contains("steps")) s.tau.steps = detail::json_get<int>(t, "steps", "tau.steps");
  }
  if (j.contains("tau_values")) s.tau_values = detail::json_get<std::vector<double>>(j, "tau_values", "tau_values");
  if (j.contains("r")) s.r = detail::json_list(j, "r");
  if (j.contains("j0")) s.j0 = detail::json_list(j, "j0");
  if (j.contains("delta")) s.delta = detail::json_list(j, "delta");
  if (j.contains("omega_lo")) s.omega_lo = detail::json_list(j, "omega_lo");
  if (j.contains("low_t")) s.low_t = detail::json_get<bool>(j, "low_t", "low_t");
  if (j.contains("beta")) {
    if (j.at("beta").is_null()) {
      s.beta.reset();
    } else {
      s.beta = detail::json_get<double>(j, "beta", "beta");
      if (!j.contains("low_t")) s.low_t = false;
    }
  }
  if (j.contains("mode")) s.mode = parse_mode(detail::json_get<std::string>(j, "mode", "mode"));
  if (j.contains("method")) s.method = parse_method(detail::json_get<std::string>(j, "method", "method"));
  if (j.contains("kappa")) s.kappa = parse_kappa_source(detail::json_get<std::string>(j, "kappa", "kappa"));
  if (j.contains("out")) s.out = detail::json_get<std::string>(j, "out", "out");
  if (j.contains("jobs")) s.jobs = detail::json_get<int>(j, "jobs", "jobs");
}

inline SweepScenario parse_scenario(std::string_view text, SweepScenario base = {}) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError("config", std::string("invalid JSON: ") + e.what());
  }
  apply_json(base, j);
  return base;
}

inline nlohmann::ordered_json to_json(const SweepScenario& s) {
  nlohmann::ordered_json j;
  if (s.tau_values) {
    j["tau_values"] = *s.tau_values;
  } else {
    j["tau"] = {{"start", s.tau.start}, {"stop", s.tau.stop}, {"steps", s.tau.steps}};
  }
  j["r"] = s.r;
  j["j0"] = s.j0;
  j["delta"] = s.delta;
  j["omega_lo"] = s.omega_lo;
  j["low_t"] = s.low_t;
  j["beta"] = s.beta ? nlohmann::ordered_json(*s.beta) : nlohmann::ordered_json(nullptr);
  j["mode"] = to_string(s.mode);
  j["method"] = to_string(s.method);
  j["kappa"] = to_string(s.kappa);
  return j;
}

}  // namespace bandgauss
