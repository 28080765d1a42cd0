#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "bandgauss/commands.hpp"

namespace {

using namespace bandgauss;

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

struct Flags {
  std::string config;
  std::string out;
  std::string panel;
  std::optional<std::string> mode;
  std::optional<std::string> method;
  std::optional<std::string> kappa;
  std::optional<double> tau_max;
  std::optional<int> tau_steps;
  bool low_t = false;
  std::optional<double> beta;
  std::optional<int> jobs;
  double tolerance_scale = 1.0;
};

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw UsageError("config", "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Config file over `base`, then command-line flags over both.
SweepScenario resolve(const Flags& fl, SweepScenario base) {
  SweepScenario s = fl.config.empty() ? base : parse_scenario(read_file(fl.config), base);
  if (fl.mode) s.mode = parse_mode(*fl.mode);
  if (fl.method) s.method = parse_method(*fl.method);
  if (fl.kappa) s.kappa = parse_kappa_source(*fl.kappa);
  if (fl.tau_max || fl.tau_steps) s.tau_values.reset();
  if (fl.tau_max) s.tau.stop = *fl.tau_max;
  if (fl.tau_steps) s.tau.steps = *fl.tau_steps;
  if (fl.low_t && fl.beta) throw UsageError("beta", "--low-t and --beta are mutually exclusive");
  if (fl.low_t) {
    s.low_t = true;
    s.beta.reset();
  }
  if (fl.beta) {
    s.low_t = false;
    s.beta = *fl.beta;
  }
  if (fl.jobs) s.jobs = *fl.jobs;
  if (!fl.out.empty()) s.out = fl.out;
  return s;
}

char panel_of(const Flags& fl) {
  if (fl.panel.size() != 1) throw UsageError("panel", "expected a|b|c");
  require_panel(fl.panel[0]);
  return fl.panel[0];
}

void emit(const CommandOutput& result, const std::string& out) {
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
  std::ostringstream csv_text;
  csv::write(csv_text, result.table);
  if (out.empty() || out == "-") {
    std::cout << csv_text.str();
    std::cout.flush();
    return;
  }
  const std::filesystem::path path(out);
  csv::write_file(path, csv_text.str());
  csv::write_file(csv::meta_path(path), result.meta.dump(2) + "\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian two-mode states in finite-bandwidth non-Markovian environments"};
  app.set_version_flag("--version", std::string(BANDGAUSS_VERSION));
  app.require_subcommand(1);

  Flags fl;
  auto add_common = [&](CLI::App* sub, bool figure) {
    sub->add_option("--config", fl.config, "scenario file (JSON)")->check(CLI::ExistingFile);
    sub->add_option("--out", fl.out, "output CSV path (stdout if omitted); writes a .meta sidecar");
    if (figure) sub->add_option("--panel", fl.panel, "figure panel: a|b|c")->required();
    sub->add_option("--mode", fl.mode, "secular|full|both");
    sub->add_option("--method", fl.method, "coefficient method: closed|quad");
    sub->add_option("--kappa", fl.kappa, "kappa source: symmetric|paper|oracle");
    sub->add_option("--tau-max", fl.tau_max, "end of the tau grid");
    sub->add_option("--tau-steps", fl.tau_steps, "number of tau grid points");
    sub->add_flag("--low-t", fl.low_t, "zero-temperature limit");
    sub->add_option("--beta", fl.beta, "inverse temperature");
    sub->add_option("--jobs", fl.jobs, "worker threads");
  };

  auto* coefficients = app.add_subcommand("coefficients", "master-equation coefficients on the tau grid");
  auto* evolve = app.add_subcommand("evolve", "covariance matrix of an evolved two-mode squeezed vacuum");
  auto* sweep = app.add_subcommand("sweep", "kappa and E_N over a parameter grid");
  auto* fig1 = app.add_subcommand("fig1", "kappa with and without secular terms");
  auto* fig2 = app.add_subcommand("fig2", "negativity dynamics and sudden death");
  auto* verify = app.add_subcommand("verify", "run the oracle cross-checks; nonzero exit on failure");
  for (auto* sub : {coefficients, evolve, sweep, verify}) add_common(sub, false);
  for (auto* sub : {fig1, fig2}) add_common(sub, true);
  verify->add_option("--tolerance-scale", fl.tolerance_scale, "multiply every oracle tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    CommandOutput result;
    SweepScenario s;
    if (coefficients->parsed()) {
      s = resolve(fl, {});
      result = cmd_coefficients(s);
    } else if (evolve->parsed()) {
      s = resolve(fl, {});
      result = cmd_evolve(s);
    } else if (sweep->parsed()) {
      s = resolve(fl, {});
      result = cmd_sweep(s);
    } else if (fig1->parsed()) {
      const char panel = panel_of(fl);
      s = resolve(fl, fig1_scenario(panel));
      result = cmd_fig1(panel, s);
    } else if (fig2->parsed()) {
      const char panel = panel_of(fl);
      s = resolve(fl, fig2_scenario(panel));
      result = cmd_fig2(panel, s);
    } else {
      s = resolve(fl, default_verify_scenario());
      result = cmd_verify(s, fl.tolerance_scale);
      std::cerr << "verify: " << result.meta["passed"].get<std::size_t>() << "/"
                << result.meta["total"].get<std::size_t>() << " checks passed\n";
    }
    emit(result, s.out);
    return result.ok ? 0 : kExitFailure;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DomainError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
