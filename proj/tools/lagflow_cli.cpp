#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "acceptance_suite.hpp"
#include "lagflow/io/experiment.hpp"

namespace {

enum Exit { Ok = 0, BadConfig = 2, SolverAbort = 3, CheckFailed = 4 };

struct Overrides {
  std::string config_path, preset, out_dir;
  std::uint64_t seed = 0;
  int strategy = 0;
  bool no_plots = false, enforce_theory = false;
};

void add_overrides(CLI::App* app, Overrides& o) {
  app->add_option("config", o.config_path, "Config file (key = value)");
  app->add_option("--preset", o.preset, "Start from a preset's defaults instead of a config file");
  app->add_option("--seed", o.seed, "Seed of the random step sequence");
  app->add_option("--out-dir", o.out_dir, "Output directory");
  app->add_flag("--no-plots", o.no_plots, "Skip SVG plots");
  app->add_option("--strategy", o.strategy, "Adaptive strategy: 1 trajectory change, 2 energy change")
    ->check(CLI::IsMember({1, 2}));
  app->add_flag("--enforce-theory-ratio", o.enforce_theory, "Cap step ratios at the scheme's proved bound");
}

lagflow::ExperimentConfig load(const Overrides& o, const CLI::App* app) {
  using namespace lagflow;
  if (o.config_path.empty() == o.preset.empty()) throw ConfigError("give either a config file or --preset");
  std::string text;
  if (!o.config_path.empty()) {
    std::ifstream f(o.config_path);
    if (!f) throw ConfigError("cannot read " + o.config_path);
    std::stringstream ss;
    ss << f.rdbuf();
    text = ss.str();
  } else {
    text = "preset = " + o.preset + "\n";
  }
  ExperimentConfig c = parse_config(text);
  if (app->count("--seed")) c.seed = o.seed;
  if (!o.out_dir.empty()) c.out_dir = o.out_dir;
  if (o.no_plots) c.plots = false;
  if (o.strategy) c.strategy = o.strategy;
  if (o.enforce_theory) c.enforce_theory = true;
  validate(c);
  return c;
}

void print_run(const lagflow::RunRecord& r) {
  std::printf("%s: %s after %zu steps at t = %.6g, rejections %zu, mass drift %.2e, min jacobian %.3e\n",
              lagflow::preset_name(r.config.preset).c_str(), r.termination.c_str(), r.rows.size(),
              r.rows.empty() ? 0.0 : r.rows.back().t, r.rejections, r.mass_drift(), r.min_jacobian());
  for (const auto& [k, v] : r.metrics) std::printf("  %s = %.6g\n", k.c_str(), v);
  std::printf("  artifacts in %s\n", r.config.out_dir.c_str());
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lagrangian gradient-flow solvers with adaptive BDF2 time stepping"};
  app.require_subcommand(1);

  Overrides run_o, sweep_o, show_o;
  auto* run = app.add_subcommand("run", "Run one experiment and write its artifacts");
  add_overrides(run, run_o);
  auto* sweep = app.add_subcommand("sweep", "Resolution sweep with errors and observed orders");
  add_overrides(sweep, sweep_o);
  auto* show = app.add_subcommand("show-config", "Print the resolved configuration");
  add_overrides(show, show_o);
  std::vector<int> criteria;
  auto* check = app.add_subcommand("check", "Run the acceptance suite");
  check->add_option("--criterion", criteria, "Only these criteria (1-13)")->check(CLI::Range(1, 13));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? Ok : BadConfig;
  }

  try {
    if (*run) {
      const auto c = load(run_o, run);
      try {
        print_run(lagflow::run_experiment(c));
      } catch (const lagflow::ControllerAbort& e) {
        std::fprintf(stderr, "solver abort: %s\n", e.what());
        return SolverAbort;
      } catch (const lagflow::StepFailure& e) {
        std::fprintf(stderr, "solver abort: %s\n", e.what());
        return SolverAbort;
      }
    } else if (*sweep) {
      const auto c = load(sweep_o, sweep);
      try {
        const auto s = lagflow::run_sweep(c);
        lagflow::write_sweep(s, c.out_dir);
        std::printf("%6s %6s %12s %12s %12s %8s %8s\n", "mx", "steps", "tau_max", "max_ratio", "error", "order_M",
                    "order_t");
        for (const auto& r : s.rows)
          std::printf("%6zu %6zu %12.4e %12.4e %12.4e %8.4f %8.4f\n", r.mx, r.steps, r.tau_max, r.max_ratio, r.error,
                      r.order_grid, r.order_step);
      } catch (const lagflow::ControllerAbort& e) {
        std::fprintf(stderr, "solver abort: %s\n", e.what());
        return SolverAbort;
      }
    } else if (*show) {
      std::fputs(lagflow::serialize_config(load(show_o, show)).c_str(), stdout);
    } else if (*check) {
      lagflow::acceptance::Suite suite;
      const bool ok = criteria.empty() ? suite.run_all(std::cout) : suite.run_all(std::cout, criteria);
      return ok ? Ok : CheckFailed;
    }
  } catch (const lagflow::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return BadConfig;
  } catch (const lagflow::LayoutError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return BadConfig;
  }
  return Ok;
}
