#include "cdf/cli.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

namespace {

// CDFNAV_LOG_LEVEL: trace, debug, info, warn, error, critical or off (default warn).
void configure_logging() {
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("CDFNAV_LOG_LEVEL")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }
}

template <typename T>
std::optional<T> given(const CLI::Option* opt, const T& value) {
  return opt->count() ? std::optional<T>(value) : std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();

  CLI::App app{"Safe navigation with control density functions"};
  app.require_subcommand(1);

  std::string scenario;
  std::string out_dir = ".";
  double dt = 0.0, beta = 0.0, alpha = 0.0;
  long long count = 0;
  std::uint64_t seed = 0;
  int resolution = 101;

  auto add_common = [&](CLI::App* cmd, bool with_out) {
    cmd->add_option("--scenario", scenario, "Scenario file")->required()->check(CLI::ExistingFile);
    if (with_out) cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();
  };
  struct OverrideOpts {
    CLI::Option* dt = nullptr;
    CLI::Option* beta = nullptr;
    CLI::Option* alpha = nullptr;
  };
  auto add_overrides = [&](CLI::App* cmd) {
    OverrideOpts o;
    o.dt = cmd->add_option("--dt", dt, "Override the Euler step");
    o.beta = cmd->add_option("--beta", beta, "Override the divergence margin beta");
    o.alpha = cmd->add_option("--alpha", alpha, "Override the shaping exponent alpha");
    return o;
  };

  CLI::App* simulate = app.add_subcommand("simulate", "Run one closed-loop trajectory");
  add_common(simulate, true);
  const OverrideOpts sim_o = add_overrides(simulate);

  CLI::App* sweep = app.add_subcommand("sweep", "Monte Carlo sweep over sampled initial states");
  add_common(sweep, true);
  CLI::Option* count_opt = sweep->add_option("--count", count, "Number of runs");
  CLI::Option* seed_opt = sweep->add_option("--seed", seed, "Sampler seed");
  const OverrideOpts sweep_o = add_overrides(sweep);

  CLI::App* grid = app.add_subcommand("density-grid", "Export rho and its gradient on a grid");
  add_common(grid, true);
  grid->add_option("--resolution", resolution, "Points per axis")->capture_default_str();
  const OverrideOpts grid_o = add_overrides(grid);

  CLI::App* validate = app.add_subcommand("validate", "Check a scenario file");
  add_common(validate, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cdf::cli::kBadInput;
  }

  auto overrides = [&](const OverrideOpts& o) {
    return cdf::cli::Overrides{given(o.dt, dt), given(o.beta, beta), given(o.alpha, alpha)};
  };

  if (*simulate) return cdf::cli::cmd_simulate(scenario, out_dir, overrides(sim_o), std::cerr);
  if (*sweep) {
    return cdf::cli::cmd_sweep(scenario, given(count_opt, count), given(seed_opt, seed), out_dir,
                               overrides(sweep_o), std::cerr);
  }
  if (*grid) return cdf::cli::cmd_density_grid(scenario, resolution, out_dir, overrides(grid_o), std::cerr);
  return cdf::cli::cmd_validate(scenario, std::cout, std::cerr);
}
