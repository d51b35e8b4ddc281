#pragma once

#include "cdf/grid.hpp"
#include "cdf/scenario.hpp"
#include "cdf/simulator.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <vector>

namespace cdf::cli {

/// Process exit codes of the cdfnav tool.
enum ExitCode : int {
  kConverged = 0,
  kBadInput = 1,
  kUnsafe = 2,
  kInfeasible = 3,
  kTimeout = 4,
};

int exit_code(Outcome outcome);

/// Command-line values that replace the scenario's own.
struct Overrides {
  std::optional<double> dt;
  std::optional<double> beta;
  std::optional<double> alpha;
};

/// Loads, applies overrides and validates. Throws ScenarioError.
Scenario prepare_scenario(const std::filesystem::path& path, const Overrides& overrides);

/// Runs one trajectory (Dubin runs include the heading layer).
Trajectory run_trajectory(const Scenario& sc, const Vec& x0);

/// t, x..., u..., rho, min_clearance, step_flag. The last row holds the terminal
/// state with nan controls and step_flag "terminal".
void write_trajectory_csv(std::ostream& out, const Scenario& sc, const Trajectory& traj);
void write_sweep_csv(std::ostream& out, const SweepReport& report);
void write_grid_csv(std::ostream& out, const std::vector<GridSample>& grid);

/// Each command reports problems on `err` and returns an ExitCode.
int cmd_simulate(const std::filesystem::path& scenario, const std::filesystem::path& out_dir,
                 const Overrides& overrides, std::ostream& err);
/// Exit 0 iff no run entered an unsafe set.
int cmd_sweep(const std::filesystem::path& scenario, std::optional<long long> count,
              std::optional<std::uint64_t> seed, const std::filesystem::path& out_dir, const Overrides& overrides,
              std::ostream& err, Execution execution = Execution::parallel);
int cmd_density_grid(const std::filesystem::path& scenario, int resolution, const std::filesystem::path& out_dir,
                     const Overrides& overrides, std::ostream& err);
int cmd_validate(const std::filesystem::path& scenario, std::ostream& out, std::ostream& err);

}  // namespace cdf::cli
