#include "cdf/cli.hpp"

#include <spdlog/spdlog.h>

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

namespace cdf::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// Full round-trip precision for every number written to CSV.
constexpr int kDigits = 17;

std::ofstream open_output(const fs::path& out_dir, const std::string& file) {
  fs::create_directories(out_dir);
  std::ofstream out(out_dir / file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + (out_dir / file).string());
  out << std::setprecision(kDigits);
  return out;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void write_json(const fs::path& out_dir, const std::string& file, const json& doc) {
  std::ofstream out = open_output(out_dir, file);
  out << doc.dump(2) << '\n';
}

json vector_json(const Vec& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

}  // namespace

int exit_code(Outcome outcome) {
  switch (outcome) {
    case Outcome::converged: return kConverged;
    case Outcome::unsafe: return kUnsafe;
    case Outcome::infeasible: return kInfeasible;
    case Outcome::timeout: return kTimeout;
  }
  return kBadInput;
}

Scenario prepare_scenario(const fs::path& path, const Overrides& overrides) {
  Scenario sc = load_scenario(path);
  if (overrides.dt) sc.dt = *overrides.dt;
  if (overrides.beta) sc.beta = *overrides.beta;
  if (overrides.alpha) sc.alpha = *overrides.alpha;
  sc.validate();
  return sc;
}

Trajectory run_trajectory(const Scenario& sc, const Vec& x0) {
  const ControlAffineSystem sys = sc.make_system();
  const DensityFunction df = sc.make_density();
  const CdfConfig cfg = sc.make_config();
  if (sc.is_dubin()) return simulate_dubin(sys, df, cfg, x0, sc.theta0, sc.heading_gain);
  return simulate(sys, df, cfg, x0);
}

void write_trajectory_csv(std::ostream& out, const Scenario& sc, const Trajectory& traj) {
  out << std::setprecision(kDigits);
  const Eigen::Index n = traj.states.empty() ? 0 : traj.states.front().size();
  Eigen::Index m = 0;
  if (!traj.controls.empty()) m = traj.controls.front().size();
  else if (sc.is_dubin()) m = 2;
  else m = sc.make_system().m;

  out << "t";
  if (sc.is_dubin()) {
    out << ",x1,x2,theta,v,omega";
  } else {
    for (Eigen::Index i = 0; i < n; ++i) out << ",x" << i + 1;
    for (Eigen::Index i = 0; i < m; ++i) out << ",u" << i + 1;
  }
  out << ",rho,min_clearance,step_flag\n";

  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    out << traj.times[k];
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << traj.states[k][i];
    const bool has_control = k < traj.controls.size();
    for (Eigen::Index i = 0; i < m; ++i) {
      out << ',';
      if (has_control) out << traj.controls[k][i];
      else out << "nan";
    }
    out << ',' << traj.rho[k] << ',' << traj.clearance[k] << ','
        << (has_control ? to_string(traj.step_flags[k]) : std::string("terminal")) << '\n';
  }
}

void write_sweep_csv(std::ostream& out, const SweepReport& report) {
  out << std::setprecision(kDigits);
  const Eigen::Index n = report.runs.empty() ? 0 : report.runs.front().x0.size();
  out << "index";
  for (Eigen::Index i = 0; i < n; ++i) out << ",x0_" << i + 1;
  out << ",outcome,terminal_distance,unsafe_dwell_time\n";
  for (const auto& run : report.runs) {
    out << run.index;
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << run.x0[i];
    out << ',' << to_string(run.outcome) << ',' << run.terminal_distance << ',' << run.unsafe_dwell_time << '\n';
  }
}

void write_grid_csv(std::ostream& out, const std::vector<GridSample>& grid) {
  out << std::setprecision(kDigits);
  out << "x1,x2,rho,gradx1,gradx2,in_unsafe,in_sensing\n";
  for (const auto& s : grid) {
    out << s.x1 << ',' << s.x2 << ',' << s.rho << ',' << s.grad_x1 << ',' << s.grad_x2 << ','
        << (s.in_unsafe ? 1 : 0) << ',' << (s.in_sensing ? 1 : 0) << '\n';
  }
}

int cmd_simulate(const fs::path& scenario, const fs::path& out_dir, const Overrides& overrides, std::ostream& err) {
  Scenario sc;
  Vec x0;
  try {
    sc = prepare_scenario(scenario, overrides);
    x0 = sc.initial_state();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kBadInput;
  }

  spdlog::info("simulating '{}' ({}) for up to {} steps", sc.name, sc.system, sc.steps);
  const auto start = std::chrono::steady_clock::now();
  const Trajectory traj = run_trajectory(sc, x0);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::size_t relaxed = 0;
  for (StepFlag f : traj.step_flags) relaxed += f == StepFlag::relaxed;

  try {
    std::ofstream csv = open_output(out_dir, "trajectory.csv");
    write_trajectory_csv(csv, sc, traj);
    json summary;
    summary["scenario"] = sc.name;
    summary["system"] = sc.system;
    summary["x0"] = vector_json(x0);
    summary["outcome"] = to_string(traj.outcome);
    summary["steps"] = traj.steps();
    summary["final_time"] = traj.times.back();
    summary["terminal_distance"] = traj.terminal_distance;
    summary["min_clearance"] = number_or_null(traj.min_clearance);
    summary["unsafe_dwell_time"] = traj.unsafe_dwell_time;
    summary["relaxed_steps"] = relaxed;
    summary["wall_time_s"] = wall;
    if (!traj.diagnostic.empty()) summary["diagnostic"] = traj.diagnostic;
    write_json(out_dir, "summary.json", summary);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kBadInput;
  }

  spdlog::info("outcome {} after {} steps, terminal distance {:.6g}", to_string(traj.outcome), traj.steps(),
               traj.terminal_distance);
  if (!traj.diagnostic.empty()) err << traj.diagnostic << '\n';
  return exit_code(traj.outcome);
}

int cmd_sweep(const fs::path& scenario, std::optional<long long> count, std::optional<std::uint64_t> seed,
              const fs::path& out_dir, const Overrides& overrides, std::ostream& err, Execution execution) {
  Scenario sc;
  try {
    sc = prepare_scenario(scenario, overrides);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kBadInput;
  }
  long long runs = 0;
  if (count) runs = *count;
  else if (sc.count) runs = static_cast<long long>(*sc.count);
  else {
    err << "error: count must be given (--count or the scenario's count key)\n";
    return kBadInput;
  }
  if (runs < 1) {
    err << "error: count must be >= 1\n";
    return kBadInput;
  }
  if (!sc.sampler) {
    err << "error: sampler: sweep needs an initial-set sampler\n";
    return kBadInput;
  }
  const std::uint64_t run_seed = seed.value_or(sc.seed);

  spdlog::info("sweeping '{}' with {} runs, seed {}", sc.name, runs, run_seed);
  const auto start = std::chrono::steady_clock::now();
  const SweepReport report = run_sweep(
      *sc.sampler, static_cast<std::size_t>(runs), run_seed, [&sc](const Vec& x0) { return run_trajectory(sc, x0); },
      execution);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  try {
    std::ofstream csv = open_output(out_dir, "sweep.csv");
    write_sweep_csv(csv, report);
    json summary;
    summary["scenario"] = sc.name;
    summary["count"] = runs;
    summary["seed"] = run_seed;
    summary["fraction_converged"] = report.fraction_converged;
    summary["fraction_unsafe"] = report.fraction_unsafe;
    summary["fraction_timeout"] = report.fraction_timeout;
    summary["fraction_infeasible"] = report.fraction_infeasible;
    summary["terminal_distance_min"] = report.terminal_distance_min;
    summary["terminal_distance_median"] = report.terminal_distance_median;
    summary["terminal_distance_max"] = report.terminal_distance_max;
    summary["unsafe_dwell_time_max"] = report.dwell_time_max;
    summary["unsafe_dwell_time_total"] = report.dwell_time_total;
    summary["wall_time_s"] = wall;
    write_json(out_dir, "sweep_summary.json", summary);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kBadInput;
  }
  spdlog::info("converged {:.3f}, unsafe {:.3f}", report.fraction_converged, report.fraction_unsafe);
  return report.fraction_unsafe == 0.0 ? kConverged : kUnsafe;
}

int cmd_density_grid(const fs::path& scenario, int resolution, const fs::path& out_dir, const Overrides& overrides,
                     std::ostream& err) {
  try {
    const Scenario sc = prepare_scenario(scenario, overrides);
    const GridSpec spec = sc.grid_spec(resolution);
    const auto grid = density_grid(sc.make_density(), spec);
    std::ofstream csv = open_output(out_dir, "grid.csv");
    write_grid_csv(csv, grid);
    spdlog::info("wrote {} grid points", grid.size());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kBadInput;
  }
  return kConverged;
}

int cmd_validate(const fs::path& scenario, std::ostream& out, std::ostream& err) {
  try {
    const Scenario sc = prepare_scenario(scenario, {});
    out << sc.name << ": ok (" << sc.system << ", " << sc.obstacles.size() << " obstacles)\n";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kBadInput;
  }
  return kConverged;
}

}  // namespace cdf::cli
