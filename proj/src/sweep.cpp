#include "cdf/simulator.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace cdf {

namespace {

// 53 random bits -> [0, 1); spelled out so streams do not depend on the standard library.
double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

SweepRun run_one(const InitialSetSampler& sampler, std::uint64_t seed, std::size_t index,
                 const TrajectoryRunner& runner) {
  SweepRun run;
  run.index = index;
  run.x0 = sampler.sample(seed, index);
  try {
    const Trajectory traj = runner(run.x0);
    run.outcome = traj.outcome;
    run.terminal_distance = traj.terminal_distance;
    run.unsafe_dwell_time = traj.unsafe_dwell_time;
    run.min_clearance = traj.min_clearance;
    run.steps = traj.steps();
  } catch (const std::exception&) {
    // A run that cannot even start counts against the sweep rather than aborting it.
    run.outcome = Outcome::infeasible;
    run.terminal_distance = std::numeric_limits<double>::quiet_NaN();
    run.min_clearance = std::numeric_limits<double>::quiet_NaN();
  }
  return run;
}

}  // namespace

Vec InitialSetSampler::sample(std::uint64_t seed, std::uint64_t index) const {
  auto rng = stream(seed, index);
  if (kind == Kind::box) {
    Vec x(lower.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = lower[i] + unit_uniform(rng) * (upper[i] - lower[i]);
    return x;
  }
  const Eigen::Index n = center.size();
  Vec dir(n);
  if (n == 1) {
    dir[0] = unit_uniform(rng) < 0.5 ? -1.0 : 1.0;
  } else if (n == 2) {
    const double angle = 2.0 * std::numbers::pi * unit_uniform(rng);
    dir << std::cos(angle), std::sin(angle);
  } else {
    // Box-Muller normals give a uniform direction on the sphere.
    do {
      for (Eigen::Index i = 0; i < n; ++i) {
        const double u1 = 1.0 - unit_uniform(rng);
        const double u2 = unit_uniform(rng);
        dir[i] = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
      }
    } while (dir.norm() == 0.0);
    dir.normalize();
  }
  return center + radius * dir;
}

void InitialSetSampler::validate() const {
  if (kind == Kind::ring) {
    if (center.size() == 0 || !center.allFinite()) throw std::invalid_argument("sampler center must be finite");
    if (!(radius > 0.0) || !std::isfinite(radius)) throw std::invalid_argument("sampler radius must be positive");
  } else {
    if (lower.size() == 0 || lower.size() != upper.size()) {
      throw std::invalid_argument("sampler box bounds must have equal, nonzero length");
    }
    if (!lower.allFinite() || !upper.allFinite() || (upper - lower).minCoeff() < 0.0) {
      throw std::invalid_argument("sampler box must be finite with lower <= upper");
    }
  }
}

SweepReport summarize(std::vector<SweepRun> runs) {
  SweepReport report;
  report.runs = std::move(runs);
  const std::size_t count = report.runs.size();
  if (count == 0) return report;
  std::vector<double> distances;
  for (const auto& run : report.runs) {
    switch (run.outcome) {
      case Outcome::converged: report.fraction_converged += 1.0; break;
      case Outcome::unsafe: report.fraction_unsafe += 1.0; break;
      case Outcome::timeout: report.fraction_timeout += 1.0; break;
      case Outcome::infeasible: report.fraction_infeasible += 1.0; break;
    }
    if (std::isfinite(run.terminal_distance)) distances.push_back(run.terminal_distance);
    report.dwell_time_max = std::max(report.dwell_time_max, run.unsafe_dwell_time);
    report.dwell_time_total += run.unsafe_dwell_time;
  }
  const double n = static_cast<double>(count);
  report.fraction_converged /= n;
  report.fraction_unsafe /= n;
  report.fraction_timeout /= n;
  report.fraction_infeasible /= n;
  if (!distances.empty()) {
    std::sort(distances.begin(), distances.end());
    report.terminal_distance_min = distances.front();
    report.terminal_distance_max = distances.back();
    const std::size_t mid = distances.size() / 2;
    report.terminal_distance_median =
        distances.size() % 2 ? distances[mid] : 0.5 * (distances[mid - 1] + distances[mid]);
  }
  return report;
}

SweepReport run_sweep(const InitialSetSampler& sampler, std::size_t count, std::uint64_t seed,
                      const TrajectoryRunner& runner, Execution execution) {
  if (count < 1) throw std::invalid_argument("count must be >= 1");
  sampler.validate();
  std::vector<SweepRun> runs(count);
  if (execution == Execution::serial) {
    for (std::size_t i = 0; i < count; ++i) runs[i] = run_one(sampler, seed, i, runner);
  } else {
    const auto n = static_cast<std::int64_t>(count);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < n; ++i) {
      runs[static_cast<std::size_t>(i)] = run_one(sampler, seed, static_cast<std::size_t>(i), runner);
    }
  }
  return summarize(std::move(runs));
}

SweepReport monte_carlo_sweep(const ControlAffineSystem& sys, const DensityFunction& df, const CdfConfig& cfg,
                              const InitialSetSampler& sampler, std::size_t count, std::uint64_t seed,
                              Execution execution) {
  if (sampler.dim() != sys.n) throw std::invalid_argument("sampler dimension must match the system");
  return run_sweep(
      sampler, count, seed, [&](const Vec& x0) { return simulate(sys, df, cfg, x0); }, execution);
}

}  // namespace cdf
