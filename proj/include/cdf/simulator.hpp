#pragma once

#include "cdf/controller.hpp"
#include "cdf/density.hpp"
#include "cdf/dynamics.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace cdf {

enum class Outcome { converged, unsafe, timeout, infeasible };
enum class StepFlag { optimal, relaxed };

std::string to_string(Outcome outcome);
std::string to_string(StepFlag flag);

/// Divergence-row and trace values of one QP step, kept for auditing.
struct StepCertificate {
  Vec lhs;
  Vec rhs;
  double trace = 0.0;
};

/// One closed-loop run. states has one more entry than controls; the per-state
/// vectors (times, rho, clearance) are aligned with states, the per-step ones
/// (controls, step_flags, certificates, heading_reference) with controls.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<Vec> controls;
  std::vector<StepFlag> step_flags;
  std::vector<StepCertificate> certificates;
  std::vector<double> rho;
  std::vector<double> clearance;
  /// Dubin runs only: the heading reference computed at each step.
  std::vector<double> heading_reference;

  Outcome outcome = Outcome::timeout;
  double min_clearance = 0.0;
  double terminal_distance = 0.0;
  double unsafe_dwell_time = 0.0;
  std::string diagnostic;

  std::size_t steps() const { return controls.size(); }
};

/// Explicit-Euler closed loop: one controller evaluation per step, stopping on
/// entry into the eta-ball around the target, on entering an unsafe set, or on an
/// infeasible step under the error policy.
Trajectory simulate(const ControlAffineSystem& sys, const DensityFunction& df, const CdfConfig& cfg,
                    const Vec& x0);

/// Wraps an angle to (-pi, pi].
double wrap_angle(double angle);

struct DubinState {
  double x1 = 0.0;
  double x2 = 0.0;
  double theta = 0.0;
  double k_gain = 10.0;
  double theta_tilde_prev = 0.0;
  bool has_reference = false;
};

struct DubinCommand {
  double v = 0.0;
  double omega = 0.0;
  double theta_tilde = 0.0;
  DubinState next;
};

/// Converts a planar velocity command into speed and turn rate:
///   v = |u|, theta~ = atan2(u2, u1), omega = d/dt theta~ - k wrap(theta - theta~).
/// The reference rate is a wrapped backward difference (zero on the first call);
/// u = 0 holds the previous reference with v = 0. Position and heading in the
/// returned state are untouched.
DubinCommand dubin_steering(const Vec& u_planar, const DubinState& state, double dt);

/// QP steps on the planar integrator, steering into a unicycle integrated by Euler.
/// States are (x1, x2, theta), controls (v, omega).
Trajectory simulate_dubin(const ControlAffineSystem& planar, const DensityFunction& df, const CdfConfig& cfg,
                          const Vec& x0, double theta0, double k_gain);

/// Initial-set description used by sweeps.
struct InitialSetSampler {
  enum class Kind { ring, box };
  Kind kind = Kind::ring;
  Vec center;
  double radius = 1.0;
  Vec lower;
  Vec upper;

  Eigen::Index dim() const { return kind == Kind::ring ? center.size() : lower.size(); }
  /// Sample `index` of the stream identified by `seed`; independent of any other index.
  Vec sample(std::uint64_t seed, std::uint64_t index) const;
  void validate() const;
};

struct SweepRun {
  std::size_t index = 0;
  Vec x0;
  Outcome outcome = Outcome::timeout;
  double terminal_distance = 0.0;
  double unsafe_dwell_time = 0.0;
  double min_clearance = 0.0;
  std::size_t steps = 0;
};

struct SweepReport {
  std::vector<SweepRun> runs;
  double fraction_converged = 0.0;
  double fraction_unsafe = 0.0;
  double fraction_timeout = 0.0;
  double fraction_infeasible = 0.0;
  double terminal_distance_min = 0.0;
  double terminal_distance_median = 0.0;
  double terminal_distance_max = 0.0;
  double dwell_time_max = 0.0;
  double dwell_time_total = 0.0;
};

enum class Execution { serial, parallel };

using TrajectoryRunner = std::function<Trajectory(const Vec& x0)>;

/// Runs `count` trajectories from sampler.sample(seed, i). Results are stored by
/// sample index, so serial and parallel execution give identical reports.
SweepReport run_sweep(const InitialSetSampler& sampler, std::size_t count, std::uint64_t seed,
                      const TrajectoryRunner& runner, Execution execution = Execution::parallel);

SweepReport monte_carlo_sweep(const ControlAffineSystem& sys, const DensityFunction& df, const CdfConfig& cfg,
                              const InitialSetSampler& sampler, std::size_t count, std::uint64_t seed,
                              Execution execution = Execution::parallel);

/// Summary statistics over already computed runs.
SweepReport summarize(std::vector<SweepRun> runs);

}  // namespace cdf
