#include "cdf/simulator.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace cdf {

std::string to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::converged: return "converged";
    case Outcome::unsafe: return "unsafe";
    case Outcome::timeout: return "timeout";
    case Outcome::infeasible: return "infeasible";
  }
  return "unknown";
}

std::string to_string(StepFlag flag) { return flag == StepFlag::optimal ? "optimal" : "relaxed"; }

double wrap_angle(double angle) {
  double a = std::remainder(angle, 2.0 * std::numbers::pi);
  if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

namespace {

struct Control {
  Vec u;
  StepFlag flag = StepFlag::optimal;
  bool has_certificate = false;
  StepCertificate certificate;
};

Vec clip(const Vec& u, const ControlAffineSystem& sys) {
  return u.cwiseMax(sys.control_lower).cwiseMin(sys.control_upper);
}

Control compute_control(const ControlAffineSystem& sys, const DensityFunction& df, const CdfConfig& cfg,
                        const Vec& x) {
  Control c;
  switch (cfg.mode) {
    case ControlMode::qp_cdf: {
      StepResult step = step_control(sys, df, cfg, x);
      c.u = std::move(step.u);
      c.flag = step.relaxed ? StepFlag::relaxed : StepFlag::optimal;
      c.has_certificate = true;
      c.certificate = {std::move(step.constraint_lhs), std::move(step.constraint_rhs), step.trace_value};
      break;
    }
    case ControlMode::gradient: c.u = clip(gradient_controller(df, x, cfg.gradient_gain), sys); break;
    case ControlMode::nominal_only: c.u = clip(cfg.u_nominal(x), sys); break;
  }
  return c;
}

double density_or_inf(const DensityFunction& df, const Vec& x) {
  if (df.shaping.value(x) == 0.0) return std::numeric_limits<double>::infinity();
  return rho(df, x);
}

void check_inputs(const ControlAffineSystem& sys, const DensityFunction& df, const CdfConfig& cfg) {
  sys.validate();
  df.validate();
  cfg.validate();
  if (df.state_dim() != sys.n) throw std::invalid_argument("density and system dimensions differ");
  if (cfg.mode == ControlMode::gradient && sys.n != sys.m) {
    throw std::invalid_argument("gradient mode needs a single-integrator system");
  }
}

/// Records one state and applies the terminal checks. Returns true when the run ends here.
class Recorder {
 public:
  Recorder(Trajectory& traj, const DensityFunction& df, double dt) : traj_(traj), df_(df), dt_(dt) {
    traj_.min_clearance = std::numeric_limits<double>::infinity();
  }

  bool record(double t, Vec state, const Vec& position) {
    const double clearance = df_.clearance(position);
    traj_.times.push_back(t);
    traj_.states.push_back(std::move(state));
    traj_.clearance.push_back(clearance);
    traj_.rho.push_back(density_or_inf(df_, position));
    traj_.min_clearance = std::min(traj_.min_clearance, clearance);
    traj_.terminal_distance = df_.target_distance(position);
    if (clearance <= 0.0) {
      traj_.unsafe_dwell_time += dt_;
      traj_.outcome = Outcome::unsafe;
      return true;
    }
    if (traj_.terminal_distance <= df_.eta) {
      traj_.outcome = Outcome::converged;
      return true;
    }
    return false;
  }

  void push_control(Vec u, const Control& c) {
    traj_.controls.push_back(std::move(u));
    traj_.step_flags.push_back(c.flag);
    if (c.has_certificate) traj_.certificates.push_back(c.certificate);
  }

  void fail(const std::exception& e) {
    traj_.outcome = Outcome::infeasible;
    traj_.diagnostic = e.what();
  }

 private:
  Trajectory& traj_;
  const DensityFunction& df_;
  double dt_;
};

}  // namespace

Trajectory simulate(const ControlAffineSystem& sys, const DensityFunction& df, const CdfConfig& cfg,
                    const Vec& x0) {
  check_inputs(sys, df, cfg);
  require_state(x0, sys.n);

  Trajectory traj;
  Recorder rec(traj, df, cfg.dt);
  Vec x = x0;
  for (int k = 0;; ++k) {
    if (rec.record(k * cfg.dt, x, x)) break;
    if (k == cfg.horizon_steps) {
      traj.outcome = Outcome::timeout;
      break;
    }
    Control c;
    try {
      c = compute_control(sys, df, cfg, x);
    } catch (const InfeasibleStep& e) {
      rec.fail(e);
      break;
    } catch (const TargetSingularity& e) {
      rec.fail(e);
      break;
    }
    x = x + cfg.dt * sys.velocity(x, c.u);
    rec.push_control(c.u, c);
  }
  return traj;
}

DubinCommand dubin_steering(const Vec& u_planar, const DubinState& state, double dt) {
  if (u_planar.size() != 2 || !u_planar.allFinite()) throw InvalidState("planar control must be a finite 2-vector");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  DubinCommand cmd;
  cmd.next = state;
  cmd.v = u_planar.norm();
  if (cmd.v == 0.0) {
    cmd.theta_tilde = state.has_reference ? state.theta_tilde_prev : wrap_angle(state.theta);
  } else {
    cmd.theta_tilde = wrap_angle(std::atan2(u_planar[1], u_planar[0]));
  }
  const double rate = state.has_reference ? wrap_angle(cmd.theta_tilde - state.theta_tilde_prev) / dt : 0.0;
  cmd.omega = rate - state.k_gain * wrap_angle(state.theta - cmd.theta_tilde);
  cmd.next.theta_tilde_prev = cmd.theta_tilde;
  cmd.next.has_reference = true;
  return cmd;
}

Trajectory simulate_dubin(const ControlAffineSystem& planar, const DensityFunction& df, const CdfConfig& cfg,
                          const Vec& x0, double theta0, double k_gain) {
  check_inputs(planar, df, cfg);
  if (planar.n != 2 || planar.m != 2) throw std::invalid_argument("Dubin runs need the planar integrator");
  require_state(x0, 2);
  if (!std::isfinite(theta0)) throw InvalidState("invalid heading");
  if (!(k_gain > 0.0)) throw std::invalid_argument("heading gain must be positive");

  Trajectory traj;
  Recorder rec(traj, df, cfg.dt);
  DubinState ds;
  ds.x1 = x0[0];
  ds.x2 = x0[1];
  ds.theta = wrap_angle(theta0);
  ds.k_gain = k_gain;
  for (int k = 0;; ++k) {
    const Vec position = Eigen::Vector2d(ds.x1, ds.x2);
    if (rec.record(k * cfg.dt, Eigen::Vector3d(ds.x1, ds.x2, ds.theta), position)) break;
    if (k == cfg.horizon_steps) {
      traj.outcome = Outcome::timeout;
      break;
    }
    Control c;
    try {
      c = compute_control(planar, df, cfg, position);
    } catch (const InfeasibleStep& e) {
      rec.fail(e);
      break;
    } catch (const TargetSingularity& e) {
      rec.fail(e);
      break;
    }
    const DubinCommand cmd = dubin_steering(c.u, ds, cfg.dt);
    const double theta = ds.theta;
    ds = cmd.next;
    ds.x1 += cfg.dt * cmd.v * std::cos(theta);
    ds.x2 += cfg.dt * cmd.v * std::sin(theta);
    ds.theta = wrap_angle(theta + cfg.dt * cmd.omega);
    rec.push_control(Eigen::Vector2d(cmd.v, cmd.omega), c);
    traj.heading_reference.push_back(cmd.theta_tilde);
  }
  return traj;
}

}  // namespace cdf
