#pragma once

#include "cdf/density.hpp"
#include "cdf/dynamics.hpp"
#include "cdf/qp.hpp"

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cdf {

using ControlLaw = std::function<Vec(const Vec&)>;

enum class InfeasibilityPolicy { error, slack };

/// How the simulator picks the applied control.
enum class ControlMode {
  qp_cdf,        ///< per-step density QP
  gradient,      ///< u = gain * grad rho, single integrator only
  nominal_only,  ///< u = u_nominal(x), no safety filtering
};

struct CdfConfig {
  double beta = 0.01;
  double epsilon = 1e-3;
  double dt = 0.01;
  int horizon_steps = 5000;
  /// Strict inequalities are enforced as ">= rhs + margin" and "<= beta - margin".
  double margin = 0.0;
  ControlLaw u_nominal;
  InfeasibilityPolicy infeasibility_policy = InfeasibilityPolicy::error;
  ControlMode mode = ControlMode::qp_cdf;
  double gradient_gain = 1.0;
  /// Penalty weight on the single slack variable used by the slack policy.
  double slack_weight = 1e6;

  void validate() const;
};

/// Thrown by step_control under the error policy when the QP has no solution.
class InfeasibleStep : public std::runtime_error {
 public:
  InfeasibleStep(const std::string& what, int row, double violation)
      : std::runtime_error(what), row_(row), violation_(violation) {}
  int row() const { return row_; }
  double violation() const { return violation_; }

 private:
  int row_;
  double violation_;
};

/// Divergence constraint at one point: c0 + a'u >= rhs with
/// c0 = div(f rho), a_i = div(g_i rho), rhs = beta rho.
struct DivergenceRow {
  double c0 = 0.0;
  Vec a;
  double rhs = 0.0;
  double rho = 0.0;
};

struct StepResult {
  Vec u;
  /// Column j holds the control u^j solved at the perturbed point z_j.
  Mat u_perturbed;
  /// c0 + a'u at x followed by the same at each z_j.
  Vec constraint_lhs;
  /// beta rho at the same points.
  Vec constraint_rhs;
  double trace_value = 0.0;
  QpStatus qp_status = QpStatus::infeasible;
  bool relaxed = false;
  double slack = 0.0;
  double rho = 0.0;
  /// The trace bound drops rho; it is only conservative while rho <= 1.
  bool rho_above_one = false;
};

std::vector<Vec> perturbation_points(const Vec& x, double epsilon);

DivergenceRow divergence_row(const ControlAffineSystem& sys, const DensityFunction& df, double beta,
                             const Vec& x);

/// tr((grad_x u')' g(x)) is linear in the stacked decision vector (u, u^1, ..., u^n).
/// Returns those coefficients.
Vec trace_coefficients(const ControlAffineSystem& sys, const Vec& x, double epsilon);

/// Builds the step QP over the stacked decision vector (u, u^1, ..., u^n), length m(n+1).
/// Row order: n+1 divergence rows (x, z_1..z_n), then the two trace rows.
QpProblem assemble_step_qp(const ControlAffineSystem& sys, const DensityFunction& df, const CdfConfig& cfg,
                           const Vec& x);

StepResult step_control(const ControlAffineSystem& sys, const DensityFunction& df, const CdfConfig& cfg,
                        const Vec& x);

/// u0(x) = -K (x - target).
ControlLaw linear_feedback(Mat gain, Vec target);

}  // namespace cdf
