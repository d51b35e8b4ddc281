#include "cdf/controller.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

namespace cdf {

void CdfConfig::validate() const {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw std::invalid_argument("beta must be positive");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw std::invalid_argument("epsilon must be positive");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be positive");
  if (horizon_steps < 1) throw std::invalid_argument("steps must be >= 1");
  if (!(margin >= 0.0) || margin >= beta) throw std::invalid_argument("margin must lie in [0, beta)");
  if (!(gradient_gain > 0.0)) throw std::invalid_argument("gradient_gain must be positive");
  if (!(slack_weight > 0.0)) throw std::invalid_argument("slack_weight must be positive");
  if (mode == ControlMode::nominal_only && !u_nominal) {
    throw std::invalid_argument("nominal_only mode needs a nominal control");
  }
}

std::vector<Vec> perturbation_points(const Vec& x, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  std::vector<Vec> points;
  points.reserve(static_cast<std::size_t>(x.size()));
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Vec z = x;
    z[j] += epsilon;
    points.push_back(std::move(z));
  }
  return points;
}

DivergenceRow divergence_row(const ControlAffineSystem& sys, const DensityFunction& df, double beta,
                             const Vec& x) {
  require_state(x, sys.n);
  const DensityValue d = evaluate_density(df, x);
  const Mat g = sys.input_columns(x);
  DivergenceRow row;
  row.rho = d.rho;
  // div(h rho) = rho div(h) + grad(rho)' h
  row.c0 = d.rho * sys.drift_divergence(x) + d.gradient.dot(sys.drift(x));
  row.a = d.rho * sys.input_divergences(x) + g.transpose() * d.gradient;
  row.rhs = beta * d.rho;
  return row;
}

Vec trace_coefficients(const ControlAffineSystem& sys, const Vec& x, double epsilon) {
  const Eigen::Index n = sys.n;
  const Eigen::Index m = sys.m;
  const Mat g = sys.input_columns(x);
  // tr(M g) with M(i, j) = (u^j_i - u_i) / eps, so tr = sum_{i,j} (u^j_i - u_i) g(j, i) / eps.
  Vec coef = Vec::Zero(m * (n + 1));
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) {
      coef[(j + 1) * m + i] += g(j, i) / epsilon;
      coef[i] -= g(j, i) / epsilon;
    }
  }
  return coef;
}

namespace {

struct StepRows {
  std::vector<Vec> points;
  std::vector<DivergenceRow> divergence;
  Vec trace;
};

StepRows build_rows(const ControlAffineSystem& sys, const DensityFunction& df, const CdfConfig& cfg,
                    const Vec& x) {
  StepRows rows;
  rows.points.push_back(x);
  for (Vec& z : perturbation_points(x, cfg.epsilon)) rows.points.push_back(std::move(z));
  for (const Vec& point : rows.points) rows.divergence.push_back(divergence_row(sys, df, cfg.beta, point));
  rows.trace = trace_coefficients(sys, x, cfg.epsilon);
  return rows;
}

QpProblem build_problem(const ControlAffineSystem& sys, const CdfConfig& cfg, const StepRows& rows) {
  const Eigen::Index n = sys.n;
  const Eigen::Index m = sys.m;
  const Eigen::Index p = m * (n + 1);
  QpProblem qp;
  qp.H = 2.0 * Mat::Identity(p, p);
  qp.q = Vec::Zero(p);
  qp.A = Mat::Zero(n + 3, p);
  qp.b = Vec::Zero(n + 3);
  qp.lower.resize(p);
  qp.upper.resize(p);
  for (Eigen::Index k = 0; k <= n; ++k) {
    const DivergenceRow& row = rows.divergence[static_cast<std::size_t>(k)];
    qp.A.block(k, k * m, 1, m) = row.a.transpose();
    qp.b[k] = row.rhs - row.c0 + cfg.margin;
    qp.lower.segment(k * m, m) = sys.control_lower;
    qp.upper.segment(k * m, m) = sys.control_upper;
    if (cfg.u_nominal) {
      // |u - u0|^2 = u'u - 2 u0'u + const
      qp.q.segment(k * m, m) = -2.0 * cfg.u_nominal(rows.points[static_cast<std::size_t>(k)]);
    }
  }
  const double bound = cfg.beta - cfg.margin;
  qp.A.row(n + 1) = -rows.trace.transpose();
  qp.b[n + 1] = -bound;
  qp.A.row(n + 2) = rows.trace.transpose();
  qp.b[n + 2] = -bound;
  return qp;
}

QpProblem with_slack(const QpProblem& base, Eigen::Index divergence_rows, double weight) {
  const Eigen::Index p = base.variables();
  QpProblem qp;
  qp.H = Mat::Zero(p + 1, p + 1);
  qp.H.topLeftCorner(p, p) = base.H;
  qp.H(p, p) = 2.0 * weight;
  qp.q = Vec::Zero(p + 1);
  qp.q.head(p) = base.q;
  qp.A = Mat::Zero(base.rows(), p + 1);
  qp.A.leftCols(p) = base.A;
  qp.A.col(p).head(divergence_rows).setOnes();
  qp.b = base.b;
  qp.lower.resize(p + 1);
  qp.upper.resize(p + 1);
  qp.lower.head(p) = base.lower;
  qp.upper.head(p) = base.upper;
  qp.lower[p] = 0.0;
  qp.upper[p] = std::numeric_limits<double>::infinity();
  return qp;
}

std::string describe_row(int id, Eigen::Index n, Eigen::Index rows) {
  if (id < 0) return "unknown row";
  if (id == 0) return "divergence row at x";
  if (id <= n) return "divergence row at z_" + std::to_string(id);
  if (id == n + 1) return "trace upper bound";
  if (id == n + 2) return "trace lower bound";
  const int bound = id - static_cast<int>(rows);
  return std::string(bound % 2 == 0 ? "lower" : "upper") + " bound on variable " + std::to_string(bound / 2);
}

}  // namespace

QpProblem assemble_step_qp(const ControlAffineSystem& sys, const DensityFunction& df, const CdfConfig& cfg,
                           const Vec& x) {
  return build_problem(sys, cfg, build_rows(sys, df, cfg, x));
}

StepResult step_control(const ControlAffineSystem& sys, const DensityFunction& df, const CdfConfig& cfg,
                        const Vec& x) {
  const Eigen::Index n = sys.n;
  const Eigen::Index m = sys.m;
  const Eigen::Index p = m * (n + 1);
  const StepRows rows = build_rows(sys, df, cfg, x);
  const QpProblem qp = build_problem(sys, cfg, rows);

  StepResult result;
  QpSolution sol = qp_solve(qp);
  if (sol.status != QpStatus::optimal) {
    if (cfg.infeasibility_policy == InfeasibilityPolicy::error) {
      std::ostringstream msg;
      msg << "step QP " << to_string(sol.status);
      if (sol.status == QpStatus::infeasible) {
        msg << ": " << describe_row(sol.violated_constraint, n, qp.rows()) << " violated by "
            << sol.violation;
      }
      throw InfeasibleStep(msg.str(), sol.violated_constraint, sol.violation);
    }
    sol = qp_solve(with_slack(qp, n + 1, cfg.slack_weight));
    if (sol.status != QpStatus::optimal) {
      throw InfeasibleStep("relaxed step QP " + to_string(sol.status), sol.violated_constraint,
                           sol.violation);
    }
    result.relaxed = true;
    result.slack = sol.u_star[p];
  }

  const Vec w = sol.u_star.head(p);
  result.u = w.head(m);
  result.u_perturbed.resize(m, n);
  for (Eigen::Index j = 0; j < n; ++j) result.u_perturbed.col(j) = w.segment((j + 1) * m, m);
  result.constraint_lhs.resize(n + 1);
  result.constraint_rhs.resize(n + 1);
  for (Eigen::Index k = 0; k <= n; ++k) {
    const DivergenceRow& row = rows.divergence[static_cast<std::size_t>(k)];
    result.constraint_lhs[k] = row.c0 + row.a.dot(w.segment(k * m, m));
    result.constraint_rhs[k] = row.rhs;
  }
  result.trace_value = rows.trace.dot(w);
  result.qp_status = QpStatus::optimal;
  result.rho = rows.divergence.front().rho;
  result.rho_above_one = result.rho > 1.0;
  return result;
}

ControlLaw linear_feedback(Mat gain, Vec target) {
  return [gain = std::move(gain), target = std::move(target)](const Vec& x) -> Vec {
    return -gain * (x - target);
  };
}

}  // namespace cdf
