#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace cdf {

/// minimize 1/2 u'Hu + q'u  subject to  A u >= b,  lower <= u <= upper.
///
/// H must be symmetric positive definite. Infinite bounds are ignored.
struct QpProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd q;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Eigen::Index variables() const { return H.rows(); }
  Eigen::Index rows() const { return A.rows(); }

  /// Box-free problem with no inequality rows.
  static QpProblem unconstrained(Eigen::MatrixXd H, Eigen::VectorXd q);
};

enum class QpStatus { optimal, infeasible, iteration_limit };

std::string to_string(QpStatus status);

/// Constraint indexing used by active_set and violated_constraint:
/// [0, r) are the rows of A, r + 2i is the lower bound of u_i and r + 2i + 1 its upper bound.
struct QpSolution {
  Eigen::VectorXd u_star;
  double objective = 0.0;
  QpStatus status = QpStatus::infeasible;
  std::vector<int> active_set;
  /// Multipliers aligned with active_set; nonnegative at an optimum.
  Eigen::VectorXd multipliers;
  /// max(|Hu + q - sum_i lambda_i a_i|_inf, max primal violation).
  double kkt_residual = 0.0;
  int iterations = 0;
  /// Set when status is infeasible: the constraint that could not be satisfied and
  /// its violation b_i - a_i'u at the last iterate.
  int violated_constraint = -1;
  double violation = 0.0;
};

/// Dual active-set solve (Goldfarb-Idnani). Starts from the unconstrained minimizer and
/// adds the most violated constraint (normalized by its row norm, lowest index on ties)
/// until the iterate is feasible. Deterministic. Throws std::invalid_argument when the
/// problem is malformed (dimensions, asymmetric or indefinite H, more than 512 rows).
QpSolution qp_solve(const QpProblem& problem);

}  // namespace cdf
