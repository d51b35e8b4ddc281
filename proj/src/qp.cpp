#include "cdf/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cdf {

namespace {

constexpr Eigen::Index kMaxRows = 512;

struct Row {
  Eigen::VectorXd a;
  double b = 0.0;
  int id = 0;
  double norm = 0.0;
};

std::vector<Row> collect_rows(const QpProblem& p) {
  const Eigen::Index n = p.variables();
  const Eigen::Index r = p.rows();
  std::vector<Row> rows;
  rows.reserve(static_cast<std::size_t>(r + 2 * n));
  for (Eigen::Index i = 0; i < r; ++i) {
    Row row{p.A.row(i).transpose(), p.b[i], static_cast<int>(i), 0.0};
    row.norm = row.a.norm();
    rows.push_back(std::move(row));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (p.lower.size() == n && std::isfinite(p.lower[i])) {
      Row row{Eigen::VectorXd::Unit(n, i), p.lower[i], static_cast<int>(r + 2 * i), 1.0};
      rows.push_back(std::move(row));
    }
    if (p.upper.size() == n && std::isfinite(p.upper[i])) {
      Row row{-Eigen::VectorXd::Unit(n, i), -p.upper[i], static_cast<int>(r + 2 * i + 1), 1.0};
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void check_problem(const QpProblem& p) {
  const Eigen::Index n = p.variables();
  if (n == 0 || p.H.cols() != n) throw std::invalid_argument("qp: H must be square and non-empty");
  if (p.q.size() != n) throw std::invalid_argument("qp: q has the wrong length");
  if (p.A.rows() != p.b.size() || (p.A.rows() > 0 && p.A.cols() != n)) {
    throw std::invalid_argument("qp: A/b dimensions are inconsistent");
  }
  if ((p.lower.size() != 0 && p.lower.size() != n) || (p.upper.size() != 0 && p.upper.size() != n)) {
    throw std::invalid_argument("qp: bound vectors have the wrong length");
  }
  if (p.rows() + 2 * n > kMaxRows) throw std::invalid_argument("qp: problem exceeds 512 constraint rows");
  if (!p.H.allFinite() || !p.q.allFinite() || !p.A.allFinite() || !p.b.allFinite()) {
    throw std::invalid_argument("qp: non-finite problem data");
  }
  if (p.lower.hasNaN() || p.upper.hasNaN()) throw std::invalid_argument("qp: NaN bound");
  if ((p.H - p.H.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw std::invalid_argument("qp: H must be symmetric");
  }
}

Eigen::MatrixXd active_normals(const std::vector<Row>& rows, const std::vector<std::size_t>& active,
                               Eigen::Index n) {
  Eigen::MatrixXd N(n, static_cast<Eigen::Index>(active.size()));
  for (std::size_t k = 0; k < active.size(); ++k) N.col(static_cast<Eigen::Index>(k)) = rows[active[k]].a;
  return N;
}

double max_violation(const std::vector<Row>& rows, const Eigen::VectorXd& u) {
  double worst = 0.0;
  for (const auto& row : rows) worst = std::max(worst, row.b - row.a.dot(u));
  return worst;
}

}  // namespace

QpProblem QpProblem::unconstrained(Eigen::MatrixXd H, Eigen::VectorXd q) {
  QpProblem p;
  const Eigen::Index n = H.rows();
  p.H = std::move(H);
  p.q = std::move(q);
  p.A.resize(0, n);
  p.b.resize(0);
  return p;
}

std::string to_string(QpStatus status) {
  switch (status) {
    case QpStatus::optimal: return "optimal";
    case QpStatus::infeasible: return "infeasible";
    case QpStatus::iteration_limit: return "iteration_limit";
  }
  return "unknown";
}

QpSolution qp_solve(const QpProblem& problem) {
  check_problem(problem);
  const Eigen::Index n = problem.variables();
  const Eigen::LLT<Eigen::MatrixXd> llt(problem.H);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("qp: H is not positive definite");

  const std::vector<Row> rows = collect_rows(problem);
  const int limit = 100 * static_cast<int>(problem.rows() + n);

  QpSolution sol;
  const Eigen::VectorXd u_free = -llt.solve(problem.q);
  Eigen::VectorXd u = u_free;
  std::vector<std::size_t> active;
  std::vector<double> lambda;
  std::vector<bool> is_active(rows.size(), false);

  auto drop = [&](std::size_t k) {
    is_active[active[k]] = false;
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(k));
    lambda.erase(lambda.begin() + static_cast<std::ptrdiff_t>(k));
  };

  auto finish = [&](QpStatus status) {
    sol.status = status;
    sol.u_star = u;
    sol.objective = 0.5 * u.dot(problem.H * u) + problem.q.dot(u);
    sol.active_set.clear();
    sol.multipliers.resize(static_cast<Eigen::Index>(active.size()));
    Eigen::VectorXd stationarity = problem.H * u + problem.q;
    for (std::size_t k = 0; k < active.size(); ++k) {
      sol.active_set.push_back(rows[active[k]].id);
      sol.multipliers[static_cast<Eigen::Index>(k)] = lambda[k];
      stationarity -= lambda[k] * rows[active[k]].a;
    }
    sol.kkt_residual = std::max(stationarity.cwiseAbs().maxCoeff(), max_violation(rows, u));
    return sol;
  };

  while (true) {
    // Most violated inactive constraint, scaled by its row norm; lowest index wins ties.
    std::size_t chosen = rows.size();
    double chosen_score = 0.0;
    const double u_scale = u.cwiseAbs().maxCoeff();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (is_active[i]) continue;
      const Row& row = rows[i];
      const double slack = row.a.dot(u) - row.b;
      const double tol = 1e-12 * (1.0 + std::abs(row.b) + row.norm * u_scale);
      if (slack >= -tol) continue;
      if (row.norm == 0.0) {
        sol.violated_constraint = row.id;
        sol.violation = -slack;
        return finish(QpStatus::infeasible);
      }
      const double score = slack / row.norm;
      if (chosen == rows.size() || score < chosen_score) {
        chosen = i;
        chosen_score = score;
      }
    }
    if (chosen == rows.size()) break;

    const Row& add = rows[chosen];
    double lambda_add = 0.0;
    while (true) {
      if (++sol.iterations > limit) return finish(QpStatus::iteration_limit);

      // Work in the metric of H: with H = LL', the primal step is L^{-T} of the part of
      // L^{-1}a orthogonal to L^{-1}N, and the dual step r solves the least-squares fit.
      const Eigen::VectorXd n_tilde = llt.matrixL().solve(add.a);
      Eigen::VectorXd dual_step = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(active.size()));
      Eigen::VectorXd projected = n_tilde;
      if (!active.empty()) {
        const Eigen::MatrixXd N_tilde = llt.matrixL().solve(active_normals(rows, active, n));
        dual_step = N_tilde.householderQr().solve(n_tilde);
        projected = n_tilde - N_tilde * dual_step;
      }
      const bool dependent = projected.norm() <= 1e-10 * n_tilde.norm();

      double partial = std::numeric_limits<double>::infinity();
      std::size_t blocking = active.size();
      const double r_tol = 1e-13 * (dual_step.size() ? dual_step.cwiseAbs().maxCoeff() : 0.0);
      for (std::size_t k = 0; k < active.size(); ++k) {
        const double rk = dual_step[static_cast<Eigen::Index>(k)];
        if (rk <= r_tol) continue;
        const double ratio = std::max(lambda[k], 0.0) / rk;
        if (ratio < partial) {
          partial = ratio;
          blocking = k;
        }
      }

      if (dependent) {
        if (blocking == active.size()) {
          sol.violated_constraint = add.id;
          sol.violation = add.b - add.a.dot(u);
          return finish(QpStatus::infeasible);
        }
        for (std::size_t k = 0; k < active.size(); ++k) lambda[k] -= partial * dual_step[static_cast<Eigen::Index>(k)];
        lambda_add += partial;
        drop(blocking);
        continue;
      }

      const Eigen::VectorXd step = llt.matrixU().solve(projected);
      const double full = (add.b - add.a.dot(u)) / projected.squaredNorm();
      const double t = std::min(full, partial);
      u += t * step;
      for (std::size_t k = 0; k < active.size(); ++k) lambda[k] -= t * dual_step[static_cast<Eigen::Index>(k)];
      lambda_add += t;
      if (full <= partial) {
        active.push_back(chosen);
        lambda.push_back(lambda_add);
        is_active[chosen] = true;
        break;
      }
      drop(blocking);
    }
  }

  // Re-solve the equality-constrained problem on the final working set to clean up drift.
  if (!active.empty()) {
    const Eigen::MatrixXd N = active_normals(rows, active, n);
    const Eigen::MatrixXd N_tilde = llt.matrixL().solve(N);
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(active.size()));
    for (std::size_t k = 0; k < active.size(); ++k) rhs[static_cast<Eigen::Index>(k)] = rows[active[k]].b;
    rhs -= N.transpose() * u_free;
    const Eigen::VectorXd refined_lambda = (N_tilde.transpose() * N_tilde).ldlt().solve(rhs);
    const Eigen::VectorXd refined_u = u_free + llt.solve(N * refined_lambda);
    if (refined_u.allFinite() && refined_lambda.minCoeff() >= -1e-10 &&
        max_violation(rows, refined_u) <= std::max(max_violation(rows, u), 1e-14)) {
      u = refined_u;
      for (std::size_t k = 0; k < active.size(); ++k) lambda[k] = refined_lambda[static_cast<Eigen::Index>(k)];
    }
  }
  return finish(QpStatus::optimal);
}

}  // namespace cdf
