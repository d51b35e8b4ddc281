#include "cdf/density.hpp"

#include <cmath>
#include <limits>

namespace cdf {

namespace {

// Beyond these shell coordinates exp(-1/m) is below double resolution.
constexpr double kShellGuard = 1e-12;

}  // namespace

void require_state(const Vec& x, Eigen::Index dim) {
  if (x.size() != dim) {
    throw InvalidState("invalid state: expected dimension " + std::to_string(dim) + ", got " +
                       std::to_string(x.size()));
  }
  if (!x.allFinite()) throw InvalidState();
}

ObstacleSpec ObstacleSpec::ball(Vec center, double r_unsafe, double r_sense) {
  ObstacleSpec obs;
  obs.dims.resize(static_cast<std::size_t>(center.size()));
  for (std::size_t i = 0; i < obs.dims.size(); ++i) obs.dims[i] = static_cast<int>(i);
  obs.center = std::move(center);
  obs.r_unsafe = r_unsafe;
  obs.r_sense = r_sense;
  return obs;
}

double ObstacleSpec::squared_distance(const Vec& x) const {
  double sum = 0.0;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    const double d = x[dims[i]] - center[static_cast<Eigen::Index>(i)];
    sum += d * d;
  }
  return sum;
}

Vec ObstacleSpec::squared_distance_gradient(const Vec& x) const {
  Vec g = Vec::Zero(x.size());
  for (std::size_t i = 0; i < dims.size(); ++i) {
    g[dims[i]] = 2.0 * (x[dims[i]] - center[static_cast<Eigen::Index>(i)]);
  }
  return g;
}

double ObstacleSpec::unsafe_level(const Vec& x) const {
  return squared_distance(x) - r_unsafe * r_unsafe;
}

double ObstacleSpec::sensing_level(const Vec& x) const {
  return squared_distance(x) - r_sense * r_sense;
}

Vec ObstacleSpec::unsafe_level_gradient(const Vec& x) const { return squared_distance_gradient(x); }

Vec ObstacleSpec::sensing_level_gradient(const Vec& x) const { return squared_distance_gradient(x); }

void ObstacleSpec::validate(Eigen::Index state_dim) const {
  if (!(r_unsafe > 0.0) || !std::isfinite(r_unsafe)) {
    throw std::invalid_argument("obstacle r_unsafe must be positive");
  }
  if (!(r_sense > r_unsafe) || !std::isfinite(r_sense)) {
    throw std::invalid_argument("obstacle r_sense must exceed r_unsafe");
  }
  if (dims.empty() || static_cast<Eigen::Index>(dims.size()) != center.size()) {
    throw std::invalid_argument("obstacle dims must match the center dimension");
  }
  if (!center.allFinite()) throw std::invalid_argument("obstacle center must be finite");
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (dims[i] < 0 || dims[i] >= state_dim) {
      throw std::invalid_argument("obstacle dims index out of range");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (dims[i] == dims[j]) throw std::invalid_argument("obstacle dims must be distinct");
    }
  }
}

double ShapingFunction::value(const Vec& x) const {
  const Vec e = x - target;
  return e.dot(P * e);
}

Vec ShapingFunction::gradient(const Vec& x) const { return 2.0 * (P * (x - target)); }

void ShapingFunction::validate() const {
  const auto n = target.size();
  if (n == 0 || !target.allFinite()) throw std::invalid_argument("target must be a finite vector");
  if (P.rows() != n || P.cols() != n) throw std::invalid_argument("P must be n x n");
  if (!P.allFinite()) throw std::invalid_argument("P must be finite");
  if ((P - P.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw std::invalid_argument("P must be symmetric");
  }
  if (Eigen::LLT<Mat>(P).info() != Eigen::Success) {
    throw std::invalid_argument("P must be positive definite (Cholesky failed)");
  }
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("alpha must be positive");
}

double DensityFunction::clearance(const Vec& x) const {
  double c = std::numeric_limits<double>::infinity();
  for (const auto& obs : obstacles) c = std::min(c, obs.unsafe_level(x));
  return c;
}

bool DensityFunction::in_unsafe(const Vec& x) const { return clearance(x) <= 0.0; }

bool DensityFunction::in_sensing(const Vec& x) const {
  for (const auto& obs : obstacles) {
    if (obs.unsafe_level(x) > 0.0 && obs.sensing_level(x) <= 0.0) return true;
  }
  return false;
}

double DensityFunction::target_distance(const Vec& x) const { return (x - shaping.target).norm(); }

void DensityFunction::validate() const {
  shaping.validate();
  for (const auto& obs : obstacles) obs.validate(state_dim());
  if (!(eta > 0.0) || !std::isfinite(eta)) throw std::invalid_argument("eta must be positive");
}

double smooth_step(double m) {
  if (m <= kShellGuard) return 0.0;
  if (m >= 1.0 - kShellGuard) return 1.0;
  // exp(-1/m) / (exp(-1/m) + exp(-1/(1-m))) rewritten as a logistic in s.
  const double s = 1.0 / m - 1.0 / (1.0 - m);
  return 1.0 / (1.0 + std::exp(s));
}

double smooth_step_derivative(double m) {
  if (m <= kShellGuard || m >= 1.0 - kShellGuard) return 0.0;
  const double s = 1.0 / m - 1.0 / (1.0 - m);
  // psi (1 - psi) without cancellation near either end.
  const double logistic = 1.0 / ((1.0 + std::exp(s)) * (1.0 + std::exp(-s)));
  return logistic * (1.0 / (m * m) + 1.0 / ((1.0 - m) * (1.0 - m)));
}

double bump_value(const ObstacleSpec& obs, const Vec& x) {
  if (!x.allFinite()) throw InvalidState();
  const double c = obs.unsafe_level(x);
  if (c <= 0.0) return 0.0;
  const double b = obs.sensing_level(x);
  if (b > 0.0) return 1.0;
  return smooth_step(c / (c - b));
}

Vec bump_gradient(const ObstacleSpec& obs, const Vec& x) {
  if (!x.allFinite()) throw InvalidState();
  const double c = obs.unsafe_level(x);
  const double b = obs.sensing_level(x);
  if (c <= 0.0 || b > 0.0) return Vec::Zero(x.size());
  const double gap = c - b;
  const double m = c / gap;
  const Vec grad_m = (c * obs.sensing_level_gradient(x) - b * obs.unsafe_level_gradient(x)) / (gap * gap);
  return smooth_step_derivative(m) * grad_m;
}

DensityValue evaluate_density(const DensityFunction& df, const Vec& x) {
  require_state(x, df.state_dim());
  const double v = df.shaping.value(x);
  if (v == 0.0) throw TargetSingularity();

  const std::size_t k = df.obstacles.size();
  std::vector<double> psi(k);
  for (std::size_t i = 0; i < k; ++i) psi[i] = bump_value(df.obstacles[i], x);

  // grad prod_k Psi_k = sum_k (prod_{j != k} Psi_j) grad Psi_k, via prefix/suffix products.
  std::vector<double> suffix(k + 1, 1.0);
  for (std::size_t i = k; i-- > 0;) suffix[i] = suffix[i + 1] * psi[i];
  const double product = suffix[0];

  Vec grad_product = Vec::Zero(x.size());
  double prefix = 1.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double others = prefix * suffix[i + 1];
    if (others != 0.0) grad_product += others * bump_gradient(df.obstacles[i], x);
    prefix *= psi[i];
  }

  const double alpha = df.shaping.alpha;
  const double v_pow = std::pow(v, -alpha);
  DensityValue out;
  out.rho = product * v_pow;
  out.gradient = v_pow * grad_product;
  if (product != 0.0) out.gradient -= (alpha * out.rho / v) * df.shaping.gradient(x);
  return out;
}

double rho(const DensityFunction& df, const Vec& x) {
  require_state(x, df.state_dim());
  const double v = df.shaping.value(x);
  if (v == 0.0) throw TargetSingularity();
  double product = 1.0;
  for (const auto& obs : df.obstacles) {
    product *= bump_value(obs, x);
    if (product == 0.0) return 0.0;
  }
  return product * std::pow(v, -df.shaping.alpha);
}

Vec grad_rho(const DensityFunction& df, const Vec& x) { return evaluate_density(df, x).gradient; }

Vec gradient_controller(const DensityFunction& df, const Vec& x, double gain) {
  return gain * grad_rho(df, x);
}

}  // namespace cdf
