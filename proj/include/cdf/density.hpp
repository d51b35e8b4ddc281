#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace cdf {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Raised when a state has the wrong dimension or non-finite components.
class InvalidState : public std::invalid_argument {
 public:
  explicit InvalidState(const std::string& what = "invalid state") : std::invalid_argument(what) {}
};

/// Raised when the density is evaluated exactly at the target, where V(x) = 0.
class TargetSingularity : public std::domain_error {
 public:
  TargetSingularity() : std::domain_error("target singularity") {}
};

/// Throws InvalidState unless x has `dim` finite components.
void require_state(const Vec& x, Eigen::Index dim);

/// A ball-shaped unsafe region together with its sensing ball, embedded in a
/// subset of the state coordinates.
///
///   c(x) = |x_dims - center|^2 - r_unsafe^2   (unsafe where c <= 0)
///   b(x) = |x_dims - center|^2 - r_sense^2    (sensing where b <= 0, c > 0)
struct ObstacleSpec {
  Vec center;
  double r_unsafe = 0.0;
  double r_sense = 0.0;
  std::vector<int> dims;

  /// Ball in the leading center.size() coordinates.
  static ObstacleSpec ball(Vec center, double r_unsafe, double r_sense);

  double unsafe_level(const Vec& x) const;
  double sensing_level(const Vec& x) const;
  /// Gradients of c and b with respect to the full state.
  Vec unsafe_level_gradient(const Vec& x) const;
  Vec sensing_level_gradient(const Vec& x) const;

  /// Throws std::invalid_argument naming the violated invariant.
  void validate(Eigen::Index state_dim) const;

 private:
  double squared_distance(const Vec& x) const;
  Vec squared_distance_gradient(const Vec& x) const;
};

/// V(x) = (x - target)' P (x - target).
struct ShapingFunction {
  Vec target;
  Mat P;
  double alpha = 0.2;

  double value(const Vec& x) const;
  Vec gradient(const Vec& x) const;

  void validate() const;
};

/// rho(x) = prod_k Psi_k(x) / V(x)^alpha, with the terminal neighbourhood radius eta.
struct DensityFunction {
  std::vector<ObstacleSpec> obstacles;
  ShapingFunction shaping;
  double eta = 0.1;

  Eigen::Index state_dim() const { return shaping.target.size(); }

  /// min_k c_k(x); +inf when there are no obstacles.
  double clearance(const Vec& x) const;
  bool in_unsafe(const Vec& x) const;
  /// True when x lies in some sensing shell B_k.
  bool in_sensing(const Vec& x) const;
  double target_distance(const Vec& x) const;

  void validate() const;
};

/// The smooth step of the inverse bump as a function of the shell coordinate m in [0,1].
double smooth_step(double m);
double smooth_step_derivative(double m);

double bump_value(const ObstacleSpec& obs, const Vec& x);
Vec bump_gradient(const ObstacleSpec& obs, const Vec& x);

double rho(const DensityFunction& df, const Vec& x);
Vec grad_rho(const DensityFunction& df, const Vec& x);

struct DensityValue {
  double rho = 0.0;
  Vec gradient;
};

/// rho and its gradient in one pass.
DensityValue evaluate_density(const DensityFunction& df, const Vec& x);

/// Single-integrator reference law u = gain * grad rho(x).
Vec gradient_controller(const DensityFunction& df, const Vec& x, double gain = 1.0);

}  // namespace cdf
