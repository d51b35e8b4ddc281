#pragma once

#include "cdf/density.hpp"

#include <functional>
#include <string>

namespace cdf {

/// x' = f(x) + g(x) u with analytic spatial divergences of f and of each column of g.
struct ControlAffineSystem {
  std::string name;
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  std::function<Vec(const Vec&)> drift;
  std::function<Mat(const Vec&)> input_columns;
  std::function<double(const Vec&)> drift_divergence;
  std::function<Vec(const Vec&)> input_divergences;
  Vec control_lower;
  Vec control_upper;
  /// Set when the divergences come from central differences rather than closed forms.
  bool numeric_divergences = false;
  /// The planar integrator standing in for the unicycle; the simulator adds heading tracking.
  bool heading_layer = false;

  Vec velocity(const Vec& x, const Vec& u) const { return drift(x) + input_columns(x) * u; }

  /// Replaces the control box; both vectors must have length m.
  void set_control_bounds(Vec lower, Vec upper);

  void validate() const;
};

ControlAffineSystem single_integrator(Eigen::Index d);

/// x1' = x2, x2' = x1 - x1^3 - 0.1 x2 + u, with |u| <= 2.
ControlAffineSystem duffing();

/// Planar single integrator for the (x1, x2) part of the Dubin car.
ControlAffineSystem dubin_reduced();

/// Builds a system from f and g alone; divergences are taken by central differences
/// with step `h` and the result is flagged numeric_divergences.
ControlAffineSystem system_with_numeric_divergences(std::string name, Eigen::Index n, Eigen::Index m,
                                                    std::function<Vec(const Vec&)> drift,
                                                    std::function<Mat(const Vec&)> input_columns,
                                                    double h = 1e-6);

/// Looks up a shipped system: "single_integrator" (uses `dimension`), "duffing", "dubin".
ControlAffineSystem make_system(const std::string& name, Eigen::Index dimension = 2);

}  // namespace cdf
