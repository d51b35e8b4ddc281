#pragma once

#include "cdf/density.hpp"
#include "cdf/simulator.hpp"

#include <vector>

namespace cdf {

/// Value written in place of rho inside the terminal neighbourhood, where V^-alpha blows up.
inline constexpr double kRhoSentinel = 1e12;

/// Uniform resolution x resolution grid over a 2-D slice of the state space.
/// Coordinates other than (dim_x, dim_y) are taken from `base`.
struct GridSpec {
  Eigen::Vector2d lower{-1.0, -1.0};
  Eigen::Vector2d upper{1.0, 1.0};
  int resolution = 101;
  int dim_x = 0;
  int dim_y = 1;
  Vec base;

  void validate(Eigen::Index state_dim) const;
};

struct GridSample {
  double x1 = 0.0;
  double x2 = 0.0;
  double rho = 0.0;
  double grad_x1 = 0.0;
  double grad_x2 = 0.0;
  bool in_unsafe = false;
  bool in_sensing = false;
};

/// Row-major samples: index = iy * resolution + ix.
std::vector<GridSample> density_grid(const DensityFunction& df, const GridSpec& spec,
                                     Execution execution = Execution::parallel);

}  // namespace cdf
