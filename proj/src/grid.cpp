#include "cdf/grid.hpp"

#include <omp.h>

#include <cstdint>
#include <stdexcept>

namespace cdf {

void GridSpec::validate(Eigen::Index state_dim) const {
  if (resolution < 2) throw std::invalid_argument("resolution must be >= 2");
  if (!lower.allFinite() || !upper.allFinite() || (upper - lower).minCoeff() < 0.0) {
    throw std::invalid_argument("grid box must be finite with lower <= upper");
  }
  if (dim_x < 0 || dim_y < 0 || dim_x >= state_dim || dim_y >= state_dim || dim_x == dim_y) {
    throw std::invalid_argument("grid slice dims must be two distinct state indices");
  }
  if (state_dim != 2 && base.size() != state_dim) {
    throw std::invalid_argument("grid on a state of dimension != 2 needs a base point");
  }
  if (base.size() != 0 && (base.size() != state_dim || !base.allFinite())) {
    throw std::invalid_argument("grid base point has the wrong dimension");
  }
}

namespace {

double axis(double lo, double hi, int i, int res) {
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(res - 1);
}

GridSample sample_point(const DensityFunction& df, const GridSpec& spec, Vec x, int ix, int iy) {
  GridSample s;
  s.x1 = axis(spec.lower[0], spec.upper[0], ix, spec.resolution);
  s.x2 = axis(spec.lower[1], spec.upper[1], iy, spec.resolution);
  x[spec.dim_x] = s.x1;
  x[spec.dim_y] = s.x2;
  s.in_unsafe = df.in_unsafe(x);
  s.in_sensing = df.in_sensing(x);
  if (df.target_distance(x) <= df.eta) {
    s.rho = kRhoSentinel;
    return s;
  }
  const DensityValue d = evaluate_density(df, x);
  s.rho = d.rho;
  s.grad_x1 = d.gradient[spec.dim_x];
  s.grad_x2 = d.gradient[spec.dim_y];
  return s;
}

}  // namespace

std::vector<GridSample> density_grid(const DensityFunction& df, const GridSpec& spec, Execution execution) {
  df.validate();
  spec.validate(df.state_dim());
  const Vec base = spec.base.size() ? spec.base : Vec::Zero(df.state_dim());
  const int res = spec.resolution;
  std::vector<GridSample> out(static_cast<std::size_t>(res) * static_cast<std::size_t>(res));
  if (execution == Execution::serial) {
    for (int iy = 0; iy < res; ++iy) {
      for (int ix = 0; ix < res; ++ix) {
        out[static_cast<std::size_t>(iy) * res + ix] = sample_point(df, spec, base, ix, iy);
      }
    }
    return out;
  }
  const auto total = static_cast<std::int64_t>(out.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t idx = 0; idx < total; ++idx) {
    const int iy = static_cast<int>(idx / res);
    const int ix = static_cast<int>(idx % res);
    out[static_cast<std::size_t>(idx)] = sample_point(df, spec, base, ix, iy);
  }
  return out;
}

}  // namespace cdf
