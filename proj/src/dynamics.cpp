#include "cdf/dynamics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace cdf {

namespace {

Vec unbounded(Eigen::Index m, double sign) {
  return Vec::Constant(m, sign * std::numeric_limits<double>::infinity());
}

}  // namespace

void ControlAffineSystem::set_control_bounds(Vec lower, Vec upper) {
  if (lower.size() != m || upper.size() != m) {
    throw std::invalid_argument("control bounds must have length m");
  }
  control_lower = std::move(lower);
  control_upper = std::move(upper);
}

void ControlAffineSystem::validate() const {
  if (n < 1 || m < 1) throw std::invalid_argument("system dimensions must be positive");
  if (!drift || !input_columns || !drift_divergence || !input_divergences) {
    throw std::invalid_argument("system is missing a vector field or divergence");
  }
  if (control_lower.size() != m || control_upper.size() != m) {
    throw std::invalid_argument("control bounds must have length m");
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    if (std::isnan(control_lower[i]) || std::isnan(control_upper[i]) ||
        control_lower[i] > control_upper[i]) {
      throw std::invalid_argument("control_lower must not exceed control_upper");
    }
  }
}

ControlAffineSystem single_integrator(Eigen::Index d) {
  if (d < 1) throw std::invalid_argument("single integrator dimension must be >= 1");
  ControlAffineSystem sys;
  sys.name = "single_integrator";
  sys.n = d;
  sys.m = d;
  sys.drift = [d](const Vec&) { return Vec::Zero(d).eval(); };
  sys.input_columns = [d](const Vec&) { return Mat::Identity(d, d).eval(); };
  sys.drift_divergence = [](const Vec&) { return 0.0; };
  sys.input_divergences = [d](const Vec&) { return Vec::Zero(d).eval(); };
  sys.control_lower = unbounded(d, -1.0);
  sys.control_upper = unbounded(d, 1.0);
  return sys;
}

ControlAffineSystem duffing() {
  ControlAffineSystem sys;
  sys.name = "duffing";
  sys.n = 2;
  sys.m = 1;
  sys.drift = [](const Vec& x) {
    Vec f(2);
    f << x[1], x[0] - x[0] * x[0] * x[0] - 0.1 * x[1];
    return f;
  };
  sys.input_columns = [](const Vec&) {
    Mat g(2, 1);
    g << 0.0, 1.0;
    return g;
  };
  sys.drift_divergence = [](const Vec&) { return -0.1; };
  sys.input_divergences = [](const Vec&) { return Vec::Zero(1).eval(); };
  sys.control_lower = Vec::Constant(1, -2.0);
  sys.control_upper = Vec::Constant(1, 2.0);
  return sys;
}

ControlAffineSystem dubin_reduced() {
  ControlAffineSystem sys = single_integrator(2);
  sys.name = "dubin";
  sys.heading_layer = true;
  return sys;
}

ControlAffineSystem system_with_numeric_divergences(std::string name, Eigen::Index n, Eigen::Index m,
                                                    std::function<Vec(const Vec&)> drift,
                                                    std::function<Mat(const Vec&)> input_columns,
                                                    double h) {
  ControlAffineSystem sys;
  sys.name = std::move(name);
  sys.n = n;
  sys.m = m;
  sys.drift = std::move(drift);
  sys.input_columns = std::move(input_columns);
  sys.numeric_divergences = true;
  sys.drift_divergence = [f = sys.drift, n, h](const Vec& x) {
    double div = 0.0;
    Vec xp = x;
    Vec xm = x;
    for (Eigen::Index j = 0; j < n; ++j) {
      xp[j] += h;
      xm[j] -= h;
      div += (f(xp)[j] - f(xm)[j]) / (2.0 * h);
      xp[j] = x[j];
      xm[j] = x[j];
    }
    return div;
  };
  sys.input_divergences = [g = sys.input_columns, n, m, h](const Vec& x) {
    Vec div = Vec::Zero(m);
    Vec xp = x;
    Vec xm = x;
    for (Eigen::Index j = 0; j < n; ++j) {
      xp[j] += h;
      xm[j] -= h;
      div += (g(xp).row(j) - g(xm).row(j)).transpose() / (2.0 * h);
      xp[j] = x[j];
      xm[j] = x[j];
    }
    return div;
  };
  sys.control_lower = unbounded(m, -1.0);
  sys.control_upper = unbounded(m, 1.0);
  return sys;
}

ControlAffineSystem make_system(const std::string& name, Eigen::Index dimension) {
  if (name == "single_integrator") return single_integrator(dimension);
  if (name == "duffing") return duffing();
  if (name == "dubin") return dubin_reduced();
  throw std::invalid_argument("unknown system '" + name + "'");
}

}  // namespace cdf
