#include "cdf/scenario.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace cdf {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, std::string_view separators) {
  std::vector<std::string_view> parts;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const auto start = s.find_first_not_of(separators, pos);
    if (start == std::string_view::npos) break;
    auto end = s.find_first_of(separators, start);
    if (end == std::string_view::npos) end = s.size();
    parts.push_back(s.substr(start, end - start));
    pos = end;
  }
  return parts;
}

double parse_double(std::string_view token, const std::string& field) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size() || std::isnan(value)) {
    throw ScenarioError(field, "'" + std::string(token) + "' is not a number");
  }
  return value;
}

long long parse_integer(std::string_view token, const std::string& field) {
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw ScenarioError(field, "'" + std::string(token) + "' is not an integer");
  }
  return value;
}

Vec parse_vector(std::string_view text, const std::string& field) {
  const auto tokens = split(text, " \t,");
  if (tokens.empty()) throw ScenarioError(field, "expected at least one number");
  Vec v(static_cast<Eigen::Index>(tokens.size()));
  for (std::size_t i = 0; i < tokens.size(); ++i) v[static_cast<Eigen::Index>(i)] = parse_double(tokens[i], field);
  return v;
}

double parse_scalar(std::string_view text, const std::string& field) {
  const Vec v = parse_vector(text, field);
  if (v.size() != 1) throw ScenarioError(field, "expected a single number");
  return v[0];
}

std::vector<int> parse_indices(std::string_view text, const std::string& field) {
  std::vector<int> out;
  for (auto token : split(text, " \t,")) {
    const long long v = parse_integer(token, field);
    if (v < 0 || v > std::numeric_limits<int>::max()) throw ScenarioError(field, "index out of range");
    out.push_back(static_cast<int>(v));
  }
  if (out.empty()) throw ScenarioError(field, "expected at least one index");
  return out;
}

ObstacleSpec parse_obstacle(std::string_view text) {
  const std::string field = "obstacle";
  ObstacleSpec obs;
  bool has_center = false, has_unsafe = false, has_sense = false, has_dims = false;
  for (auto token : split(text, " \t")) {
    const auto eq = token.find('=');
    if (eq == std::string_view::npos) throw ScenarioError(field, "expected name=value, got '" + std::string(token) + "'");
    const auto name = token.substr(0, eq);
    const auto value = token.substr(eq + 1);
    if (name == "center") {
      obs.center = parse_vector(value, field);
      has_center = true;
    } else if (name == "r_unsafe") {
      obs.r_unsafe = parse_scalar(value, field);
      has_unsafe = true;
    } else if (name == "r_sense") {
      obs.r_sense = parse_scalar(value, field);
      has_sense = true;
    } else if (name == "dims") {
      obs.dims = parse_indices(value, field);
      has_dims = true;
    } else {
      throw ScenarioError(field, "unknown attribute '" + std::string(name) + "'");
    }
  }
  if (!has_center || !has_unsafe || !has_sense) {
    throw ScenarioError(field, "center, r_unsafe and r_sense are required");
  }
  if (!has_dims) {
    for (Eigen::Index i = 0; i < obs.center.size(); ++i) obs.dims.push_back(static_cast<int>(i));
  }
  return obs;
}

Vec broadcast(const Vec& v, Eigen::Index m, const std::string& field) {
  if (v.size() == m) return v;
  if (v.size() == 1) return Vec::Constant(m, v[0]);
  throw ScenarioError(field, "expected 1 or " + std::to_string(m) + " values");
}

void require_positive(double v, const std::string& field) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ScenarioError(field, "must be a positive finite number");
}

const std::set<std::string>& repeatable_keys() {
  static const std::set<std::string> keys{"obstacle", "x0"};
  return keys;
}

}  // namespace

Scenario parse_scenario(std::string_view text) {
  Scenario sc;
  std::set<std::string> seen;
  std::optional<std::string> sampler_kind;
  std::optional<Vec> sampler_center, sampler_lower, sampler_upper;
  std::optional<double> sampler_radius;

  std::size_t line_no = 0;
  for (auto raw : split(text, "\n")) {
    ++line_no;
    auto line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ScenarioError("line " + std::to_string(line_no), "expected 'key = value'");
    }
    const std::string key(trim(line.substr(0, eq)));
    const auto value = trim(line.substr(eq + 1));
    if (value.empty()) throw ScenarioError(key, "missing value");
    if (!repeatable_keys().contains(key) && !seen.insert(key).second) {
      throw ScenarioError(key, "given more than once");
    }

    if (key == "name") sc.name = std::string(value);
    else if (key == "system") sc.system = std::string(value);
    else if (key == "dimension") sc.dimension = static_cast<int>(parse_integer(value, key));
    else if (key == "control_lower") sc.control_lower = parse_vector(value, key);
    else if (key == "control_upper") sc.control_upper = parse_vector(value, key);
    else if (key == "target") sc.target = parse_vector(value, key);
    else if (key == "P") sc.P_row_major = parse_vector(value, key);
    else if (key == "alpha") sc.alpha = parse_scalar(value, key);
    else if (key == "eta") sc.eta = parse_scalar(value, key);
    else if (key == "obstacle") sc.obstacles.push_back(parse_obstacle(value));
    else if (key == "controller") sc.controller = std::string(value);
    else if (key == "beta") sc.beta = parse_scalar(value, key);
    else if (key == "epsilon") sc.epsilon = parse_scalar(value, key);
    else if (key == "dt") sc.dt = parse_scalar(value, key);
    else if (key == "steps") sc.steps = static_cast<int>(parse_integer(value, key));
    else if (key == "margin") sc.margin = parse_scalar(value, key);
    else if (key == "infeasibility") sc.infeasibility = std::string(value);
    else if (key == "nominal") sc.nominal = std::string(value);
    else if (key == "nominal_gain") sc.nominal_gain = parse_vector(value, key);
    else if (key == "nominal_value") sc.nominal_value = parse_vector(value, key);
    else if (key == "gradient_gain") sc.gradient_gain = parse_scalar(value, key);
    else if (key == "heading_gain") sc.heading_gain = parse_scalar(value, key);
    else if (key == "theta0") sc.theta0 = parse_scalar(value, key);
    else if (key == "x0") sc.x0.push_back(parse_vector(value, key));
    else if (key == "sampler") sampler_kind = std::string(value);
    else if (key == "sampler_center") sampler_center = parse_vector(value, key);
    else if (key == "sampler_radius") sampler_radius = parse_scalar(value, key);
    else if (key == "sampler_lower") sampler_lower = parse_vector(value, key);
    else if (key == "sampler_upper") sampler_upper = parse_vector(value, key);
    else if (key == "count") {
      const long long c = parse_integer(value, key);
      if (c < 0) throw ScenarioError(key, "must be >= 1");
      sc.count = static_cast<std::size_t>(c);
    } else if (key == "seed") {
      const long long s = parse_integer(value, key);
      if (s < 0) throw ScenarioError(key, "must be nonnegative");
      sc.seed = static_cast<std::uint64_t>(s);
    } else if (key == "grid_lower") sc.grid_lower = parse_vector(value, key);
    else if (key == "grid_upper") sc.grid_upper = parse_vector(value, key);
    else if (key == "grid_dims") sc.grid_dims = parse_indices(value, key);
    else if (key == "grid_base") sc.grid_base = parse_vector(value, key);
    else throw ScenarioError(key, "unknown key");
  }

  if (sampler_kind) {
    InitialSetSampler s;
    if (*sampler_kind == "ring") {
      if (!sampler_center || !sampler_radius) {
        throw ScenarioError("sampler", "ring sampler needs sampler_center and sampler_radius");
      }
      s.kind = InitialSetSampler::Kind::ring;
      s.center = *sampler_center;
      s.radius = *sampler_radius;
    } else if (*sampler_kind == "box") {
      if (!sampler_lower || !sampler_upper) {
        throw ScenarioError("sampler", "box sampler needs sampler_lower and sampler_upper");
      }
      s.kind = InitialSetSampler::Kind::box;
      s.lower = *sampler_lower;
      s.upper = *sampler_upper;
    } else {
      throw ScenarioError("sampler", "unknown sampler '" + *sampler_kind + "' (ring or box)");
    }
    sc.sampler = std::move(s);
  } else if (sampler_center || sampler_radius || sampler_lower || sampler_upper) {
    throw ScenarioError("sampler", "sampler_* keys given without 'sampler'");
  }
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("scenario", "cannot read '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  Scenario sc = parse_scenario(buffer.str());
  if (sc.name.empty()) sc.name = path.stem().string();
  return sc;
}

Eigen::Index Scenario::state_dim() const {
  if (system == "duffing" || system == "dubin") return 2;
  return dimension;
}

ControlAffineSystem Scenario::make_system() const {
  ControlAffineSystem sys;
  try {
    sys = cdf::make_system(system, dimension);
  } catch (const std::invalid_argument& e) {
    throw ScenarioError("system", e.what());
  }
  Vec lower = sys.control_lower;
  Vec upper = sys.control_upper;
  if (control_lower) lower = broadcast(*control_lower, sys.m, "control_lower");
  if (control_upper) upper = broadcast(*control_upper, sys.m, "control_upper");
  try {
    sys.set_control_bounds(lower, upper);
    sys.validate();
  } catch (const std::invalid_argument& e) {
    throw ScenarioError("control_lower", e.what());
  }
  return sys;
}

DensityFunction Scenario::make_density() const {
  const Eigen::Index n = state_dim();
  DensityFunction df;
  if (target.size() != n) throw ScenarioError("target", "expected " + std::to_string(n) + " components");
  df.shaping.target = target;
  if (P_row_major) {
    if (P_row_major->size() != n * n) throw ScenarioError("P", "expected " + std::to_string(n * n) + " entries");
    df.shaping.P = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        P_row_major->data(), n, n);
  } else {
    df.shaping.P = Mat::Identity(n, n);
  }
  df.shaping.alpha = alpha;
  df.eta = eta;
  df.obstacles = obstacles;
  return df;
}

CdfConfig Scenario::make_config() const {
  CdfConfig cfg;
  cfg.beta = beta;
  cfg.epsilon = epsilon;
  cfg.dt = dt;
  cfg.horizon_steps = steps;
  cfg.margin = margin;
  cfg.gradient_gain = gradient_gain;
  if (infeasibility == "error") cfg.infeasibility_policy = InfeasibilityPolicy::error;
  else if (infeasibility == "slack") cfg.infeasibility_policy = InfeasibilityPolicy::slack;
  else throw ScenarioError("infeasibility", "expected 'error' or 'slack'");

  if (controller == "qp_cdf") cfg.mode = ControlMode::qp_cdf;
  else if (controller == "gradient") cfg.mode = ControlMode::gradient;
  else if (controller == "nominal_only") cfg.mode = ControlMode::nominal_only;
  else throw ScenarioError("controller", "expected qp_cdf, gradient or nominal_only");

  const Eigen::Index n = state_dim();
  const Eigen::Index m = is_dubin() ? 2 : (system == "duffing" ? 1 : dimension);
  if (nominal == "linear") {
    if (!nominal_gain || nominal_gain->size() != m * n) {
      throw ScenarioError("nominal_gain", "expected " + std::to_string(m * n) + " entries (row-major m x n)");
    }
    Mat K = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        nominal_gain->data(), m, n);
    cfg.u_nominal = linear_feedback(std::move(K), target);
  } else if (nominal == "constant") {
    if (!nominal_value || nominal_value->size() != m) {
      throw ScenarioError("nominal_value", "expected " + std::to_string(m) + " entries");
    }
    cfg.u_nominal = [u0 = *nominal_value](const Vec&) { return u0; };
  } else if (nominal != "none") {
    throw ScenarioError("nominal", "expected none, linear or constant");
  }
  return cfg;
}

Vec Scenario::initial_state() const {
  if (!x0.empty()) return x0.front();
  if (sampler) return sampler->sample(seed, 0);
  throw ScenarioError("x0", "no initial state or sampler given");
}

GridSpec Scenario::grid_spec(int resolution) const {
  const Eigen::Index n = state_dim();
  GridSpec spec;
  spec.resolution = resolution;
  if (grid_dims) {
    if (grid_dims->size() != 2) throw ScenarioError("grid_dims", "expected two indices");
    spec.dim_x = (*grid_dims)[0];
    spec.dim_y = (*grid_dims)[1];
  }
  if (n != 2 && !grid_dims) {
    throw ScenarioError("grid_dims", "state is not 2-D; give grid_dims and grid_base for the slice");
  }
  if (grid_base) spec.base = *grid_base;
  if (grid_lower) {
    if (grid_lower->size() != 2) throw ScenarioError("grid_lower", "expected two numbers");
    spec.lower = *grid_lower;
  }
  if (grid_upper) {
    if (grid_upper->size() != 2) throw ScenarioError("grid_upper", "expected two numbers");
    spec.upper = *grid_upper;
  }
  try {
    spec.validate(n);
  } catch (const std::invalid_argument& e) {
    throw ScenarioError("grid", e.what());
  }
  return spec;
}

void Scenario::validate() const {
  if (system.empty()) throw ScenarioError("system", "missing");
  if (system != "single_integrator" && system != "duffing" && system != "dubin") {
    throw ScenarioError("system", "unknown system '" + system + "'");
  }
  if (dimension < 1) throw ScenarioError("dimension", "must be >= 1");
  if (target.size() == 0) throw ScenarioError("target", "missing");
  make_system();
  const DensityFunction df = make_density();
  try {
    df.shaping.validate();
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    throw ScenarioError(msg.rfind("alpha", 0) == 0 ? "alpha" : (msg.rfind("target", 0) == 0 ? "target" : "P"), msg);
  }
  require_positive(eta, "eta");
  for (const auto& obs : obstacles) {
    try {
      obs.validate(state_dim());
    } catch (const std::invalid_argument& e) {
      throw ScenarioError("obstacle", e.what());
    }
  }
  if (df.in_unsafe(target)) throw ScenarioError("target", "target lies inside an unsafe set");

  require_positive(beta, "beta");
  require_positive(epsilon, "epsilon");
  require_positive(dt, "dt");
  if (steps < 1) throw ScenarioError("steps", "must be >= 1");
  if (!(margin >= 0.0) || margin >= beta) throw ScenarioError("margin", "must lie in [0, beta)");
  require_positive(gradient_gain, "gradient_gain");
  require_positive(heading_gain, "heading_gain");
  if (!std::isfinite(theta0)) throw ScenarioError("theta0", "must be finite");
  const CdfConfig cfg = make_config();
  if (cfg.mode == ControlMode::gradient && system == "duffing") {
    throw ScenarioError("controller", "gradient mode needs a single-integrator system");
  }
  if (cfg.mode == ControlMode::nominal_only && !cfg.u_nominal) {
    throw ScenarioError("nominal", "nominal_only controller needs a nominal control");
  }

  for (const Vec& x : x0) {
    if (x.size() != state_dim()) throw ScenarioError("x0", "expected " + std::to_string(state_dim()) + " components");
    if (!x.allFinite()) throw ScenarioError("x0", "must be finite");
    if (df.in_unsafe(x)) throw ScenarioError("x0", "initial state unsafe");
  }
  if (sampler) {
    try {
      sampler->validate();
    } catch (const std::invalid_argument& e) {
      throw ScenarioError("sampler", e.what());
    }
    if (sampler->dim() != state_dim()) throw ScenarioError("sampler", "dimension does not match the state");
  }
  if (count && *count < 1) throw ScenarioError("count", "must be >= 1");
}

}  // namespace cdf
