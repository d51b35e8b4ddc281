#pragma once

#include "cdf/controller.hpp"
#include "cdf/density.hpp"
#include "cdf/dynamics.hpp"
#include "cdf/grid.hpp"
#include "cdf/simulator.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cdf {

/// Validation or parse failure tied to one scenario key.
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Everything one experiment needs, as read from a scenario file. See
/// docs/scenario_format.md for the grammar and the meaning of each key.
struct Scenario {
  std::string name;
  std::string system;
  int dimension = 2;
  std::optional<Vec> control_lower;
  std::optional<Vec> control_upper;

  Vec target;
  std::optional<Vec> P_row_major;
  double alpha = 0.2;
  double eta = 0.1;
  std::vector<ObstacleSpec> obstacles;

  std::string controller = "qp_cdf";
  double beta = 0.01;
  double epsilon = 1e-3;
  double dt = 0.01;
  int steps = 5000;
  double margin = 0.0;
  std::string infeasibility = "error";
  std::string nominal = "none";
  std::optional<Vec> nominal_gain;
  std::optional<Vec> nominal_value;
  double gradient_gain = 1.0;

  double heading_gain = 10.0;
  double theta0 = 0.0;

  std::vector<Vec> x0;
  std::optional<InitialSetSampler> sampler;
  std::optional<std::size_t> count;
  std::uint64_t seed = 0;

  std::optional<Vec> grid_lower;
  std::optional<Vec> grid_upper;
  std::optional<std::vector<int>> grid_dims;
  std::optional<Vec> grid_base;

  bool is_dubin() const { return system == "dubin"; }
  /// Dimension of the space the density lives in (planar for the Dubin car).
  Eigen::Index state_dim() const;

  ControlAffineSystem make_system() const;
  DensityFunction make_density() const;
  CdfConfig make_config() const;
  /// First listed x0, else sample 0 of the sampler stream.
  Vec initial_state() const;
  GridSpec grid_spec(int resolution) const;

  /// Throws ScenarioError for the first invalid field.
  void validate() const;
};

Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);

}  // namespace cdf
