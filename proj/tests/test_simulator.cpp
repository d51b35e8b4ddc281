#include "cdf/scenario.hpp"
#include "cdf/simulator.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace cdf;

namespace {

constexpr double kPi = std::numbers::pi;

Vec v2(double a, double b) {
  Vec x(2);
  x << a, b;
  return x;
}

Scenario shipped(const std::string& name) {
  return load_scenario(std::string(CDF_SOURCE_DIR) + "/scenarios/" + name + ".scenario");
}

DubinState settled(double theta, double theta_tilde) {
  DubinState s;
  s.theta = theta;
  s.theta_tilde_prev = theta_tilde;
  s.has_reference = true;
  return s;
}

}  // namespace

TEST_CASE("one forced Euler step") {
  DensityFunction df;
  df.shaping.target = v2(5.0, 5.0);
  df.shaping.P = Mat::Identity(2, 2);
  CdfConfig cfg;
  cfg.mode = ControlMode::nominal_only;
  cfg.u_nominal = [](const Vec&) { return v2(1.0, 0.0); };
  cfg.dt = 0.1;
  cfg.horizon_steps = 1;
  const auto traj = simulate(single_integrator(2), df, cfg, Vec::Zero(2));
  REQUIRE(traj.states.size() == 2);
  CHECK(traj.states[1][0] == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(traj.states[1][1] == 0.0);
  CHECK(traj.outcome == Outcome::timeout);
}

TEST_CASE("starting inside an obstacle is unsafe at step zero") {
  const Scenario sc = shipped("duffing");
  const auto traj = simulate(sc.make_system(), sc.make_density(), sc.make_config(), v2(0.1, 0.1));
  CHECK(traj.outcome == Outcome::unsafe);
  CHECK(traj.steps() == 0);
  CHECK(traj.min_clearance <= 0.0);
}

TEST_CASE("starting inside the terminal ball converges at once") {
  const Scenario sc = shipped("duffing");
  const auto traj = simulate(sc.make_system(), sc.make_density(), sc.make_config(), v2(-1.0, 0.05));
  CHECK(traj.outcome == Outcome::converged);
  CHECK(traj.steps() == 0);
}

TEST_CASE("infeasible step under the error policy ends the run") {
  Scenario sc = shipped("duffing");
  CdfConfig cfg = sc.make_config();
  cfg.infeasibility_policy = InfeasibilityPolicy::error;
  const auto traj = simulate(sc.make_system(), sc.make_density(), cfg, v2(-0.55, 0.0));
  CHECK(traj.outcome == Outcome::infeasible);
  CHECK(traj.diagnostic.find("divergence row") != std::string::npos);
}

TEST_CASE("angle wrapping") {
  CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(1.5 * kPi) == doctest::Approx(-0.5 * kPi));
  CHECK(wrap_angle(7.0) == doctest::Approx(7.0 - 2.0 * kPi));
}

TEST_CASE("steering from planar velocity") {
  const DubinState fresh;
  auto c = dubin_steering(v2(1.0, 0.0), fresh, 0.01);
  CHECK(c.v == doctest::Approx(1.0));
  CHECK(c.theta_tilde == doctest::Approx(0.0));

  c = dubin_steering(v2(0.0, 2.0), fresh, 0.01);
  CHECK(c.v == doctest::Approx(2.0));
  CHECK(c.theta_tilde == doctest::Approx(kPi / 2));

  c = dubin_steering(v2(-1.0, 0.0), fresh, 0.01);
  CHECK(c.theta_tilde == doctest::Approx(kPi));

  c = dubin_steering(v2(std::cos(0.4), std::sin(0.4)), settled(0.4, 0.4), 0.01);
  CHECK(std::abs(c.omega) <= 1e-12);

  c = dubin_steering(v2(1.0, 0.0), settled(kPi / 2, 0.0), 0.01);
  CHECK(c.omega == doctest::Approx(-5.0 * kPi));
  CHECK(c.next.theta_tilde_prev == doctest::Approx(0.0));
  CHECK(c.next.has_reference);
}

TEST_CASE("steering reference rate uses the wrapped difference") {
  // reference crosses the branch cut from just below pi to just above -pi
  auto c = dubin_steering(v2(-1.0, -0.01), settled(kPi - 0.01, kPi - 0.01), 0.01);
  const double jump = wrap_angle(std::atan2(-0.01, -1.0) - (kPi - 0.01));
  CHECK(std::abs(jump) < 0.1);
  CHECK(c.omega == doctest::Approx(jump / 0.01 - 10.0 * wrap_angle(kPi - 0.01 - c.theta_tilde)));
}

TEST_CASE("zero planar command holds the heading reference") {
  const auto c = dubin_steering(Vec::Zero(2), settled(0.3, 1.1), 0.01);
  CHECK(c.v == 0.0);
  CHECK(c.theta_tilde == doctest::Approx(1.1));
  CHECK(c.omega == doctest::Approx(-10.0 * (0.3 - 1.1)));
}

TEST_CASE("dubin run tracks its heading reference") {
  const Scenario sc = shipped("dubin");
  const auto traj = simulate_dubin(sc.make_system(), sc.make_density(), sc.make_config(), sc.initial_state(),
                                   sc.theta0, sc.heading_gain);
  CHECK(traj.outcome == Outcome::converged);
  CHECK(traj.min_clearance > 0.0);
  REQUIRE(traj.heading_reference.size() == traj.steps());

  // once the reference has moved slower than k/2 for a full second, the error is below 0.05
  const double dt = sc.make_config().dt;
  const auto window = static_cast<std::size_t>(std::lround(1.0 / dt));
  int checked = 0;
  for (std::size_t k = window; k < traj.steps(); ++k) {
    bool slow = true;
    for (std::size_t i = k - window + 1; i <= k && slow; ++i) {
      slow = std::abs(wrap_angle(traj.heading_reference[i] - traj.heading_reference[i - 1])) / dt < sc.heading_gain / 2;
    }
    if (!slow) continue;
    ++checked;
    CHECK(std::abs(wrap_angle(traj.states[k][2] - traj.heading_reference[k])) < 0.05);
  }
  CHECK(checked > 100);
}

TEST_CASE("identical inputs give bit-identical trajectories") {
  const Scenario sc = shipped("duffing");
  const auto a = simulate(sc.make_system(), sc.make_density(), sc.make_config(), sc.initial_state());
  const auto b = simulate(sc.make_system(), sc.make_density(), sc.make_config(), sc.initial_state());
  REQUIRE(a.states.size() == b.states.size());
  for (std::size_t k = 0; k < a.states.size(); ++k) CHECK(a.states[k] == b.states[k]);
  for (std::size_t k = 0; k < a.controls.size(); ++k) CHECK(a.controls[k] == b.controls[k]);
}

TEST_CASE("converged runs never touch an unsafe set") {
  const Scenario sc = shipped("duffing");
  const auto traj = simulate(sc.make_system(), sc.make_density(), sc.make_config(), sc.initial_state());
  REQUIRE(traj.outcome == Outcome::converged);
  for (double c : traj.clearance) CHECK(c > 0.0);
  CHECK(traj.unsafe_dwell_time == 0.0);
  CHECK(traj.terminal_distance <= sc.eta);
}

TEST_CASE("halving the step size shrinks the fixed-time error linearly") {
  const Scenario sc = shipped("duffing");
  const auto sys = sc.make_system();
  const auto df = sc.make_density();
  for (double horizon : {1.0, 5.0}) {
    Vec states[3];
    for (int i = 0; i < 3; ++i) {
      CdfConfig cfg = sc.make_config();
      cfg.dt = 0.01 / (1 << i);
      cfg.horizon_steps = static_cast<int>(std::lround(horizon / cfg.dt));
      const auto traj = simulate(sys, df, cfg, sc.initial_state());
      REQUIRE(traj.outcome == Outcome::timeout);
      states[i] = traj.states.back();
    }
    const double coarse = (states[0] - states[1]).norm();
    const double fine = (states[1] - states[2]).norm();
    CAPTURE(horizon);
    CHECK(coarse / fine >= 2.0 / 4.0);
    CHECK(coarse / fine <= 2.0 * 4.0);
  }
}

TEST_CASE("samplers") {
  InitialSetSampler ring;
  ring.center = v2(1.0, -1.0);
  ring.radius = 2.5;
  InitialSetSampler box;
  box.kind = InitialSetSampler::Kind::box;
  box.lower = v2(-1.0, 0.0);
  box.upper = v2(1.0, 3.0);
  for (std::uint64_t i = 0; i < 200; ++i) {
    CHECK((ring.sample(42, i) - ring.center).norm() == doctest::Approx(2.5).epsilon(1e-12));
    const Vec b = box.sample(42, i);
    CHECK((b.array() >= box.lower.array()).all());
    CHECK((b.array() <= box.upper.array()).all());
  }
  CHECK(ring.sample(42, 3) == ring.sample(42, 3));
  CHECK(ring.sample(42, 3) != ring.sample(42, 4));
  CHECK(ring.sample(42, 3) != ring.sample(43, 3));

  InitialSetSampler sphere;
  sphere.center = Vec::Zero(3);
  sphere.radius = 1.0;
  CHECK(sphere.sample(1, 0).norm() == doctest::Approx(1.0).epsilon(1e-12));

  InitialSetSampler bad = box;
  bad.upper[0] = -2.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("a single-run sweep reproduces simulate") {
  const Scenario sc = shipped("duffing");
  const auto sys = sc.make_system();
  const auto df = sc.make_density();
  const auto cfg = sc.make_config();
  const auto report = monte_carlo_sweep(sys, df, cfg, *sc.sampler, 1, 42);
  REQUIRE(report.runs.size() == 1);
  const auto traj = simulate(sys, df, cfg, sc.sampler->sample(42, 0));
  CHECK(report.runs[0].x0 == traj.states.front());
  CHECK(report.runs[0].outcome == traj.outcome);
  CHECK(report.runs[0].terminal_distance == traj.terminal_distance);
  CHECK(report.runs[0].steps == traj.steps());
}

TEST_CASE("duffing sweep of 100 runs never enters the obstacle") {
  const Scenario sc = shipped("duffing");
  const auto report = monte_carlo_sweep(sc.make_system(), sc.make_density(), sc.make_config(), *sc.sampler, 100, 42);
  REQUIRE(report.runs.size() == 100);
  for (const auto& run : report.runs) CHECK(run.unsafe_dwell_time == 0.0);
  CHECK(report.fraction_unsafe == 0.0);
  CHECK(report.fraction_converged >= 0.95);
  CHECK(report.terminal_distance_min <= report.terminal_distance_median);
  CHECK(report.terminal_distance_median <= report.terminal_distance_max);
}

TEST_CASE("summaries count outcomes and dwell") {
  std::vector<SweepRun> runs(4);
  runs[0].outcome = Outcome::converged;
  runs[0].terminal_distance = 0.05;
  runs[1].outcome = Outcome::unsafe;
  runs[1].terminal_distance = 3.0;
  runs[1].unsafe_dwell_time = 0.01;
  runs[2].outcome = Outcome::timeout;
  runs[2].terminal_distance = 1.0;
  runs[3].outcome = Outcome::converged;
  runs[3].terminal_distance = 0.09;
  const auto r = summarize(runs);
  CHECK(r.fraction_converged == 0.5);
  CHECK(r.fraction_unsafe == 0.25);
  CHECK(r.fraction_timeout == 0.25);
  CHECK(r.fraction_infeasible == 0.0);
  CHECK(r.terminal_distance_min == 0.05);
  CHECK(r.terminal_distance_max == 3.0);
  CHECK(r.terminal_distance_median == doctest::Approx(0.545));
  CHECK(r.dwell_time_total == doctest::Approx(0.01));
}
