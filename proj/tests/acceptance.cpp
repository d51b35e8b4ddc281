// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "cdf/cli.hpp"
#include "cdf/scenario.hpp"
#include "oracles.hpp"

#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace cdf;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

Scenario shipped(const std::string& name) {
  Scenario sc = load_scenario(fs::path(CDF_SOURCE_DIR) / "scenarios" / (name + ".scenario"));
  sc.validate();
  return sc;
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

// Trajectories shared by criteria 3-5.
std::vector<Trajectory> duffing_runs;
Trajectory dubin_run;

Verdict density_correctness() {
  const Scenario sc = shipped("duffing");
  const DensityFunction df = sc.make_density();
  const ObstacleSpec& obs = df.obstacles.front();
  std::mt19937_64 rng(1001);
  std::uniform_real_distribution<double> coord(-3.0, 3.0);
  int inside = 0, outside = 0, shell = 0, bad = 0;
  double worst_grad = 0.0, worst_far = 0.0;
  for (int i = 0; i < 1000;) {
    Vec x(2);
    x << coord(rng), coord(rng);
    if (df.shaping.value(x) < df.eta * df.eta) continue;
    ++i;
    const double c = obs.unsafe_level(x);
    const double b = obs.sensing_level(x);
    const double r = rho(df, x);
    if (c <= 0.0) {
      ++inside;
      bad += r != 0.0;
      continue;
    }
    if (b > 0.0) {
      ++outside;
      const double expected = std::pow(df.shaping.value(x), -df.shaping.alpha);
      const double rel = std::abs(r - expected) / expected;
      worst_far = std::max(worst_far, rel);
      bad += rel > 1e-14;
    } else {
      ++shell;
    }
    const double dist = x.norm();
    if (std::abs(dist - obs.r_unsafe) < 1e-3 || std::abs(dist - obs.r_sense) < 1e-3) continue;
    const Vec fd = oracle::central_gradient([&](const Vec& y) { return rho(df, y); }, x);
    const double err = oracle::relative_error(grad_rho(df, x), fd);
    worst_grad = std::max(worst_grad, err);
    bad += err > 1e-5;
  }
  return {bad == 0, fmt("%d inside / %d shell / %d outside; max |rho - V^-a|/V^-a %.1e, max grad rel err %.1e",
                        inside, shell, outside, worst_far, worst_grad)};
}

Verdict qp_oracle_equivalence() {
  std::mt19937_64 rng(2002);
  std::uniform_int_distribution<int> vars(1, 9);
  std::uniform_int_distribution<int> rows(0, 6);
  double worst_obj = 0.0, worst_kkt = 0.0;
  int failures = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const QpProblem p = oracle::random_feasible_qp(rng, vars(rng), rows(rng), true);
    const QpSolution s = qp_solve(p);
    if (s.status != QpStatus::optimal) {
      ++failures;
      continue;
    }
    const auto ref = oracle::projected_gradient_qp(p);
    const double kkt = std::max(s.kkt_residual, oracle::kkt_stationarity(p, s));
    worst_obj = std::max(worst_obj, std::abs(s.objective - ref.objective));
    worst_kkt = std::max(worst_kkt, kkt);
    failures += std::abs(s.objective - ref.objective) > 1e-6 || kkt > 1e-8;
  }
  return {failures == 0, fmt("200 instances, max |obj - oracle| %.1e, max KKT residual %.1e", worst_obj, worst_kkt)};
}

Verdict duffing_safety() {
  const Scenario sc = shipped("duffing");
  const auto sys = sc.make_system();
  const auto df = sc.make_density();
  const auto cfg = sc.make_config();
  duffing_runs.clear();
  int dwell_free = 0, converged = 0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    duffing_runs.push_back(simulate(sys, df, cfg, sc.sampler->sample(sc.seed, i)));
    const auto& t = duffing_runs.back();
    dwell_free += t.unsafe_dwell_time == 0.0 && t.outcome != Outcome::unsafe;
    converged += t.outcome == Outcome::converged && t.terminal_distance <= sc.eta && t.steps() <= 5000;
  }
  return {dwell_free == 20 && converged >= 19,
          fmt("20 runs (seed %llu): zero unsafe dwell %d/20, converged %d/20", static_cast<unsigned long long>(sc.seed),
              dwell_free, converged)};
}

Verdict dubin_tracking() {
  const Scenario sc = shipped("dubin");
  dubin_run = simulate_dubin(sc.make_system(), sc.make_density(), sc.make_config(), sc.initial_state(), sc.theta0,
                             sc.heading_gain);
  const double dt = sc.dt;
  const auto window = static_cast<std::size_t>(std::lround(1.0 / dt));
  std::size_t checked = 0, violations = 0;
  double worst = 0.0;
  for (std::size_t k = window; k < dubin_run.steps(); ++k) {
    bool slow = true;
    for (std::size_t i = k - window + 1; i <= k && slow; ++i) {
      const double rate = std::abs(wrap_angle(dubin_run.heading_reference[i] - dubin_run.heading_reference[i - 1])) / dt;
      slow = rate < sc.heading_gain / 2;
    }
    if (!slow) continue;
    ++checked;
    const double err = std::abs(wrap_angle(dubin_run.states[k][2] - dubin_run.heading_reference[k]));
    worst = std::max(worst, err);
    violations += err >= 0.05;
  }
  const bool pass = dubin_run.outcome == Outcome::converged && dubin_run.min_clearance > 0.0 && violations == 0 &&
                    checked > 0;
  return {pass, fmt("%s in %zu steps, min clearance %.3f; heading error < 0.05 at %zu/%zu slow-reference steps "
                    "(max %.2e)",
                    to_string(dubin_run.outcome).c_str(), dubin_run.steps(), dubin_run.min_clearance,
                    checked - violations, checked, worst)};
}

Verdict certificates() {
  const double beta_duffing = shipped("duffing").beta;
  const double beta_dubin = shipped("dubin").beta;
  std::size_t steps = 0, bad = 0, relaxed = 0;
  auto audit = [&](const Trajectory& t, double beta) {
    for (std::size_t k = 0; k < t.steps(); ++k) {
      if (t.step_flags[k] != StepFlag::optimal) {
        ++relaxed;
        continue;
      }
      ++steps;
      const auto& c = t.certificates[k];
      bool ok = std::abs(c.trace) <= beta + 1e-6;
      for (Eigen::Index i = 0; i < c.lhs.size(); ++i) ok = ok && c.lhs[i] >= c.rhs[i] - 1e-6;
      bad += !ok;
    }
  };
  for (const auto& t : duffing_runs) audit(t, beta_duffing);
  audit(dubin_run, beta_dubin);
  return {bad == 0 && steps > 0,
          fmt("%zu optimal steps audited, %zu violations (%zu relaxed steps excluded)", steps, bad, relaxed)};
}

Verdict reconstruction() {
  const Scenario sc = shipped("duffing");
  const auto sys = sc.make_system();
  const auto df = sc.make_density();
  const auto cfg = sc.make_config();
  const Trajectory t = simulate(sys, df, cfg, sc.initial_state());
  std::vector<std::size_t> optimal;
  for (std::size_t k = 0; k < t.steps(); ++k)
    if (t.step_flags[k] == StepFlag::optimal) optimal.push_back(k);
  if (optimal.size() < 10) return {false, "fewer than 10 optimal steps"};

  // closed loop: rho(y) (f(y) + g(y) u*(y)) with the controller re-solved at y
  auto field = [&](const Vec& y) { return Vec(rho(df, y) * sys.velocity(y, step_control(sys, df, cfg, y).u)); };
  int agree = 0, trace_bound_active = 0;
  double worst = 0.0;
  std::ostringstream errs;
  for (int i = 0; i < 10; ++i) {
    const std::size_t k = optimal[i * (optimal.size() - 1) / 9];
    const Vec& x = t.states[k];
    const StepResult st = step_control(sys, df, cfg, x);
    const double rebuilt = st.constraint_lhs[0] + st.rho * st.trace_value;
    const double fd = oracle::central_divergence(field, x, 1e-6);
    const double err = std::abs(rebuilt - fd);
    worst = std::max(worst, err);
    agree += err <= 1e-2;
    trace_bound_active += std::abs(st.trace_value) >= cfg.beta - 1e-9;
    errs << (i ? "," : "") << fmt("%.0e", err);
  }
  return {agree == 10, fmt("%d/10 steps within 1e-2 (max %.2e; trace bound active at %d/10); errors [%s]", agree,
                           worst, trace_bound_active, errs.str().c_str())};
}

Verdict determinism() {
  const fs::path root = fs::temp_directory_path() / ("cdfnav_accept_" + std::to_string(::getpid()));
  fs::remove_all(root);
  std::ostringstream sink;
  const fs::path scenario = fs::path(CDF_SOURCE_DIR) / "scenarios" / "duffing.scenario";
  const int a = cli::cmd_sweep(scenario, 20, 42, root / "a", {}, sink);
  const int b = cli::cmd_sweep(scenario, 20, 42, root / "b", {}, sink);
  auto slurp = [](const fs::path& f) {
    std::ifstream in(f, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const std::string first = slurp(root / "a" / "sweep.csv");
  const std::string second = slurp(root / "b" / "sweep.csv");
  fs::remove_all(root);
  return {a == b && !first.empty() && first == second,
          fmt("two sweeps of 20 runs, seed 42: %zu bytes each, identical: %s", first.size(),
              first == second ? "yes" : "no")};
}

Verdict alpha_monotonicity() {
  const Scenario sc = shipped("integrator_free");
  std::vector<std::size_t> steps;
  bool all_converged = true;
  for (double alpha : {0.2, 0.4, 0.8}) {
    Scenario s = sc;
    s.alpha = alpha;
    s.validate();
    const Trajectory t = simulate(s.make_system(), s.make_density(), s.make_config(), s.initial_state());
    all_converged = all_converged && t.outcome == Outcome::converged;
    steps.push_back(t.steps());
  }
  const bool pass = all_converged && steps[1] < steps[0] && steps[2] < steps[1];
  return {pass, fmt("time-to-eta for alpha 0.2 / 0.4 / 0.8: %.2f / %.2f / %.2f s", steps[0] * sc.dt,
                    steps[1] * sc.dt, steps[2] * sc.dt)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "density correctness", 5.0, density_correctness},
      {2, "QP oracle equivalence", 30.0, qp_oracle_equivalence},
      {3, "duffing safety and convergence", 120.0, duffing_safety},
      {4, "dubin convergence and heading tracking", 30.0, dubin_tracking},
      {5, "per-step constraint certificates", 0.0, certificates},
      {6, "finite-difference reconstruction", 0.0, reconstruction},
      {7, "sweep determinism", 0.0, determinism},
      {8, "alpha monotonicity", 0.0, alpha_monotonicity},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_s > 0.0 && secs >= c.budget_s) {
      v.pass = false;
      v.detail += fmt(" [over the %.0f s budget]", c.budget_s);
    }
    failed += !v.pass;
    std::printf("criterion %d %-40s %s  (%.2f s)  %s\n", c.id, c.name, v.pass ? "PASS" : "FAIL", secs,
                v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
