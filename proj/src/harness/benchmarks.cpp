#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rbpomdp/filters/consistency.hpp"
#include "rbpomdp/harness/harness.hpp"

namespace rbpomdp::harness {

namespace loc = localization;
using Clock = std::chrono::steady_clock;

namespace {

struct Trajectory {
  std::vector<Vector> actions;
  std::vector<Vector> observations;
  std::vector<Vector> states;  // s_1 .. s_T
};

// Ground truth under the scripted actions. The run is not stopped at the
// goal so every trajectory has the same length.
Trajectory scripted_trajectory(const loc::LocalizationModel& model, int steps,
                               Rng& rng) {
  Trajectory t;
  Vector s = model.config().start;
  for (std::size_t a : scripted_actions(model, steps)) {
    const Vector& act = model.actions()[a];
    s = model.sample_transition(s, act, rng);
    t.actions.push_back(act);
    t.observations.push_back(model.sample_observation(s, act, rng));
    t.states.push_back(s);
  }
  return t;
}

double mean_of(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  return v.empty() ? 0.0 : m / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

std::vector<FilterTiming> bench_filters(const ExperimentConfig& cfg,
                                        const std::vector<int>& particle_counts,
                                        int repeats, int steps) {
  cfg.validate();
  if (repeats <= 0 || steps <= 0) {
    throw std::invalid_argument("bench_filters: repeats and steps must be positive");
  }
  const loc::LocalizationModel model(cfg.world, cfg.map);
  const Rng root(cfg.base_seed);
  Rng traj_rng = root.child(0);
  const Trajectory traj = scripted_trajectory(model, steps, traj_rng);
  const Vector bandwidth = Vector::Constant(3, cfg.filter.bandwidth);

  std::vector<FilterTiming> out;
  for (const std::string name : {"rbpf", "sirpf"}) {
    for (int n : particle_counts) {
      if (n <= 0) throw std::invalid_argument("particle counts must be positive");
      std::vector<double> times;
      // Repeat 0 warms caches and allocators and is not timed.
      for (int r = 0; r <= repeats; ++r) {
        Rng rng = root.child(1000 + static_cast<std::uint64_t>(r));
        const auto count = static_cast<std::size_t>(n);
        if (name == "rbpf") {
          auto b = model.initial_rb_belief(count, rng, cfg.filter.resample_threshold);
          for (int k = 0; k < steps; ++k) {
            const auto t0 = Clock::now();
            b = filters::rbpf_update(b, traj.actions[k], traj.observations[k],
                                     model, rng, cfg.planner_params.ukf);
            const double ms =
                std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
            if (r > 0) times.push_back(ms);
          }
        } else {
          auto b = model.initial_sir_belief(count, rng, bandwidth,
                                            cfg.filter.resample_threshold);
          for (int k = 0; k < steps; ++k) {
            const auto t0 = Clock::now();
            b = filters::sirpf_update(b, traj.actions[k], traj.observations[k],
                                      model, rng);
            const double ms =
                std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
            if (r > 0) times.push_back(ms);
          }
        }
      }
      out.push_back({name, n, mean_of(times), std_of(times),
                     static_cast<int>(times.size())});
    }
  }
  return out;
}

double straight_line_upper_bound(const loc::WorldConfig& w) {
  const Eigen::Vector2d p0 = w.start.head<2>();
  const double r0 = p0.norm();
  if (r0 <= w.goal_radius) return 0.0;
  double v = 0.0;
  for (double s : w.speeds) v = std::max(v, s);
  if (!(v > 0.0)) throw std::invalid_argument("upper bound needs a forward speed");
  const double delta = v * w.actuation_mean[0] * w.dt;
  // K steps until the distance first drops inside the goal disc.
  const int K = static_cast<int>(std::ceil((r0 - w.goal_radius) / delta - 1e-12));
  const Eigen::Vector2d u = -p0 / r0;
  const double heading = std::atan2(u.y(), u.x());
  const Eigen::Matrix2d psi = w.state_weights.topLeftCorner(2, 2);
  // Per-step cost a + 2 b k + c k^2 along p_k = p0 + k delta u.
  const double a = p0.dot(psi * p0) +
                   w.state_weights(2, 2) * heading * heading +
                   v * v * w.action_weights(0, 0);
  const double b = delta * p0.dot(psi * u);
  const double c = delta * delta * u.dot(psi * u);

  const double g = w.discount;
  const double n = K - 1;  // sums run over k = 0 .. n
  const double gn = std::pow(g, n);
  const double s0 = (1.0 - gn * g) / (1.0 - g);
  const double s1 = g * (1.0 - (n + 1.0) * gn + n * gn * g) / ((1.0 - g) * (1.0 - g));
  const double s2 = g *
                    (1.0 + g - (n + 1.0) * (n + 1.0) * gn +
                     (2.0 * n * n + 2.0 * n - 1.0) * gn * g - n * n * gn * g * g) /
                    std::pow(1.0 - g, 3);
  return -(a * s0 + 2.0 * b * s1 + c * s2) + gn * w.terminal_reward;
}

PlanningSweep bench_planning(const ExperimentConfig& cfg,
                             const std::vector<int>& q_levels,
                             const std::vector<int>& pomcpow_iterations,
                             int sir_particles) {
  cfg.validate();
  PlanningSweep sweep;
  sweep.upper_bound = straight_line_upper_bound(cfg.world);

  auto run_cell = [&](ExperimentConfig c, PlanningCell cell) {
    c.filter.consistency = false;
    const auto records = run_episodes(c);
    cell.summary = summarize(records);
    for (const auto& r : records) {
      cell.rewards.push_back(r.cumulative_reward);
      cell.reached.push_back(r.reached_goal);
      cell.plan_ms.push_back(r.mean_plan_ms);
      cell.seeds.push_back(r.seed);
    }
    sweep.cells.push_back(std::move(cell));
  };

  for (int q : q_levels) {
    ExperimentConfig c = cfg;
    c.planner = PlannerKind::RbPomcpow;
    c.filter.kind = FilterKind::Rbpf;
    c.planner_params.simulate_rule =
        planners::RuleSpec::sparse_grid(q, cfg.planner_params.simulate_rule.growth);
    run_cell(c, {"rb-pomcpow", "rbpf", c.filter.particles, q,
                 c.planner_params.n_iterations, {}, {}, {}, {}, {}});
  }
  for (int iters : pomcpow_iterations) {
    ExperimentConfig c = cfg;
    c.planner = PlannerKind::Pomcpow;
    c.planner_params.n_iterations = iters;
    c.filter.kind = FilterKind::Sirpf;
    c.filter.particles = sir_particles;
    run_cell(c, {"pomcpow", "sirpf", sir_particles, 0, iters, {}, {}, {}, {}, {}});
    c.filter.kind = FilterKind::Rbpf;
    c.filter.particles = cfg.filter.particles;
    run_cell(c, {"pomcpow", "rbpf", c.filter.particles, 0, iters, {}, {}, {}, {}, {}});
  }
  return sweep;
}

ConsistencyReport consistency_suite(const ExperimentConfig& cfg, int steps) {
  cfg.validate();
  if (steps <= 0) throw std::invalid_argument("consistency: steps must be positive");
  const loc::LocalizationModel model(cfg.world, cfg.map);
  const int obs_dof = static_cast<int>(model.observation_dim());
  const Vector bandwidth = Vector::Constant(3, cfg.filter.bandwidth);
  const auto n = static_cast<std::size_t>(cfg.filter.particles);
  static const std::vector<Eigen::Index> pos{loc::kXi, loc::kEta};

  ConsistencyReport report;
  for (const std::string name : {"rbpf", "sirpf"}) {
    std::vector<double> nees_values, nis_values;
    for (int e = 0; e < cfg.episodes; ++e) {
      const Rng root(episode_seed(cfg.base_seed, e));
      Rng traj_rng = root.child(0);
      Rng rng = root.child(1);
      const Trajectory traj = scripted_trajectory(model, steps, traj_rng);
      filters::RBBelief rb;
      filters::SirBelief sir;
      if (name == "rbpf") {
        rb = model.initial_rb_belief(n, rng, cfg.filter.resample_threshold);
      } else {
        sir = model.initial_sir_belief(n, rng, bandwidth, cfg.filter.resample_threshold);
      }
      for (int k = 0; k < steps; ++k) {
        ConsistencyRow row;
        row.filter = name;
        row.episode = e;
        row.step = k;
        row.nees_dof = 2;
        row.nis_dof = obs_dof;
        quad::GaussianStat g;
        if (name == "rbpf") {
          rb = filters::rbpf_update(rb, traj.actions[k], traj.observations[k], model,
                                    rng, cfg.planner_params.ukf, true);
          row.nis = rb.diagnostics.nis;
          g = filters::tractable_moments(rb);
        } else {
          sir = filters::sirpf_update(sir, traj.actions[k], traj.observations[k],
                                      model, rng, true);
          row.nis = sir.diagnostics.nis;
          g = filters::state_moments(sir, pos);
        }
        try {
          row.nees = filters::nees(g.mean, traj.states[k].head<2>(), g.cov).nees;
        } catch (const NumericalError&) {
          row.nees = std::numeric_limits<double>::infinity();
        }
        nees_values.push_back(row.nees);
        nis_values.push_back(row.nis);
        report.rows.push_back(row);
      }
    }
    report.filters.push_back({name, static_cast<int>(nees_values.size()),
                              filters::chi2_coverage(nees_values, 2),
                              filters::chi2_coverage(nis_values, obs_dof)});
  }
  return report;
}

}  // namespace rbpomdp::harness
