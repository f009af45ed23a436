#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <thread>

#include "rbpomdp/filters/consistency.hpp"
#include "rbpomdp/harness/harness.hpp"
#include "rbpomdp/planners/planners.hpp"

namespace rbpomdp::harness {

namespace loc = localization;
using Clock = std::chrono::steady_clock;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// Belief of one episode: exactly one of the members is active.
struct EpisodeBelief {
  FilterKind kind;
  filters::RBBelief rb;
  filters::SirBelief sir;
  Vector oracle;

  // Position mean and covariance.
  quad::GaussianStat position() const {
    static const std::vector<Eigen::Index> pos{loc::kXi, loc::kEta};
    switch (kind) {
      case FilterKind::Rbpf:
        return filters::tractable_moments(rb);
      case FilterKind::Sirpf:
        return filters::state_moments(sir, pos);
      case FilterKind::Oracle:
        break;
    }
    return {oracle.head<2>(), Matrix::Zero(2, 2)};
  }

  double heading() const {
    double c = 0.0, s = 0.0;
    switch (kind) {
      case FilterKind::Rbpf:
        for (const auto& p : rb.particles) {
          c += p.weight * std::cos(p.s_pi[0]);
          s += p.weight * std::sin(p.s_pi[0]);
        }
        return std::atan2(s, c);
      case FilterKind::Sirpf:
        for (Eigen::Index i = 0; i < sir.states.cols(); ++i) {
          const double w = sir.weights[static_cast<std::size_t>(i)];
          c += w * std::cos(sir.states(loc::kTheta, i));
          s += w * std::sin(sir.states(loc::kTheta, i));
        }
        return std::atan2(s, c);
      case FilterKind::Oracle:
        break;
    }
    return oracle[loc::kTheta];
  }

  Vector mean_state() const {
    Vector s(3);
    s.head<2>() = position().mean;
    s[loc::kTheta] = heading();
    return s;
  }
};

EpisodeBelief initial_belief(const ExperimentConfig& cfg,
                             const loc::LocalizationModel& model,
                             const Vector& truth, Rng& rng) {
  EpisodeBelief b{cfg.filter.kind, {}, {}, truth};
  const auto n = static_cast<std::size_t>(cfg.filter.particles);
  if (cfg.filter.kind == FilterKind::Rbpf) {
    b.rb = model.initial_rb_belief(n, rng, cfg.filter.resample_threshold);
  } else if (cfg.filter.kind == FilterKind::Sirpf) {
    b.sir = model.initial_sir_belief(n, rng, Vector::Constant(3, cfg.filter.bandwidth),
                                     cfg.filter.resample_threshold);
  }
  return b;
}

// One-particle, zero-covariance belief used when Rao-Blackwellized planners
// run on the true state.
filters::RBBelief point_rb_belief(const Vector& s) {
  filters::RBBelief b;
  filters::RBParticle p;
  p.s_pi = Vector::Constant(1, s[loc::kTheta]);
  p.theta = {s.head<2>(), Matrix::Zero(2, 2)};
  p.weight = 1.0;
  b.particles.push_back(std::move(p));
  return b;
}

class EpisodePlanner {
 public:
  EpisodePlanner(const ExperimentConfig& cfg, const loc::LocalizationModel& model)
      : kind_(cfg.planner), model_(model) {
    switch (kind_) {
      case PlannerKind::RbPomcpow:
        rb_pomcpow_.emplace(model, cfg.planner_params);
        break;
      case PlannerKind::RbPomcp:
        rb_pomcp_.emplace(model, cfg.planner_params);
        break;
      case PlannerKind::Pomcpow:
        pomcpow_.emplace(model, cfg.planner_params);
        break;
      case PlannerKind::Heuristic:
        break;
    }
  }

  std::size_t plan(const EpisodeBelief& b, Rng& rng) {
    const bool oracle = b.kind == FilterKind::Oracle;
    switch (kind_) {
      case PlannerKind::RbPomcpow:
        return rb_pomcpow_->search(oracle ? point_rb_belief(b.oracle) : b.rb, rng);
      case PlannerKind::RbPomcp:
        return rb_pomcp_->search(oracle ? point_rb_belief(b.oracle) : b.rb, rng);
      case PlannerKind::Pomcpow:
        if (oracle) {
          return pomcpow_->search([&](Rng&) { return b.oracle; }, rng);
        }
        if (b.kind == FilterKind::Rbpf) return pomcpow_->search(b.rb, model_, rng);
        return pomcpow_->search(b.sir, rng);
      case PlannerKind::Heuristic:
        break;
    }
    return model_.heuristic_action(b.mean_state()).value_or(0);
  }

 private:
  PlannerKind kind_;
  const loc::LocalizationModel& model_;
  std::optional<planners::RbPomcpowPlanner> rb_pomcpow_;
  std::optional<planners::RbPomcpPlanner> rb_pomcp_;
  std::optional<planners::PomcpowPlanner> pomcpow_;
};

}  // namespace

std::uint64_t episode_seed(std::uint64_t base_seed, int index) {
  return Rng(base_seed).child(static_cast<std::uint64_t>(index)).seed();
}

EpisodeRecord run_episode(const ExperimentConfig& cfg, int index) {
  cfg.validate();
  const loc::LocalizationModel model(cfg.world, cfg.map);
  EpisodePlanner planner(cfg, model);

  EpisodeRecord rec;
  rec.episode = index;
  rec.seed = episode_seed(cfg.base_seed, index);
  const Rng root(rec.seed);
  Rng env_rng = root.child(0);
  Rng filter_rng = root.child(1);
  Rng plan_rng = root.child(2);
  Rng init_rng = root.child(3);

  Vector truth = cfg.world.start;
  EpisodeBelief belief = initial_belief(cfg, model, truth, init_rng);
  const double gamma = model.discount();
  double discount = 1.0;
  double plan_total = 0.0, update_total = 0.0;

  for (int k = 0; k < cfg.world.max_steps; ++k) {
    if (model.is_terminal(truth)) {
      rec.reached_goal = true;
      break;
    }
    StepRow row;
    row.step = k;
    try {
      auto t0 = Clock::now();
      row.action = planner.plan(belief, plan_rng);
      row.plan_ms = elapsed_ms(t0);

      const Vector& a = model.actions()[row.action];
      const GenOutput g = model.generative_step(truth, a, env_rng);
      truth = g.next_state;
      row.reward = g.reward;
      rec.cumulative_reward += discount * g.reward;
      discount *= gamma;
      row.cumulative_reward = rec.cumulative_reward;

      t0 = Clock::now();
      const bool consistency = cfg.filter.consistency;
      row.nis = kNaN;
      switch (belief.kind) {
        case FilterKind::Rbpf:
          belief.rb = filters::rbpf_update(belief.rb, a, g.observation, model,
                                           filter_rng, cfg.planner_params.ukf,
                                           consistency);
          row.ess_normalized = belief.rb.diagnostics.ess_normalized;
          if (consistency) row.nis = belief.rb.diagnostics.nis;
          break;
        case FilterKind::Sirpf:
          belief.sir = filters::sirpf_update(belief.sir, a, g.observation, model,
                                             filter_rng, consistency);
          row.ess_normalized = belief.sir.diagnostics.ess_normalized;
          if (consistency) row.nis = belief.sir.diagnostics.nis;
          break;
        case FilterKind::Oracle:
          belief.oracle = truth;
          break;
      }
      row.update_ms = elapsed_ms(t0);

      row.truth = truth;
      const quad::GaussianStat pos = belief.position();
      row.belief_mean = pos.mean;
      row.belief_cov = pos.cov;
      row.nees = kNaN;
      if (consistency && belief.kind != FilterKind::Oracle) {
        try {
          row.nees = filters::nees(pos.mean, truth.head<2>(), pos.cov).nees;
        } catch (const NumericalError&) {
        }
      }
      plan_total += row.plan_ms;
      update_total += row.update_ms;
      rec.rows.push_back(std::move(row));
      if (g.terminal) {
        rec.reached_goal = true;
        break;
      }
    } catch (const DegenerateBeliefError& e) {
      rec.failed = true;
      rec.failure = std::string("degenerate belief: ") + e.what();
      break;
    } catch (const NumericalError& e) {
      rec.failed = true;
      rec.failure = std::string("numerical failure: ") + e.what();
      break;
    } catch (const std::domain_error& e) {
      rec.failed = true;
      rec.failure = std::string("simulator: ") + e.what();
      break;
    }
  }
  if (!rec.rows.empty()) {
    const auto n = static_cast<double>(rec.rows.size());
    rec.mean_plan_ms = plan_total / n;
    rec.mean_update_ms = update_total / n;
  }
  return rec;
}

std::vector<EpisodeRecord> run_episodes(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<EpisodeRecord> out(static_cast<std::size_t>(cfg.episodes));
  const int workers = std::min(cfg.workers, cfg.episodes);
  if (workers <= 1) {
    for (int i = 0; i < cfg.episodes; ++i) out[static_cast<std::size_t>(i)] = run_episode(cfg, i);
    return out;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < cfg.episodes; i = next++) {
        try {
          out[static_cast<std::size_t>(i)] = run_episode(cfg, i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

Summary summarize(const std::vector<EpisodeRecord>& records) {
  Summary s;
  s.episodes = static_cast<int>(records.size());
  if (records.empty()) return s;
  const double n = static_cast<double>(records.size());
  double ess_sum = 0.0;
  std::size_t ess_count = 0;
  for (const auto& r : records) {
    s.mean_reward += r.cumulative_reward / n;
    s.success_rate += (r.reached_goal ? 1.0 : 0.0) / n;
    s.mean_plan_ms += r.mean_plan_ms / n;
    for (const auto& row : r.rows) {
      ess_sum += row.ess_normalized;
      ++ess_count;
    }
  }
  if (records.size() > 1) {
    double ss = 0.0;
    for (const auto& r : records) {
      ss += (r.cumulative_reward - s.mean_reward) * (r.cumulative_reward - s.mean_reward);
    }
    s.std_error = std::sqrt(ss / (n - 1.0) / n);
  }
  s.ci95 = 1.96 * s.std_error;
  s.mean_ess = ess_count ? ess_sum / static_cast<double>(ess_count) : 0.0;
  return s;
}

std::vector<std::size_t> scripted_actions(const loc::LocalizationModel& model,
                                          int steps) {
  const auto& w = model.config();
  std::vector<std::size_t> out;
  Vector s = w.start;
  for (int k = 0; k < steps; ++k) {
    const std::size_t a = model.heuristic_action(s).value_or(0);
    out.push_back(a);
    const Vector& act = model.actions()[a];
    s[loc::kXi] += act[0] * w.actuation_mean[0] * w.dt * std::cos(s[loc::kTheta]);
    s[loc::kEta] += act[0] * w.actuation_mean[0] * w.dt * std::sin(s[loc::kTheta]);
    s[loc::kTheta] = loc::wrap_angle(s[loc::kTheta] + act[1] * w.actuation_mean[1] * w.dt);
    s = model.canonicalize(s);
  }
  return out;
}

}  // namespace rbpomdp::harness
