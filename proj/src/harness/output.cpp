#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "rbpomdp/harness/harness.hpp"

namespace rbpomdp::harness {

using nlohmann::json;

namespace {

json vec_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json mat_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

// Fixed full precision so values round-trip and files diff cleanly.
std::ostream& csv(std::ostream& out) {
  return out << std::setprecision(17) << std::defaultfloat;
}

void header(std::ostream& out, const ExperimentConfig& cfg,
            const std::vector<std::uint64_t>& seeds) {
  out << "# config_hash=" << config_hash(cfg) << " base_seed=" << cfg.base_seed
      << " episodes=" << seeds.size() << " seeds=";
  for (std::size_t i = 0; i < seeds.size(); ++i) out << (i ? ";" : "") << seeds[i];
  out << '\n';
}

std::vector<std::uint64_t> seeds_of(const ExperimentConfig& cfg, int episodes) {
  std::vector<std::uint64_t> out;
  for (int i = 0; i < episodes; ++i) out.push_back(episode_seed(cfg.base_seed, i));
  return out;
}

std::string csv_num(double x) {
  if (std::isnan(x)) return "";
  std::ostringstream s;
  s << std::setprecision(17) << x;
  return s.str();
}

}  // namespace

void write_jsonl(std::ostream& out, const std::vector<EpisodeRecord>& records) {
  for (const auto& r : records) {
    for (const auto& row : r.rows) {
      json j{{"episode", r.episode},
             {"seed", r.seed},
             {"step", row.step},
             {"truth", vec_json(row.truth)},
             {"belief_mean", vec_json(row.belief_mean)},
             {"belief_cov", mat_json(row.belief_cov)},
             {"ess_normalized", row.ess_normalized},
             {"action", row.action},
             {"reward", row.reward},
             {"cumulative_reward", row.cumulative_reward},
             {"plan_ms", row.plan_ms},
             {"update_ms", row.update_ms},
             {"nees", num(row.nees)},
             {"nis", num(row.nis)}};
      out << j.dump() << '\n';
    }
  }
}

void write_episode_csv(std::ostream& out, const ExperimentConfig& cfg,
                       const std::vector<EpisodeRecord>& records) {
  std::vector<std::uint64_t> seeds;
  for (const auto& r : records) seeds.push_back(r.seed);
  header(out, cfg, seeds);
  csv(out) << "episode,seed,filter,planner,steps,reached_goal,failed,"
              "cumulative_reward,mean_plan_ms,mean_update_ms\n";
  for (const auto& r : records) {
    out << r.episode << ',' << r.seed << ',' << to_string(cfg.filter.kind) << ','
        << to_string(cfg.planner) << ',' << r.rows.size() << ','
        << (r.reached_goal ? 1 : 0) << ',' << (r.failed ? 1 : 0) << ','
        << r.cumulative_reward << ',' << r.mean_plan_ms << ',' << r.mean_update_ms
        << '\n';
  }
}

void write_steps_csv(std::ostream& out, const ExperimentConfig& cfg,
                     const std::vector<EpisodeRecord>& records) {
  std::vector<std::uint64_t> seeds;
  for (const auto& r : records) seeds.push_back(r.seed);
  header(out, cfg, seeds);
  csv(out) << "episode,step,filter,particles,ess_normalized,action,reward,"
              "cumulative_reward,plan_ms,update_ms,nees,nis\n";
  for (const auto& r : records) {
    for (const auto& row : r.rows) {
      out << r.episode << ',' << row.step << ',' << to_string(cfg.filter.kind) << ','
          << cfg.filter.particles << ',' << row.ess_normalized << ',' << row.action
          << ',' << row.reward << ',' << row.cumulative_reward << ',' << row.plan_ms
          << ',' << row.update_ms << ',' << csv_num(row.nees) << ','
          << csv_num(row.nis) << '\n';
    }
  }
}

void write_filter_timing_csv(std::ostream& out, const ExperimentConfig& cfg,
                             const std::vector<FilterTiming>& rows) {
  out << "# config_hash=" << config_hash(cfg) << " base_seed=" << cfg.base_seed
      << '\n';
  csv(out) << "filter,particles,mean_ms,std_ms,steps\n";
  for (const auto& r : rows) {
    out << r.filter << ',' << r.particles << ',' << r.mean_ms << ',' << r.std_ms
        << ',' << r.steps << '\n';
  }
}

void write_planning_csv(std::ostream& out, const ExperimentConfig& cfg,
                        const PlanningSweep& sweep) {
  header(out, cfg, seeds_of(cfg, cfg.episodes));
  csv(out) << "planner,filter,particles,q,iterations,episodes,mean_reward,"
              "std_error,ci95,success_rate,mean_plan_ms,upper_bound\n";
  for (const auto& c : sweep.cells) {
    out << c.planner << ',' << c.filter << ',' << c.particles << ',' << c.q << ','
        << c.iterations << ',' << c.summary.episodes << ',' << c.summary.mean_reward
        << ',' << c.summary.std_error << ',' << c.summary.ci95 << ','
        << c.summary.success_rate << ',' << c.summary.mean_plan_ms << ','
        << sweep.upper_bound << '\n';
  }
}

void write_planning_episodes_csv(std::ostream& out, const ExperimentConfig& cfg,
                                 const PlanningSweep& sweep) {
  header(out, cfg, seeds_of(cfg, cfg.episodes));
  csv(out) << "planner,filter,particles,q,iterations,episode,seed,reached_goal,"
              "cumulative_reward,mean_plan_ms\n";
  for (const auto& c : sweep.cells) {
    for (std::size_t i = 0; i < c.rewards.size(); ++i) {
      out << c.planner << ',' << c.filter << ',' << c.particles << ',' << c.q << ','
          << c.iterations << ',' << i << ',' << c.seeds[i] << ','
          << (c.reached[i] ? 1 : 0) << ',' << c.rewards[i] << ',' << c.plan_ms[i]
          << '\n';
    }
  }
}

void write_consistency_csv(std::ostream& out, const ExperimentConfig& cfg,
                           const ConsistencyReport& report) {
  header(out, cfg, seeds_of(cfg, cfg.episodes));
  csv(out) << "filter,episode,step,nees,nees_dof,nis,nis_dof\n";
  for (const auto& r : report.rows) {
    out << r.filter << ',' << r.episode << ',' << r.step << ',' << csv_num(r.nees)
        << ',' << r.nees_dof << ',' << csv_num(r.nis) << ',' << r.nis_dof << '\n';
  }
}

}  // namespace rbpomdp::harness
