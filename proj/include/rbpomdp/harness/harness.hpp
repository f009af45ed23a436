#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rbpomdp/harness/config.hpp"

namespace rbpomdp::harness {

/// Step k: action a_k taken from the true state s_k, reward r_k, and the
/// posterior after observing o_{k+1}. truth is s_{k+1}; belief summaries
/// cover the position block.
struct StepRow {
  int step = 0;
  Vector truth;
  Vector belief_mean;
  Matrix belief_cov;
  double ess_normalized = 1.0;  // before any resampling
  std::size_t action = 0;
  double reward = 0.0;
  double cumulative_reward = 0.0;  // discounted, through this step
  double plan_ms = 0.0;
  double update_ms = 0.0;
  double nees = 0.0;  // NaN when not computed
  double nis = 0.0;
};

struct EpisodeRecord {
  int episode = 0;
  std::uint64_t seed = 0;
  std::vector<StepRow> rows;
  bool reached_goal = false;
  bool failed = false;  // degenerate belief or numerical breakdown
  std::string failure;
  double cumulative_reward = 0.0;
  double mean_plan_ms = 0.0;
  double mean_update_ms = 0.0;
};

/// Seed of episode `index`: child stream of the base seed.
std::uint64_t episode_seed(std::uint64_t base_seed, int index);

/// Plans, acts, observes and updates until the goal, the step cap or a
/// degenerate belief. Throws std::invalid_argument for an invalid config
/// before any step is taken.
EpisodeRecord run_episode(const ExperimentConfig& cfg, int index);

/// Runs cfg.episodes episodes on cfg.workers threads. Results are ordered
/// by episode index and independent of the worker count.
std::vector<EpisodeRecord> run_episodes(const ExperimentConfig& cfg);

struct Summary {
  int episodes = 0;
  double mean_reward = 0.0;
  double std_error = 0.0;   // of the mean reward
  double ci95 = 0.0;        // half-width, normal approximation
  double success_rate = 0.0;
  double mean_plan_ms = 0.0;
  double mean_ess = 0.0;
};
Summary summarize(const std::vector<EpisodeRecord>& records);

/// One JSON object per step, keyed by episode and step.
void write_jsonl(std::ostream& out, const std::vector<EpisodeRecord>& records);
/// Per-episode CSV with a '#' header carrying the config hash and seeds.
void write_episode_csv(std::ostream& out, const ExperimentConfig& cfg,
                       const std::vector<EpisodeRecord>& records);
/// Per-step CSV (episode, step, filter, ess_normalized, ...) for traces.
void write_steps_csv(std::ostream& out, const ExperimentConfig& cfg,
                     const std::vector<EpisodeRecord>& records);

/// Open-loop action sequence of the noise-free heuristic run from the start
/// pose. Used wherever a scripted trajectory is needed.
std::vector<std::size_t> scripted_actions(const localization::LocalizationModel& model,
                                          int steps);

// Filter timing benchmark.

struct FilterTiming {
  std::string filter;
  int particles = 0;
  double mean_ms = 0.0;
  double std_ms = 0.0;
  int steps = 0;
};

/// Mean per-step update time for RBPF and SIRPF at each particle count over
/// a fixed scripted trajectory and observation sequence.
std::vector<FilterTiming> bench_filters(const ExperimentConfig& cfg,
                                        const std::vector<int>& particle_counts,
                                        int repeats, int steps = 30);
void write_filter_timing_csv(std::ostream& out, const ExperimentConfig& cfg,
                             const std::vector<FilterTiming>& rows);

// Planning sweep.

struct PlanningCell {
  std::string planner;  // rb-pomcpow, pomcpow
  std::string filter;   // rbpf, sirpf
  int particles = 0;
  int q = 0;            // sparse-grid level, 0 when not applicable
  int iterations = 0;
  Summary summary;
  std::vector<double> rewards;  // per episode, in episode order
  std::vector<bool> reached;
  std::vector<double> plan_ms;
  std::vector<std::uint64_t> seeds;
};

struct PlanningSweep {
  std::vector<PlanningCell> cells;
  double upper_bound = 0.0;
};

/// Discounted return of the noise-free straight-line run from the start to
/// the goal disc at top speed. Obstacle penalties are ignored, so the value
/// bounds every policy from above.
double straight_line_upper_bound(const localization::WorldConfig& world);

/// RB-POMCPOW over q (cfg iterations, RBPF) and POMCPOW over iteration
/// counts with SIRPF(sir_particles) and with RBPF sampling.
PlanningSweep bench_planning(const ExperimentConfig& cfg,
                             const std::vector<int>& q_levels,
                             const std::vector<int>& pomcpow_iterations,
                             int sir_particles = 1000);
void write_planning_csv(std::ostream& out, const ExperimentConfig& cfg,
                        const PlanningSweep& sweep);
/// Raw per-episode rows behind write_planning_csv.
void write_planning_episodes_csv(std::ostream& out, const ExperimentConfig& cfg,
                                 const PlanningSweep& sweep);

// Consistency.

struct ConsistencyRow {
  std::string filter;
  int episode = 0;
  int step = 0;
  double nees = 0.0;
  double nis = 0.0;
  int nees_dof = 0;
  int nis_dof = 0;
};

struct ConsistencyReport {
  std::vector<ConsistencyRow> rows;
  struct PerFilter {
    std::string filter;
    int steps = 0;
    double nees_inside = 0.0;  // fraction within the two-sided 95% bounds
    double nis_inside = 0.0;
  };
  std::vector<PerFilter> filters;
};

/// Filter-only episodes with a scripted action sequence for RBPF and SIRPF.
ConsistencyReport consistency_suite(const ExperimentConfig& cfg, int steps = 40);
void write_consistency_csv(std::ostream& out, const ExperimentConfig& cfg,
                           const ConsistencyReport& report);

}  // namespace rbpomdp::harness
