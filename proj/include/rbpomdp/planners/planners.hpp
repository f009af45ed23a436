#pragma once

#include <functional>

#include "rbpomdp/core/model.hpp"
#include "rbpomdp/filters/particle_filters.hpp"
#include "rbpomdp/planners/expected_generative.hpp"
#include "rbpomdp/planners/params.hpp"
#include "rbpomdp/planners/tree.hpp"

namespace rbpomdp::planners {

/// Called with (action node, total) on every Q/V backup.
using BackupObserver = std::function<void(std::size_t, double)>;

/// RB-POMCPOW: POMCPOW over Rao-Blackwellized particles. Each tree step
/// samples only the non-tractable transition; rewards and the next tractable
/// mean come from quadrature over the particle's Gaussian, and the Gaussian is
/// carried down the tree by UKF updates.
///
/// The model must outlive the planner. One planner instance owns one tree and
/// is not thread-safe.
class RbPomcpowPlanner {
 public:
  RbPomcpowPlanner(const RBFactoredModel& model, PlannerParams params);

  /// Runs n_iterations simulations from particles drawn by weight and
  /// returns argmax_a Q(root, a). The tree is rebuilt on every call.
  std::size_t search(const filters::RBBelief& belief, Rng& rng);

  /// One simulation from history h with d steps to go.
  double simulate(const NodeBelief& p, std::size_t h, int d, Rng& rng);
  /// Rollout with d steps to go, `depth` steps below the root.
  double rollout(const NodeBelief& p, int d, int depth, Rng& rng);

  const PlannerTree& tree() const { return tree_; }
  PlannerTree& tree() { return tree_; }
  const PlannerParams& params() const { return params_; }
  void set_backup_observer(BackupObserver obs) { observer_ = std::move(obs); }

 private:
  std::size_t rollout_action(const NodeBelief& p, Rng& rng) const;

  const RBFactoredModel& model_;
  PlannerParams params_;
  quad::MultiRule simulate_rule_;
  quad::MultiRule rollout_rule_;
  PlannerTree tree_;
  BackupObserver observer_;
};

/// RB-POMCP: no progressive widening, every action initialized on the first
/// visit of a history, observation children keyed by the noise-free expected
/// observation. Depth counts up from 0 and simulations stop once
/// gamma^depth < epsilon (or depth reaches max_depth).
class RbPomcpPlanner {
 public:
  RbPomcpPlanner(const RBFactoredModel& model, PlannerParams params);

  std::size_t search(const filters::RBBelief& belief, Rng& rng);
  double simulate(const NodeBelief& p, std::size_t h, int depth, Rng& rng);

  const PlannerTree& tree() const { return tree_; }
  void set_backup_observer(BackupObserver obs) { observer_ = std::move(obs); }

 private:
  RbPomcpowPlanner rollouts_;  // shares the Rollout procedure
  const RBFactoredModel& model_;
  PlannerParams params_;
  quad::MultiRule simulate_rule_;
  PlannerTree tree_;
  BackupObserver observer_;
};

/// Baseline POMCPOW over full-state particles with sampled generative steps
/// and sampled observations for widening.
class PomcpowPlanner {
 public:
  using RootSampler = std::function<Vector(Rng&)>;

  PomcpowPlanner(const PomdpModel& model, PlannerParams params);

  std::size_t search(const RootSampler& sample_root, Rng& rng);
  std::size_t search(const filters::SirBelief& belief, Rng& rng);
  /// Rao-Blackwellized belief used by sampling the tractable block from each
  /// drawn particle's Gaussian. Draws are canonicalized onto the state space.
  std::size_t search(const filters::RBBelief& belief,
                     const RBFactoredModel& factored, Rng& rng);

  double simulate(const Vector& s, std::size_t h, int d, Rng& rng);
  double rollout(const Vector& s, int d, int depth, Rng& rng);

  const PlannerTree& tree() const { return tree_; }
  void set_backup_observer(BackupObserver obs) { observer_ = std::move(obs); }

 private:
  std::size_t rollout_action(const Vector& s, Rng& rng) const;

  const PomdpModel& model_;
  PlannerParams params_;
  PlannerTree tree_;
  BackupObserver observer_;
};

}  // namespace rbpomdp::planners
