#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "rbpomdp/core/types.hpp"
#include "rbpomdp/planners/params.hpp"

namespace rbpomdp::planners {

/// (h, a, o) node: M(hao), B(hao), W(hao) and the child history.
struct ObservationBranch {
  Vector observation;
  int visits = 0;  // M(hao)
  std::vector<Vector> states;
  std::vector<double> rewards;
  std::vector<double> weights;
  std::size_t history = 0;
};

/// (h, a) node: N(ha), Q(ha), C(ha).
struct ActionNode {
  std::size_t action = 0;
  int visits = 0;
  double value = 0.0;
  std::vector<std::size_t> branches;
};

/// History node: N(h), C(h).
struct HistoryNode {
  int visits = 0;
  std::vector<std::size_t> children;
  std::size_t next_action = 0;  // round-robin cursor for widening
  bool expanded = false;        // used by the non-widening planner
};

/// Arena-allocated search tree. Node handles are indices and stay valid
/// while the tree grows; references do not.
class PlannerTree {
 public:
  PlannerTree() { clear(); }

  void clear();
  static constexpr std::size_t root() { return 0; }

  std::size_t add_history();
  std::size_t add_action(std::size_t h, std::size_t action);
  /// Adds a branch for `obs` under ha together with its child history.
  std::size_t add_branch(std::size_t ha, Vector obs);
  std::optional<std::size_t> find_branch(std::size_t ha, const Vector& obs) const;

  HistoryNode& history(std::size_t i) { return histories_[i]; }
  const HistoryNode& history(std::size_t i) const { return histories_[i]; }
  ActionNode& action_node(std::size_t i) { return actions_[i]; }
  const ActionNode& action_node(std::size_t i) const { return actions_[i]; }
  ObservationBranch& branch(std::size_t i) { return branches_[i]; }
  const ObservationBranch& branch(std::size_t i) const { return branches_[i]; }

  std::size_t num_histories() const { return histories_.size(); }
  std::size_t num_action_nodes() const { return actions_.size(); }
  std::size_t num_branches() const { return branches_.size(); }

  /// Action index with the highest Q among the root's children; ties go to
  /// the lowest action index. nullopt when the root has no children.
  std::optional<std::size_t> best_root_action() const;

  /// Count and widening invariants. Returns one message per violation.
  /// `check_widening` is false for planners that do not widen.
  std::vector<std::string> check_invariants(const PlannerParams& params,
                                            bool check_widening = true) const;

 private:
  std::vector<HistoryNode> histories_;
  std::vector<ActionNode> actions_;
  std::vector<ObservationBranch> branches_;
};

/// UCB1 choice among C(h): Q(ha) + c sqrt(log N(h) / N(ha)), with N(ha) = 0
/// scoring +inf. Ties go to the earliest child (lowest action index).
std::size_t ucb_select(const PlannerTree& tree, std::size_t h, double c);

/// Adds the next untried action (round-robin over the action list) iff
/// |C(h)| <= k_a N(h)^alpha_a, then returns the UCB choice as an action-node
/// handle.
std::size_t action_prog_widen(PlannerTree& tree, std::size_t h,
                              const PlannerParams& params,
                              std::size_t num_actions);

}  // namespace rbpomdp::planners
