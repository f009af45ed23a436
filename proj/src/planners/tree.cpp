#include "rbpomdp/planners/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace rbpomdp::planners {

void PlannerTree::clear() {
  histories_.clear();
  actions_.clear();
  branches_.clear();
  histories_.emplace_back();
}

std::size_t PlannerTree::add_history() {
  histories_.emplace_back();
  return histories_.size() - 1;
}

std::size_t PlannerTree::add_action(std::size_t h, std::size_t action) {
  ActionNode node;
  node.action = action;
  actions_.push_back(std::move(node));
  const std::size_t ha = actions_.size() - 1;
  histories_[h].children.push_back(ha);
  return ha;
}

std::size_t PlannerTree::add_branch(std::size_t ha, Vector obs) {
  const std::size_t child = add_history();
  ObservationBranch b;
  b.observation = std::move(obs);
  b.history = child;
  branches_.push_back(std::move(b));
  const std::size_t hao = branches_.size() - 1;
  actions_[ha].branches.push_back(hao);
  return hao;
}

std::optional<std::size_t> PlannerTree::find_branch(std::size_t ha,
                                                    const Vector& obs) const {
  for (std::size_t hao : actions_[ha].branches) {
    const Vector& o = branches_[hao].observation;
    if (o.size() == obs.size() && o == obs) return hao;
  }
  return std::nullopt;
}

std::optional<std::size_t> PlannerTree::best_root_action() const {
  const HistoryNode& root_node = histories_[root()];
  std::optional<std::size_t> best;
  double best_q = 0.0;
  std::size_t best_action = 0;
  for (std::size_t ha : root_node.children) {
    const ActionNode& node = actions_[ha];
    if (!best || node.value > best_q ||
        (node.value == best_q && node.action < best_action)) {
      best = ha;
      best_q = node.value;
      best_action = node.action;
    }
  }
  if (!best) return std::nullopt;
  return best_action;
}

std::vector<std::string> PlannerTree::check_invariants(
    const PlannerParams& params, bool check_widening) const {
  std::vector<std::string> errors;
  auto fail = [&](const std::string& what, std::size_t id) {
    std::ostringstream msg;
    msg << what << " at node " << id;
    errors.push_back(msg.str());
  };
  for (std::size_t h = 0; h < histories_.size(); ++h) {
    const HistoryNode& node = histories_[h];
    long total = 0;
    for (std::size_t ha : node.children) total += actions_[ha].visits;
    if (total != node.visits) fail("N(h) != sum N(ha)", h);
    if (check_widening) {
      const double bound =
          params.k_action * std::pow(static_cast<double>(node.visits),
                                     params.alpha_action) + 1.0;
      if (static_cast<double>(node.children.size()) > bound) {
        fail("|C(h)| exceeds action widening bound", h);
      }
    }
  }
  for (std::size_t ha = 0; ha < actions_.size(); ++ha) {
    const ActionNode& node = actions_[ha];
    if (check_widening) {
      const double bound = params.k_obs * std::pow(static_cast<double>(node.visits),
                                                   params.alpha_obs) + 1.0;
      if (static_cast<double>(node.branches.size()) > bound) {
        fail("|C(ha)| exceeds observation widening bound", ha);
      }
    }
    for (std::size_t hao : node.branches) {
      const ObservationBranch& b = branches_[hao];
      if (b.states.size() != b.weights.size() ||
          b.rewards.size() != b.weights.size()) {
        fail("len(B) != len(W)", hao);
      }
    }
  }
  return errors;
}

std::size_t ucb_select(const PlannerTree& tree, std::size_t h, double c) {
  const HistoryNode& node = tree.history(h);
  const double log_n = std::log(static_cast<double>(std::max(node.visits, 1)));
  std::size_t best = node.children.front();
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t ha : node.children) {
    const ActionNode& child = tree.action_node(ha);
    const double score =
        child.visits == 0
            ? std::numeric_limits<double>::infinity()
            : child.value + c * std::sqrt(log_n / static_cast<double>(child.visits));
    if (score > best_score) {
      best_score = score;
      best = ha;
    }
  }
  return best;
}

std::size_t action_prog_widen(PlannerTree& tree, std::size_t h,
                              const PlannerParams& params,
                              std::size_t num_actions) {
  HistoryNode& node = tree.history(h);
  const double bound =
      params.k_action *
      std::pow(static_cast<double>(node.visits), params.alpha_action);
  if (static_cast<double>(node.children.size()) <= bound &&
      node.next_action < num_actions) {
    const std::size_t action = node.next_action++;
    tree.add_action(h, action);
  }
  return ucb_select(tree, h, params.ucb_c);
}

}  // namespace rbpomdp::planners
