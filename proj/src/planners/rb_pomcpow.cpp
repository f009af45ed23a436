#include <cmath>
#include <stdexcept>

#include "rbpomdp/planners/planners.hpp"

namespace rbpomdp::planners {

RbPomcpowPlanner::RbPomcpowPlanner(const RBFactoredModel& model,
                                   PlannerParams params)
    : model_(model), params_(std::move(params)) {
  model_.validate();
  params_.validate();
  const int d = static_cast<int>(model_.alpha_dim());
  simulate_rule_ = params_.simulate_rule.build(d);
  rollout_rule_ = params_.rollout_rule.build(d);
}

std::size_t RbPomcpowPlanner::search(const filters::RBBelief& belief,
                                     Rng& rng) {
  if (belief.particles.empty()) {
    throw std::invalid_argument("search: empty belief");
  }
  tree_.clear();
  const WeightedSampler sampler(belief.weights());
  for (int i = 0; i < params_.n_iterations; ++i) {
    const filters::RBParticle& drawn = belief.particles[sampler.sample(rng)];
    simulate(NodeBelief{drawn.s_pi, drawn.theta}, PlannerTree::root(),
             params_.max_depth, rng);
  }
  return tree_.best_root_action().value_or(0);
}

std::size_t RbPomcpowPlanner::rollout_action(const NodeBelief& p,
                                             Rng& rng) const {
  if (params_.rollout_policy == RolloutPolicy::Heuristic) {
    if (auto a = model_.heuristic_action(node_mean_state(p, model_))) return *a;
  }
  return rng.uniform_index(model_.num_actions());
}

double RbPomcpowPlanner::rollout(const NodeBelief& p, int d, int depth,
                                 Rng& rng) {
  const double gamma = model_.discount();
  if (d <= 0 || std::pow(gamma, depth) < params_.epsilon) return 0.0;
  if (node_is_terminal(p, model_)) return model_.terminal_reward();
  const Vector& a = model_.actions()[rollout_action(p, rng)];
  const ExpectedStep step = expected_generative(p, a, model_, rollout_rule_, rng);
  if (step.terminal) return step.reward;
  const NodeBelief next = analytical_update(p, step.next_state, step.observation,
                                            a, model_, params_.ukf);
  return step.reward + gamma * rollout(next, d - 1, depth + 1, rng);
}

double RbPomcpowPlanner::simulate(const NodeBelief& p, std::size_t h, int d,
                                  Rng& rng) {
  if (d <= 0) return 0.0;
  if (node_is_terminal(p, model_)) return model_.terminal_reward();
  const double gamma = model_.discount();

  const std::size_t ha =
      action_prog_widen(tree_, h, params_, model_.num_actions());
  const Vector& a = model_.actions()[tree_.action_node(ha).action];
  const Vector s_hat = node_mean_state(p, model_);
  const ExpectedStep step =
      expected_generative(p, a, model_, simulate_rule_, rng);

  std::size_t hao = 0;
  bool new_node = false;
  const ActionNode& an = tree_.action_node(ha);
  const double obs_bound =
      params_.k_obs * std::pow(static_cast<double>(an.visits), params_.alpha_obs);
  if (static_cast<double>(an.branches.size()) <= obs_bound) {
    if (auto found = tree_.find_branch(ha, step.observation)) {
      hao = *found;
    } else {
      hao = tree_.add_branch(ha, step.observation);
      new_node = true;
    }
    tree_.branch(hao).visits += 1;
  } else {
    const auto& children = tree_.action_node(ha).branches;
    std::vector<double> counts;
    counts.reserve(children.size());
    for (std::size_t c : children) counts.push_back(tree_.branch(c).visits);
    hao = children[WeightedSampler(counts).sample(rng)];
  }

  {
    ObservationBranch& b = tree_.branch(hao);
    b.states.push_back(step.next_state);
    b.rewards.push_back(step.reward);
    b.weights.push_back(
        model_.obs_density(b.observation, s_hat, a, step.next_state));
  }

  double total = 0.0;
  if (new_node) {
    total = step.reward;
    if (!step.terminal) {
      const NodeBelief next = analytical_update(
          p, step.next_state, step.observation, a, model_, params_.ukf);
      total += gamma * rollout(next, d - 1, params_.max_depth - d + 1, rng);
    }
  } else {
    const ObservationBranch& b = tree_.branch(hao);
    const std::size_t i = WeightedSampler(b.weights).sample(rng);
    const Vector s_next = b.states[i];
    const double r = b.rewards[i];
    const Vector o = b.observation;
    const std::size_t child = b.history;
    total = r;
    if (!model_.is_terminal(s_next)) {
      const NodeBelief next =
          analytical_update(p, s_next, o, a, model_, params_.ukf);
      total += gamma * simulate(next, child, d - 1, rng);
    }
  }

  tree_.history(h).visits += 1;
  ActionNode& node = tree_.action_node(ha);
  node.visits += 1;
  node.value += (total - node.value) / static_cast<double>(node.visits);
  if (observer_) observer_(ha, total);
  return total;
}

}  // namespace rbpomdp::planners
