#include <cmath>
#include <stdexcept>

#include "rbpomdp/planners/planners.hpp"

namespace rbpomdp::planners {

RbPomcpPlanner::RbPomcpPlanner(const RBFactoredModel& model,
                               PlannerParams params)
    : rollouts_(model, params), model_(model), params_(std::move(params)) {
  simulate_rule_ =
      params_.simulate_rule.build(static_cast<int>(model_.alpha_dim()));
}

std::size_t RbPomcpPlanner::search(const filters::RBBelief& belief, Rng& rng) {
  if (belief.particles.empty()) {
    throw std::invalid_argument("search: empty belief");
  }
  tree_.clear();
  const WeightedSampler sampler(belief.weights());
  for (int i = 0; i < params_.n_iterations; ++i) {
    const filters::RBParticle& drawn = belief.particles[sampler.sample(rng)];
    simulate(NodeBelief{drawn.s_pi, drawn.theta}, PlannerTree::root(), 0, rng);
  }
  return tree_.best_root_action().value_or(0);
}

double RbPomcpPlanner::simulate(const NodeBelief& p, std::size_t h, int depth,
                                Rng& rng) {
  const double gamma = model_.discount();
  if (depth >= params_.max_depth || std::pow(gamma, depth) < params_.epsilon) {
    return 0.0;
  }
  if (node_is_terminal(p, model_)) return model_.terminal_reward();

  if (!tree_.history(h).expanded) {
    for (std::size_t a = 0; a < model_.num_actions(); ++a) tree_.add_action(h, a);
    tree_.history(h).expanded = true;
    return rollouts_.rollout(p, params_.max_depth - depth, depth, rng);
  }

  const std::size_t ha = ucb_select(tree_, h, params_.ucb_c);
  const Vector& a = model_.actions()[tree_.action_node(ha).action];
  const ExpectedStep step =
      expected_generative(p, a, model_, simulate_rule_, rng);

  std::size_t hao = 0;
  if (auto found = tree_.find_branch(ha, step.observation)) {
    hao = *found;
  } else {
    hao = tree_.add_branch(ha, step.observation);
  }
  tree_.branch(hao).visits += 1;
  const std::size_t child = tree_.branch(hao).history;

  double total = step.reward;
  if (!step.terminal) {
    const NodeBelief next = analytical_update(
        p, step.next_state, step.observation, a, model_, params_.ukf);
    total += gamma * simulate(next, child, depth + 1, rng);
  }

  tree_.history(h).visits += 1;
  ActionNode& node = tree_.action_node(ha);
  node.visits += 1;
  node.value += (total - node.value) / static_cast<double>(node.visits);
  if (observer_) observer_(ha, total);
  return total;
}

}  // namespace rbpomdp::planners
