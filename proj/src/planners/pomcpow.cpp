#include <cmath>
#include <stdexcept>

#include "rbpomdp/planners/planners.hpp"

namespace rbpomdp::planners {

PomcpowPlanner::PomcpowPlanner(const PomdpModel& model, PlannerParams params)
    : model_(model), params_(std::move(params)) {
  model_.validate();
  params_.validate();
}

std::size_t PomcpowPlanner::search(const RootSampler& sample_root, Rng& rng) {
  if (params_.n_iterations <= 0) {
    throw std::invalid_argument("search: n_iterations must be positive");
  }
  tree_.clear();
  for (int i = 0; i < params_.n_iterations; ++i) {
    simulate(sample_root(rng), PlannerTree::root(), params_.max_depth, rng);
  }
  return tree_.best_root_action().value_or(0);
}

std::size_t PomcpowPlanner::search(const filters::SirBelief& belief, Rng& rng) {
  if (belief.states.cols() == 0) {
    throw std::invalid_argument("search: empty belief");
  }
  const WeightedSampler sampler(
      std::span<const double>(belief.weights.data(), belief.weights.size()));
  return search(
      [&](Rng& r) -> Vector { return belief.states.col(sampler.sample(r)); },
      rng);
}

std::size_t PomcpowPlanner::search(const filters::RBBelief& belief,
                                   const RBFactoredModel& factored, Rng& rng) {
  if (belief.particles.empty()) {
    throw std::invalid_argument("search: empty belief");
  }
  const WeightedSampler sampler(belief.weights());
  std::vector<Matrix> factors;
  factors.reserve(belief.particles.size());
  for (const auto& p : belief.particles) {
    factors.push_back(quad::psd_sqrt_factor(p.theta.cov));
  }
  return search(
      [&](Rng& r) -> Vector {
        const std::size_t i = sampler.sample(r);
        const auto& p = belief.particles[i];
        const Vector alpha =
            p.theta.mean + factors[i] * r.normal_vector(p.theta.dim());
        return factored.canonicalize(factored.compose(p.s_pi, alpha));
      },
      rng);
}

std::size_t PomcpowPlanner::rollout_action(const Vector& s, Rng& rng) const {
  if (params_.rollout_policy == RolloutPolicy::Heuristic) {
    if (auto a = model_.heuristic_action(s)) return *a;
  }
  return rng.uniform_index(model_.num_actions());
}

double PomcpowPlanner::rollout(const Vector& s, int d, int depth, Rng& rng) {
  const double gamma = model_.discount();
  if (d <= 0 || std::pow(gamma, depth) < params_.epsilon) return 0.0;
  if (model_.is_terminal(s)) return model_.terminal_reward();
  const Vector& a = model_.actions()[rollout_action(s, rng)];
  const GenOutput g = model_.generative_step(s, a, rng);
  if (g.terminal) return g.reward;
  return g.reward + gamma * rollout(g.next_state, d - 1, depth + 1, rng);
}

double PomcpowPlanner::simulate(const Vector& s, std::size_t h, int d,
                                Rng& rng) {
  if (d <= 0) return 0.0;
  if (model_.is_terminal(s)) return model_.terminal_reward();
  const double gamma = model_.discount();

  const std::size_t ha =
      action_prog_widen(tree_, h, params_, model_.num_actions());
  const Vector& a = model_.actions()[tree_.action_node(ha).action];
  const GenOutput g = model_.generative_step(s, a, rng);

  std::size_t hao = 0;
  bool new_node = false;
  const ActionNode& an = tree_.action_node(ha);
  const double obs_bound =
      params_.k_obs * std::pow(static_cast<double>(an.visits), params_.alpha_obs);
  if (static_cast<double>(an.branches.size()) <= obs_bound) {
    if (auto found = tree_.find_branch(ha, g.observation)) {
      hao = *found;
    } else {
      hao = tree_.add_branch(ha, g.observation);
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
    b.states.push_back(g.next_state);
    b.rewards.push_back(g.reward);
    b.weights.push_back(model_.obs_density(b.observation, s, a, g.next_state));
  }

  double total = 0.0;
  if (new_node) {
    total = g.reward;
    if (!g.terminal) {
      total += gamma * rollout(g.next_state, d - 1, params_.max_depth - d + 1, rng);
    }
  } else {
    const ObservationBranch& b = tree_.branch(hao);
    const std::size_t i = WeightedSampler(b.weights).sample(rng);
    const Vector s_next = b.states[i];
    const std::size_t child = b.history;
    total = b.rewards[i];
    if (!model_.is_terminal(s_next)) {
      total += gamma * simulate(s_next, child, d - 1, rng);
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
