#include "rbpomdp/planners/expected_generative.hpp"

#include <algorithm>
#include <stdexcept>

namespace rbpomdp::planners {

Vector node_mean_state(const NodeBelief& p, const RBFactoredModel& model) {
  return model.compose(p.s_pi, p.theta.mean);
}

bool node_is_terminal(const NodeBelief& p, const RBFactoredModel& model) {
  return model.is_terminal(node_mean_state(p, model));
}

ExpectedStep expected_generative(const NodeBelief& p, const Vector& a,
                                 const RBFactoredModel& model,
                                 const quad::MultiRule& rule, Rng& rng) {
  if (rule.dim() != model.alpha_dim() || p.theta.dim() != model.alpha_dim()) {
    throw std::invalid_argument("expected_generative: dimension mismatch");
  }
  ExpectedStep out;
  out.s_pi_next = model.sample_pi_transition(p.s_pi, a, rng);

  const Matrix nodes = quad::transformed_nodes(p.theta, rule);
  Vector alpha_next = Vector::Zero(model.alpha_dim());
  for (Eigen::Index k = 0; k < nodes.cols(); ++k) {
    const double w = rule.weights[static_cast<std::size_t>(k)];
    const Vector image =
        model.tractable_mean_step(nodes.col(k), p.s_pi, out.s_pi_next, a);
    alpha_next += w * image;
    out.reward += w * model.step_reward(model.compose(p.s_pi, nodes.col(k)), a,
                                        model.compose(out.s_pi_next, image));
  }
  out.next_state = model.compose(out.s_pi_next, alpha_next);
  out.observation = model.observation_mean(alpha_next, out.s_pi_next);
  out.terminal = model.is_terminal(out.next_state);
  return out;
}

NodeBelief analytical_update(const NodeBelief& p, const Vector& s_next,
                             const Vector& o, const Vector& a,
                             const RBFactoredModel& model,
                             const filters::UkfParams& ukf) {
  NodeBelief next;
  next.s_pi = model.pi_part(s_next);
  next.theta = filters::ukf_analytical_update(p.theta, p.s_pi, next.s_pi, o, a,
                                              model, ukf)
                   .posterior;
  return next;
}

WeightedSampler::WeightedSampler(std::span<const double> weights) {
  cumulative_.reserve(weights.size());
  double total = 0.0;
  for (double w : weights) {
    total += std::max(w, 0.0);
    cumulative_.push_back(total);
  }
  if (!(total > 0.0)) {
    // Uniform fallback when every weight is zero.
    for (std::size_t i = 0; i < cumulative_.size(); ++i) {
      cumulative_[i] = static_cast<double>(i + 1);
    }
  }
}

std::size_t WeightedSampler::sample(Rng& rng) const {
  const double u = rng.uniform() * cumulative_.back();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  return std::min(static_cast<std::size_t>(it - cumulative_.begin()),
                  cumulative_.size() - 1);
}

}  // namespace rbpomdp::planners
