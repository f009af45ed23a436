#pragma once

#include "rbpomdp/core/model.hpp"
#include "rbpomdp/filters/particle_filters.hpp"
#include "rbpomdp/filters/ukf.hpp"
#include "rbpomdp/quadrature/quadrature.hpp"

namespace rbpomdp::planners {

/// One Rao-Blackwellized particle carried down the search tree.
struct NodeBelief {
  Vector s_pi;
  quad::GaussianStat theta;
};

/// Expected generative draw E[G(p, a)].
struct ExpectedStep {
  Vector s_pi_next;
  Vector next_state;   // (s_pi', quadrature mean of the tractable dynamics)
  Vector observation;  // noise-free observation at next_state
  double reward = 0.0; // quadrature estimate of the expected step reward
  bool terminal = false;
};

/// Full state at the node's tractable mean, (s_pi, E[s_alpha]).
Vector node_mean_state(const NodeBelief& p, const RBFactoredModel& model);
bool node_is_terminal(const NodeBelief& p, const RBFactoredModel& model);

/// Samples one s_pi transition and integrates everything else over theta
/// with `rule`: the tractable next-state mean and the step reward
/// model.step_reward(s_k, a, s_k') at each node s_k and its noise-free image
/// s_k'. Process and measurement noise enter only through theta's
/// covariance. Throws std::invalid_argument if rule.dim() != d_alpha.
ExpectedStep expected_generative(const NodeBelief& p, const Vector& a,
                                 const RBFactoredModel& model,
                                 const quad::MultiRule& rule, Rng& rng);

/// p' = (s_pi of s_next, UKF posterior of theta given (o, a)).
NodeBelief analytical_update(const NodeBelief& p, const Vector& s_next,
                             const Vector& o, const Vector& a,
                             const RBFactoredModel& model,
                             const filters::UkfParams& ukf);

/// Draws particle indices proportionally to weight.
class WeightedSampler {
 public:
  explicit WeightedSampler(std::span<const double> weights);
  std::size_t sample(Rng& rng) const;

 private:
  std::vector<double> cumulative_;
};

}  // namespace rbpomdp::planners
