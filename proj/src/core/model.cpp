#include "rbpomdp/core/model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace rbpomdp {

bool StateSpace::contains(const Vector& s) const {
  if (s.size() != dim()) return false;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (!(s[i] >= lower[i] && s[i] <= upper[i])) return false;
  }
  return true;
}

double PomdpModel::obs_log_density(const Vector& o, const Vector& s,
                                   const Vector& a,
                                   const Vector& s_next) const {
  const double p = obs_density(o, s, a, s_next);
  return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
}

GenOutput PomdpModel::generative_step(const Vector& s, const Vector& a,
                                      Rng& rng) const {
  if (!state_space().contains(s)) {
    throw std::domain_error("generative_step: state outside state bounds");
  }
  GenOutput out;
  if (is_terminal(s)) {
    out.next_state = s;
    out.observation = sample_observation(s, a, rng);
    out.reward = terminal_reward();
    out.terminal = true;
    return out;
  }
  out.next_state = sample_transition(s, a, rng);
  out.observation = sample_observation(out.next_state, a, rng);
  out.terminal = is_terminal(out.next_state);
  out.reward = reward(s, a) + (out.terminal ? terminal_reward() : 0.0);
  return out;
}

double PomdpModel::step_reward(const Vector& s, const Vector& a,
                               const Vector& s_next) const {
  if (is_terminal(s)) return terminal_reward();
  return reward(s, a) + (is_terminal(s_next) ? terminal_reward() : 0.0);
}

void PomdpModel::validate() const {
  const double g = discount();
  if (!(g > 0.0 && g < 1.0)) {
    throw std::invalid_argument("discount must lie strictly in (0,1)");
  }
  if (actions().empty()) throw std::invalid_argument("empty action set");
}

Vector RBFactoredModel::pi_part(const Vector& s) const {
  const auto& idx = pi_indices();
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = s[idx[i]];
  return out;
}

Vector RBFactoredModel::alpha_part(const Vector& s) const {
  const auto& idx = alpha_indices();
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = s[idx[i]];
  return out;
}

Vector RBFactoredModel::compose(const Vector& s_pi,
                                const Vector& s_alpha) const {
  Vector s(pi_dim() + alpha_dim());
  const auto& pi = pi_indices();
  const auto& alpha = alpha_indices();
  for (std::size_t i = 0; i < pi.size(); ++i) s[pi[i]] = s_pi[i];
  for (std::size_t i = 0; i < alpha.size(); ++i) s[alpha[i]] = s_alpha[i];
  return s;
}

Vector RBFactoredModel::sample_factored_transition(const Vector& s,
                                                   const Vector& a,
                                                   Rng& rng) const {
  const Vector s_pi = pi_part(s);
  const Vector s_pi_next = sample_pi_transition(s_pi, a, rng);
  Vector alpha_next = tractable_mean_step(alpha_part(s), s_pi, s_pi_next, a);
  const Matrix q = tractable_process_cov(s_pi, s_pi_next, a);
  // Q may be rank deficient, so draw through an eigen factor.
  Eigen::SelfAdjointEigenSolver<Matrix> eig(q);
  const Vector z = rng.normal_vector(q.rows());
  alpha_next += eig.eigenvectors() *
                (eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * z);
  return compose(s_pi_next, alpha_next);
}

}  // namespace rbpomdp
