#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "rbpomdp/core/rng.hpp"
#include "rbpomdp/core/types.hpp"

namespace rbpomdp {

/// Box-bounded flat state space.
struct StateSpace {
  Vector lower;
  Vector upper;

  Eigen::Index dim() const { return lower.size(); }
  bool contains(const Vector& s) const;
};

/// Result of one generative draw (s', o, r) ~ G(s, a).
struct GenOutput {
  Vector next_state;
  Vector observation;
  double reward = 0.0;
  bool terminal = false;
};

/// POMDP contract (S, A, T, O, R, Z, gamma).
///
/// Reward convention: reward(s, a) is charged on the outgoing state-action
/// pair. generative_step() adds terminal_reward() when s' enters the terminal
/// set; a terminal input state is absorbing and yields terminal_reward().
///
/// Implementations are immutable after construction and shareable across
/// threads. All randomness flows through the Rng argument.
class PomdpModel {
 public:
  virtual ~PomdpModel() = default;

  virtual const StateSpace& state_space() const = 0;
  virtual Eigen::Index observation_dim() const = 0;
  virtual const std::vector<Vector>& actions() const = 0;
  virtual double discount() const = 0;

  virtual Vector sample_transition(const Vector& s, const Vector& a,
                                   Rng& rng) const = 0;
  virtual Vector sample_observation(const Vector& s_next, const Vector& a,
                                    Rng& rng) const = 0;
  /// Z(o | s, a, s'). Never negative; 0 for inconsistent observations.
  virtual double obs_density(const Vector& o, const Vector& s, const Vector& a,
                             const Vector& s_next) const = 0;
  virtual double obs_log_density(const Vector& o, const Vector& s,
                                 const Vector& a, const Vector& s_next) const;
  virtual double reward(const Vector& s, const Vector& a) const = 0;

  /// Noise-free observation h(s') and the additive observation noise
  /// covariance at s'.
  virtual Vector noise_free_observation(const Vector& s_next) const = 0;
  virtual Matrix observation_noise_cov(const Vector& s_next) const = 0;
  /// o - z, with any angular components wrapped by normalize_residual().
  Vector observation_residual(const Vector& o, const Vector& z) const {
    Vector r = o - z;
    normalize_residual(r);
    return r;
  }
  /// Wraps angular components of an observation difference in place.
  virtual void normalize_residual(Eigen::Ref<Vector> /*r*/) const {}

  virtual bool is_terminal(const Vector& /*s*/) const { return false; }
  virtual double terminal_reward() const { return 0.0; }

  /// Maps a perturbed state back onto the state manifold (angle wrapping,
  /// box clamping). Identity by default.
  virtual Vector canonicalize(const Vector& s) const { return s; }

  /// Domain-specific rollout heuristic; nullopt means "no heuristic".
  virtual std::optional<std::size_t> heuristic_action(
      const Vector& /*s*/) const {
    return std::nullopt;
  }

  std::size_t num_actions() const { return actions().size(); }

  /// Reward of the transition s -> s' under the convention above.
  double step_reward(const Vector& s, const Vector& a,
                     const Vector& s_next) const;

  /// Samples (s', o, r). Throws std::domain_error for out-of-bounds s.
  GenOutput generative_step(const Vector& s, const Vector& a, Rng& rng) const;

  /// Throws std::invalid_argument unless gamma is in (0,1) and the action
  /// set is non-empty.
  void validate() const;
};

/// Rao-Blackwell factored model: the state splits into a non-tractable block
/// s_pi (particle-sampled) and a tractable block s_alpha whose conditional
/// dynamics and observation model are Gaussian given the s_pi path:
///
///   s_alpha' = f(s_alpha; s_pi, s_pi', a) + w,   w ~ N(0, Q(s_pi, s_pi', a))
///   o        = h(s_alpha'; s_pi') + v,           v ~ N(0, R(s_pi'))
///
/// f receives both the previous and the new s_pi so models can evaluate the
/// non-tractable block at either end of the step.
class RBFactoredModel : public PomdpModel {
 public:
  virtual const std::vector<Eigen::Index>& pi_indices() const = 0;
  virtual const std::vector<Eigen::Index>& alpha_indices() const = 0;

  Eigen::Index pi_dim() const {
    return static_cast<Eigen::Index>(pi_indices().size());
  }
  Eigen::Index alpha_dim() const {
    return static_cast<Eigen::Index>(alpha_indices().size());
  }

  Vector pi_part(const Vector& s) const;
  Vector alpha_part(const Vector& s) const;
  Vector compose(const Vector& s_pi, const Vector& s_alpha) const;

  virtual Vector sample_pi_transition(const Vector& s_pi, const Vector& a,
                                      Rng& rng) const = 0;
  virtual Vector tractable_mean_step(const Vector& s_alpha, const Vector& s_pi,
                                     const Vector& s_pi_next,
                                     const Vector& a) const = 0;
  virtual Matrix tractable_process_cov(const Vector& s_pi,
                                       const Vector& s_pi_next,
                                       const Vector& a) const = 0;
  virtual Vector observation_mean(const Vector& s_alpha,
                                  const Vector& s_pi) const = 0;
  virtual Matrix observation_cov(const Vector& s_pi) const = 0;

  /// One draw of the joint transition assembled from the factored pieces.
  Vector sample_factored_transition(const Vector& s, const Vector& a,
                                    Rng& rng) const;
};

}  // namespace rbpomdp
