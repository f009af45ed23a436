#pragma once

#include <vector>

#include "rbpomdp/core/model.hpp"
#include "rbpomdp/filters/particle_filters.hpp"

namespace rbpomdp::localization {

// State layout (xi, eta, theta).
inline constexpr Eigen::Index kXi = 0;
inline constexpr Eigen::Index kEta = 1;
inline constexpr Eigen::Index kTheta = 2;

/// Wraps an angle into (-pi, pi].
double wrap_angle(double angle);

struct LandmarkMap {
  std::vector<Eigen::Vector2d> landmarks;

  void validate() const;
};

/// Scenario parameters. Defaults are the pinned benchmark scenario.
struct WorldConfig {
  double dt = 0.5;
  double x_min = -10.0, x_max = 10.0;
  double y_min = -10.0, y_max = 10.0;
  double goal_radius = 1.0;
  Eigen::Vector2d obstacle_center{-4.0, -4.0};
  double obstacle_radius = 1.5;
  double obstacle_penalty = 50.0;
  double terminal_reward = 100.0;
  Matrix state_weights = Eigen::Vector3d(0.1, 0.1, 0.0).asDiagonal();
  Matrix action_weights = Eigen::Vector2d(0.05, 0.05).asDiagonal();
  double range_var = 0.25;
  double bearing_var = 0.01;
  // Multiplicative actuation noise (w_speed, w_turn) ~ N(mean, cov); cov
  // must be diagonal.
  Eigen::Vector2d actuation_mean{1.0, 1.0};
  Eigen::Matrix2d actuation_cov = 0.1 * Eigen::Matrix2d::Identity();
  double discount = 0.95;
  std::vector<double> speeds{1.0, -0.5};
  std::vector<double> turn_rates{-0.5, 0.0, 0.5};
  Eigen::Vector3d start{-8.0, -8.0, 0.0};
  double initial_position_std = 1.0;
  int max_steps = 100;

  void validate() const;
};

LandmarkMap default_landmarks();

/// Euler step with the heading taken at the start of the step, then clamped
/// to the world box.
Vector transition(const Vector& s, const Vector& a, const WorldConfig& cfg,
                  Rng& rng);
/// Noisy (range, bearing) per landmark, concatenated. Throws
/// std::domain_error when the agent sits on a landmark.
Vector observe(const Vector& s, const LandmarkMap& map, const WorldConfig& cfg,
               Rng& rng);
Vector observe_noise_free(const Vector& s, const LandmarkMap& map);
/// -(s^T Psi s + a^T Phi a), plus the terminal reward inside the goal disc,
/// minus the obstacle penalty inside the obstacle disc.
double reward(const Vector& s, const Vector& a, const WorldConfig& cfg);

/// Range-bearing localization POMDP and its Rao-Blackwell split:
/// s_pi = (theta) is particle-filtered, s_alpha = (xi, eta) is Gaussian given
/// the heading path.
class LocalizationModel final : public RBFactoredModel {
 public:
  LocalizationModel(WorldConfig cfg, LandmarkMap map);

  const WorldConfig& config() const { return cfg_; }
  const LandmarkMap& map() const { return map_; }

  const StateSpace& state_space() const override { return space_; }
  Eigen::Index observation_dim() const override {
    return 2 * static_cast<Eigen::Index>(map_.landmarks.size());
  }
  const std::vector<Vector>& actions() const override { return actions_; }
  double discount() const override { return cfg_.discount; }

  Vector sample_transition(const Vector& s, const Vector& a,
                           Rng& rng) const override;
  Vector sample_observation(const Vector& s_next, const Vector& a,
                            Rng& rng) const override;
  double obs_density(const Vector& o, const Vector& s, const Vector& a,
                     const Vector& s_next) const override;
  double obs_log_density(const Vector& o, const Vector& s, const Vector& a,
                         const Vector& s_next) const override;
  double reward(const Vector& s, const Vector& a) const override;
  Vector noise_free_observation(const Vector& s_next) const override;
  Matrix observation_noise_cov(const Vector& s_next) const override;
  void normalize_residual(Eigen::Ref<Vector> r) const override;
  bool is_terminal(const Vector& s) const override;
  double terminal_reward() const override { return cfg_.terminal_reward; }
  Vector canonicalize(const Vector& s) const override;
  std::optional<std::size_t> heuristic_action(const Vector& s) const override;

  const std::vector<Eigen::Index>& pi_indices() const override { return pi_; }
  const std::vector<Eigen::Index>& alpha_indices() const override {
    return alpha_;
  }
  Vector sample_pi_transition(const Vector& s_pi, const Vector& a,
                              Rng& rng) const override;
  Vector tractable_mean_step(const Vector& s_alpha, const Vector& s_pi,
                             const Vector& s_pi_next,
                             const Vector& a) const override;
  Matrix tractable_process_cov(const Vector& s_pi, const Vector& s_pi_next,
                               const Vector& a) const override;
  Vector observation_mean(const Vector& s_alpha,
                          const Vector& s_pi) const override;
  Matrix observation_cov(const Vector& s_pi) const override;

  bool in_obstacle(const Vector& s) const;

  /// Initial beliefs: position ~ N(start, std^2 I), heading uniform.
  filters::RBBelief initial_rb_belief(std::size_t n, Rng& rng,
                                      double threshold = 0.5) const;
  filters::SirBelief initial_sir_belief(std::size_t n, Rng& rng,
                                        const Vector& bandwidth,
                                        double threshold = 0.5) const;

 private:
  WorldConfig cfg_;
  LandmarkMap map_;
  StateSpace space_;
  std::vector<Vector> actions_;
  std::vector<Eigen::Index> pi_{kTheta};
  std::vector<Eigen::Index> alpha_{kXi, kEta};
};

/// The factored model for a scenario.
LocalizationModel rb_factorization(const WorldConfig& cfg,
                                   const LandmarkMap& map);

}  // namespace rbpomdp::localization
