#include "rbpomdp/localization/localization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace rbpomdp::localization {
namespace {

constexpr double kPi = std::numbers::pi;

// log N(r; 0, var); a zero variance makes the density a point mass.
double gaussian_log_density(double r, double var) {
  if (var <= 0.0) {
    return r == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  }
  return -0.5 * (std::log(2.0 * kPi * var) + r * r / var);
}

double noise(double var, Rng& rng) {
  return var > 0.0 ? std::sqrt(var) * rng.normal() : 0.0;
}

Vector clamp_to_box(Vector s, const WorldConfig& cfg) {
  s[kXi] = std::clamp(s[kXi], cfg.x_min, cfg.x_max);
  s[kEta] = std::clamp(s[kEta], cfg.y_min, cfg.y_max);
  return s;
}

}  // namespace

double wrap_angle(double angle) {
  if (angle > -kPi && angle <= kPi) return angle;
  double a = std::remainder(angle, 2.0 * kPi);  // [-pi, pi]
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

void LandmarkMap::validate() const {
  if (landmarks.empty()) throw std::invalid_argument("no landmarks");
  for (std::size_t i = 0; i < landmarks.size(); ++i) {
    for (std::size_t j = i + 1; j < landmarks.size(); ++j) {
      if (landmarks[i] == landmarks[j]) {
        throw std::invalid_argument("duplicate landmark");
      }
    }
  }
}

void WorldConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (!(goal_radius > 0.0)) {
    throw std::invalid_argument("goal radius must be positive");
  }
  if (!(x_max > x_min && y_max > y_min)) {
    throw std::invalid_argument("empty world box");
  }
  if (!(discount > 0.0 && discount < 1.0)) {
    throw std::invalid_argument("discount must lie in (0,1)");
  }
  if (range_var < 0.0 || bearing_var < 0.0) {
    throw std::invalid_argument("negative observation noise variance");
  }
  if (actuation_cov(0, 1) != 0.0 || actuation_cov(1, 0) != 0.0 ||
      actuation_cov(0, 0) < 0.0 || actuation_cov(1, 1) < 0.0) {
    throw std::invalid_argument("actuation covariance must be diagonal PSD");
  }
  auto check_psd = [](const Matrix& m, Eigen::Index n, const char* name) {
    if (m.rows() != n || m.cols() != n) {
      throw std::invalid_argument(std::string(name) + " has wrong shape");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (m + m.transpose()));
    if (eig.eigenvalues().minCoeff() < -1e-12) {
      throw std::invalid_argument(std::string(name) + " is not PSD");
    }
  };
  check_psd(state_weights, 3, "state weight matrix");
  check_psd(action_weights, 2, "action weight matrix");
  if (speeds.empty() || turn_rates.empty()) {
    throw std::invalid_argument("empty action set");
  }
  if (max_steps <= 0) throw std::invalid_argument("max_steps must be > 0");
  if (initial_position_std < 0.0) {
    throw std::invalid_argument("negative initial position std");
  }
}

LandmarkMap default_landmarks() {
  return {{{-10.0, 0.0}, {0.0, 10.0}, {10.0, -10.0}}};
}

Vector transition(const Vector& s, const Vector& a, const WorldConfig& cfg,
                  Rng& rng) {
  const double w_turn =
      cfg.actuation_mean[1] + noise(cfg.actuation_cov(1, 1), rng);
  const double w_speed =
      cfg.actuation_mean[0] + noise(cfg.actuation_cov(0, 0), rng);
  const double heading = s[kTheta];
  const double step = a[0] * w_speed * cfg.dt;
  Vector next(3);
  next[kXi] = s[kXi] + step * std::cos(heading);
  next[kEta] = s[kEta] + step * std::sin(heading);
  next[kTheta] = wrap_angle(heading + a[1] * w_turn * cfg.dt);
  return clamp_to_box(std::move(next), cfg);
}

namespace {

Vector range_bearing(double x, double y, double theta, const LandmarkMap& map) {
  const auto j = static_cast<Eigen::Index>(map.landmarks.size());
  Vector z(2 * j);
  for (Eigen::Index k = 0; k < j; ++k) {
    const double dx = map.landmarks[k].x() - x;
    const double dy = map.landmarks[k].y() - y;
    if (dx == 0.0 && dy == 0.0) {
      throw std::domain_error("agent coincides with a landmark");
    }
    z[2 * k] = std::sqrt(dx * dx + dy * dy);
    z[2 * k + 1] = wrap_angle(std::atan2(dy, dx) - theta);
  }
  return z;
}

}  // namespace

Vector observe_noise_free(const Vector& s, const LandmarkMap& map) {
  return range_bearing(s[kXi], s[kEta], s[kTheta], map);
}

Vector observe(const Vector& s, const LandmarkMap& map, const WorldConfig& cfg,
               Rng& rng) {
  Vector z = observe_noise_free(s, map);
  for (Eigen::Index k = 0; k < z.size(); k += 2) {
    z[k] += noise(cfg.range_var, rng);
    z[k + 1] = wrap_angle(z[k + 1] + noise(cfg.bearing_var, rng));
  }
  return z;
}

double reward(const Vector& s, const Vector& a, const WorldConfig& cfg) {
  double r = -(s.dot(cfg.state_weights * s) + a.dot(cfg.action_weights * a));
  const Eigen::Vector2d pos(s[kXi], s[kEta]);
  if (pos.norm() <= cfg.goal_radius) r += cfg.terminal_reward;
  if ((pos - cfg.obstacle_center).norm() <= cfg.obstacle_radius) {
    r -= cfg.obstacle_penalty;
  }
  return r;
}

LocalizationModel::LocalizationModel(WorldConfig cfg, LandmarkMap map)
    : cfg_(std::move(cfg)), map_(std::move(map)) {
  cfg_.validate();
  map_.validate();
  space_.lower = Eigen::Vector3d(cfg_.x_min, cfg_.y_min, -kPi);
  space_.upper = Eigen::Vector3d(cfg_.x_max, cfg_.y_max, kPi);
  for (double v : cfg_.speeds) {
    for (double w : cfg_.turn_rates) actions_.push_back(Eigen::Vector2d(v, w));
  }
}

Vector LocalizationModel::sample_transition(const Vector& s, const Vector& a,
                                            Rng& rng) const {
  return transition(s, a, cfg_, rng);
}

Vector LocalizationModel::sample_observation(const Vector& s_next,
                                             const Vector& /*a*/,
                                             Rng& rng) const {
  return observe(s_next, map_, cfg_, rng);
}

double LocalizationModel::obs_log_density(const Vector& o, const Vector& /*s*/,
                                          const Vector& /*a*/,
                                          const Vector& s_next) const {
  const Vector r = observation_residual(o, noise_free_observation(s_next));
  double total = 0.0;
  for (Eigen::Index k = 0; k < r.size(); k += 2) {
    total += gaussian_log_density(r[k], cfg_.range_var);
    total += gaussian_log_density(r[k + 1], cfg_.bearing_var);
  }
  return total;
}

double LocalizationModel::obs_density(const Vector& o, const Vector& s,
                                      const Vector& a,
                                      const Vector& s_next) const {
  return std::exp(obs_log_density(o, s, a, s_next));
}

double LocalizationModel::reward(const Vector& s, const Vector& a) const {
  return localization::reward(s, a, cfg_);
}

Vector LocalizationModel::noise_free_observation(const Vector& s_next) const {
  return observe_noise_free(s_next, map_);
}

Matrix LocalizationModel::observation_noise_cov(const Vector& s_next) const {
  return observation_cov(pi_part(s_next));
}

void LocalizationModel::normalize_residual(Eigen::Ref<Vector> r) const {
  for (Eigen::Index k = 1; k < r.size(); k += 2) r[k] = wrap_angle(r[k]);
}

bool LocalizationModel::is_terminal(const Vector& s) const {
  return std::hypot(s[kXi], s[kEta]) <= cfg_.goal_radius;
}

bool LocalizationModel::in_obstacle(const Vector& s) const {
  return (Eigen::Vector2d(s[kXi], s[kEta]) - cfg_.obstacle_center).norm() <=
         cfg_.obstacle_radius;
}

Vector LocalizationModel::canonicalize(const Vector& s) const {
  Vector out = clamp_to_box(s, cfg_);
  out[kTheta] = wrap_angle(out[kTheta]);
  return out;
}

std::optional<std::size_t> LocalizationModel::heuristic_action(
    const Vector& s) const {
  // Hold each action for two noise-free steps; the heading only moves the
  // position from the second step on.
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < actions_.size(); ++i) {
    const Vector& a = actions_[i];
    double x = s[kXi], y = s[kEta], th = s[kTheta];
    for (int k = 0; k < 2; ++k) {
      x += a[0] * cfg_.actuation_mean[0] * cfg_.dt * std::cos(th);
      y += a[0] * cfg_.actuation_mean[0] * cfg_.dt * std::sin(th);
      th += a[1] * cfg_.actuation_mean[1] * cfg_.dt;
    }
    const double d = std::hypot(x, y);
    if (d < best_dist) {
      best_dist = d;
      best = i;
    }
  }
  return best;
}

Vector LocalizationModel::sample_pi_transition(const Vector& s_pi,
                                               const Vector& a,
                                               Rng& rng) const {
  const double w_turn =
      cfg_.actuation_mean[1] + noise(cfg_.actuation_cov(1, 1), rng);
  Vector out(1);
  out[0] = wrap_angle(s_pi[0] + a[1] * w_turn * cfg_.dt);
  return out;
}

Vector LocalizationModel::tractable_mean_step(const Vector& s_alpha,
                                              const Vector& s_pi,
                                              const Vector& /*s_pi_next*/,
                                              const Vector& a) const {
  const double step = a[0] * cfg_.actuation_mean[0] * cfg_.dt;
  Vector out(2);
  out[0] = s_alpha[0] + step * std::cos(s_pi[0]);
  out[1] = s_alpha[1] + step * std::sin(s_pi[0]);
  return out;
}

Matrix LocalizationModel::tractable_process_cov(const Vector& s_pi,
                                                const Vector& /*s_pi_next*/,
                                                const Vector& a) const {
  const Eigen::Vector2d dir(std::cos(s_pi[0]), std::sin(s_pi[0]));
  const double scale = a[0] * cfg_.dt;
  return (scale * scale * cfg_.actuation_cov(0, 0)) * dir * dir.transpose();
}

Vector LocalizationModel::observation_mean(const Vector& s_alpha,
                                           const Vector& s_pi) const {
  return range_bearing(s_alpha[0], s_alpha[1], s_pi[0], map_);
}

Matrix LocalizationModel::observation_cov(const Vector& /*s_pi*/) const {
  const Eigen::Index m = observation_dim();
  Matrix r = Matrix::Zero(m, m);
  for (Eigen::Index k = 0; k < m; k += 2) {
    r(k, k) = cfg_.range_var;
    r(k + 1, k + 1) = cfg_.bearing_var;
  }
  return r;
}

filters::RBBelief LocalizationModel::initial_rb_belief(std::size_t n, Rng& rng,
                                                       double threshold) const {
  filters::RBBelief b;
  b.resample_threshold = threshold;
  b.particles.resize(n);
  const double var = cfg_.initial_position_std * cfg_.initial_position_std;
  for (auto& p : b.particles) {
    p.s_pi = Vector::Constant(1, wrap_angle(kPi * (2.0 * rng.uniform() - 1.0)));
    p.theta.mean = cfg_.start.head<2>();
    p.theta.cov = var * Matrix::Identity(2, 2);
    p.weight = 1.0 / static_cast<double>(n);
  }
  return b;
}

filters::SirBelief LocalizationModel::initial_sir_belief(
    std::size_t n, Rng& rng, const Vector& bandwidth, double threshold) const {
  filters::SirBelief b;
  b.resample_threshold = threshold;
  b.bandwidth = bandwidth;
  b.states.resize(3, static_cast<Eigen::Index>(n));
  for (Eigen::Index c = 0; c < b.states.cols(); ++c) {
    Vector s(3);
    s[kXi] = cfg_.start[0] + cfg_.initial_position_std * rng.normal();
    s[kEta] = cfg_.start[1] + cfg_.initial_position_std * rng.normal();
    s[kTheta] = wrap_angle(kPi * (2.0 * rng.uniform() - 1.0));
    b.states.col(c) = clamp_to_box(std::move(s), cfg_);
  }
  b.weights.assign(n, 1.0 / static_cast<double>(n));
  return b;
}

LocalizationModel rb_factorization(const WorldConfig& cfg,
                                   const LandmarkMap& map) {
  return LocalizationModel(cfg, map);
}

}  // namespace rbpomdp::localization
