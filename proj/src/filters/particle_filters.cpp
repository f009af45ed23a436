#include "rbpomdp/filters/particle_filters.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rbpomdp::filters {
namespace {

// Gaussian-matched predictive observation moments; returns the NIS of o.
double predictive_nis(const PomdpModel& model, const Vector& o,
                      std::span<const Vector> means,
                      std::span<const Matrix> covs,
                      std::span<const double> weights) {
  const Vector& ref = means[0];
  Vector z_mean = ref;
  for (std::size_t i = 0; i < means.size(); ++i) {
    z_mean += weights[i] * model.observation_residual(means[i], ref);
  }
  Matrix s = Matrix::Zero(o.size(), o.size());
  for (std::size_t i = 0; i < means.size(); ++i) {
    const Vector r = model.observation_residual(means[i], z_mean);
    s += weights[i] * (covs.size() == 1 ? covs[0] : covs[i]);
    s += weights[i] * r * r.transpose();
  }
  const Vector nu = model.observation_residual(o, z_mean);
  const Eigen::LDLT<Matrix> ldlt(s);
  return nu.dot(ldlt.solve(nu));
}

}  // namespace

std::vector<double> RBBelief::weights() const {
  std::vector<double> w;
  w.reserve(particles.size());
  for (const auto& p : particles) w.push_back(p.weight);
  return w;
}

double ess(std::span<const double> weights) {
  double sq = 0.0;
  for (double w : weights) sq += w * w;
  if (!(sq > 0.0)) throw DegenerateBeliefError("ess: all weights are zero");
  return 1.0 / sq;
}

std::vector<double> normalize_log_weights(std::span<const double> log_weights) {
  double top = -std::numeric_limits<double>::infinity();
  for (double lw : log_weights) {
    if (lw > top) top = lw;
  }
  if (!std::isfinite(top)) {
    throw DegenerateBeliefError("all particle log-weights are -inf");
  }
  std::vector<double> w(log_weights.size());
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::isnan(log_weights[i]) ? 0.0 : std::exp(log_weights[i] - top);
    total += w[i];
  }
  for (double& x : w) x /= total;
  return w;
}

std::vector<std::size_t> systematic_indices(std::span<const double> weights,
                                            Rng& rng) {
  const std::size_t n = weights.size();
  std::vector<std::size_t> out(n);
  const double step = 1.0 / static_cast<double>(n);
  double u = rng.uniform() * step;
  double cumulative = weights.empty() ? 0.0 : weights[0];
  std::size_t j = 0;
  for (std::size_t k = 0; k < n; ++k) {
    while (u > cumulative && j + 1 < n) cumulative += weights[++j];
    out[k] = j;
    u += step;
  }
  return out;
}

RBBelief systematic_resample(const RBBelief& belief, Rng& rng) {
  const auto idx = systematic_indices(belief.weights(), rng);
  RBBelief out;
  out.resample_threshold = belief.resample_threshold;
  out.diagnostics = belief.diagnostics;
  out.particles.reserve(idx.size());
  const double w = 1.0 / static_cast<double>(idx.size());
  for (std::size_t i : idx) {
    out.particles.push_back(belief.particles[i]);
    out.particles.back().weight = w;
  }
  return out;
}

SirBelief systematic_resample(const SirBelief& belief, Rng& rng) {
  const auto idx = systematic_indices(belief.weights, rng);
  SirBelief out;
  out.resample_threshold = belief.resample_threshold;
  out.bandwidth = belief.bandwidth;
  out.diagnostics = belief.diagnostics;
  out.states.resize(belief.states.rows(), belief.states.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    out.states.col(static_cast<Eigen::Index>(k)) =
        belief.states.col(static_cast<Eigen::Index>(idx[k]));
  }
  out.weights.assign(idx.size(), 1.0 / static_cast<double>(idx.size()));
  return out;
}

RBBelief rbpf_update(const RBBelief& belief, const Vector& a, const Vector& o,
                     const RBFactoredModel& model, Rng& rng,
                     const UkfParams& ukf, bool compute_nis) {
  const std::size_t n = belief.size();
  RBBelief next;
  next.resample_threshold = belief.resample_threshold;
  next.particles.resize(n);

  std::vector<double> log_w(n);
  std::vector<Vector> z_means;
  std::vector<Matrix> z_covs;
  if (compute_nis) {
    z_means.reserve(n);
    z_covs.reserve(n);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const RBParticle& p = belief.particles[i];
    RBParticle& q = next.particles[i];
    q.s_pi = model.sample_pi_transition(p.s_pi, a, rng);
    UkfResult r = ukf_analytical_update(p.theta, p.s_pi, q.s_pi, o, a, model, ukf);
    q.theta = std::move(r.posterior);
    log_w[i] = (p.weight > 0.0 ? std::log(p.weight)
                               : -std::numeric_limits<double>::infinity()) +
               r.loglik;
    if (compute_nis) {
      z_means.push_back(std::move(r.predicted_observation));
      z_covs.push_back(std::move(r.innovation_cov));
    }
  }
  if (compute_nis) {
    const auto prior_w = belief.weights();
    next.diagnostics.nis = predictive_nis(model, o, z_means, z_covs, prior_w);
    next.diagnostics.nis_dof = static_cast<int>(o.size());
  }

  const auto w = normalize_log_weights(log_w);
  for (std::size_t i = 0; i < n; ++i) next.particles[i].weight = w[i];
  next.diagnostics.ess_normalized = ess(w) / static_cast<double>(n);
  if (next.diagnostics.ess_normalized < next.resample_threshold) {
    next = systematic_resample(next, rng);
    next.diagnostics.resampled = true;
  }
  return next;
}

SirBelief sirpf_update(const SirBelief& belief, const Vector& a,
                       const Vector& o, const PomdpModel& model, Rng& rng,
                       bool compute_nis) {
  const std::size_t n = belief.size();
  SirBelief next;
  next.resample_threshold = belief.resample_threshold;
  next.bandwidth = belief.bandwidth;
  next.states.resize(belief.states.rows(), belief.states.cols());

  std::vector<double> log_w(n);
  Vector s(belief.states.rows());
  for (std::size_t i = 0; i < n; ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    s = belief.states.col(col);
    const Vector s_next = model.sample_transition(s, a, rng);
    log_w[i] = (belief.weights[i] > 0.0
                    ? std::log(belief.weights[i])
                    : -std::numeric_limits<double>::infinity()) +
               model.obs_log_density(o, s, a, s_next);
    next.states.col(col) = s_next;
  }
  if (compute_nis) {
    std::vector<Vector> z(n);
    for (std::size_t i = 0; i < n; ++i) {
      z[i] = model.noise_free_observation(
          next.states.col(static_cast<Eigen::Index>(i)));
    }
    // Additive noise covariance taken at the first particle.
    const Matrix r = model.observation_noise_cov(next.states.col(0));
    next.diagnostics.nis = predictive_nis(model, o, z, std::span(&r, 1),
                                          belief.weights);
    next.diagnostics.nis_dof = static_cast<int>(o.size());
  }

  next.weights = normalize_log_weights(log_w);
  next.diagnostics.ess_normalized =
      ess(next.weights) / static_cast<double>(n);
  if (next.diagnostics.ess_normalized < next.resample_threshold) {
    const UpdateDiagnostics diag = next.diagnostics;
    next = systematic_resample(next, rng);
    next.diagnostics = diag;
    next.diagnostics.resampled = true;
    const bool jitter =
        next.bandwidth.size() > 0 && next.bandwidth.cwiseAbs().maxCoeff() > 0.0;
    if (jitter) {
      for (Eigen::Index c = 0; c < next.states.cols(); ++c) {
        s = next.states.col(c);
        for (Eigen::Index d = 0; d < s.size(); ++d) {
          s[d] += next.bandwidth[d] * rng.normal();
        }
        next.states.col(c) = model.canonicalize(s);
      }
    }
  }
  return next;
}

quad::GaussianStat tractable_moments(const RBBelief& belief) {
  const Eigen::Index d = belief.particles.front().theta.dim();
  quad::GaussianStat g{Vector::Zero(d), Matrix::Zero(d, d)};
  for (const auto& p : belief.particles) g.mean += p.weight * p.theta.mean;
  for (const auto& p : belief.particles) {
    const Vector e = p.theta.mean - g.mean;
    g.cov += p.weight * (p.theta.cov + e * e.transpose());
  }
  g.cov = (0.5 * (g.cov + g.cov.transpose())).eval();
  return g;
}

quad::GaussianStat state_moments(const SirBelief& belief,
                                 std::span<const Eigen::Index> components) {
  const auto d = static_cast<Eigen::Index>(components.size());
  quad::GaussianStat g{Vector::Zero(d), Matrix::Zero(d, d)};
  Vector x(d);
  for (Eigen::Index c = 0; c < belief.states.cols(); ++c) {
    for (Eigen::Index k = 0; k < d; ++k) x[k] = belief.states(components[k], c);
    g.mean += belief.weights[c] * x;
  }
  for (Eigen::Index c = 0; c < belief.states.cols(); ++c) {
    for (Eigen::Index k = 0; k < d; ++k) x[k] = belief.states(components[k], c);
    const Vector e = x - g.mean;
    g.cov += belief.weights[c] * e * e.transpose();
  }
  return g;
}

}  // namespace rbpomdp::filters
