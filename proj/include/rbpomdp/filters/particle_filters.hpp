#pragma once

#include <span>
#include <vector>

#include "rbpomdp/core/model.hpp"
#include "rbpomdp/filters/ukf.hpp"
#include "rbpomdp/quadrature/quadrature.hpp"

namespace rbpomdp::filters {

/// What happened during the last belief update.
struct UpdateDiagnostics {
  double ess_normalized = 1.0;  // N_ess / N before any resampling
  bool resampled = false;
  double nis = 0.0;             // normalized innovation squared of the
  int nis_dof = 0;              // Gaussian-matched predictive distribution
};

struct RBParticle {
  Vector s_pi;
  quad::GaussianStat theta;
  double weight = 0.0;
};

/// Rao-Blackwellized belief. Weights sum to one.
struct RBBelief {
  std::vector<RBParticle> particles;
  double resample_threshold = 0.5;
  UpdateDiagnostics diagnostics;

  std::size_t size() const { return particles.size(); }
  std::vector<double> weights() const;
};

/// Bootstrap belief. states is d x N (one column per particle).
struct SirBelief {
  Matrix states;
  std::vector<double> weights;
  double resample_threshold = 0.5;
  Vector bandwidth;  // regularization std per state dimension
  UpdateDiagnostics diagnostics;

  std::size_t size() const { return weights.size(); }
};

/// 1 / sum w_i^2. Throws DegenerateBeliefError if all weights are zero.
double ess(std::span<const double> weights);

/// Normalizes log-weights in place into probabilities via max-subtraction.
/// Throws DegenerateBeliefError if every log-weight is -inf (or NaN).
std::vector<double> normalize_log_weights(std::span<const double> log_weights);

/// Low-variance resampling: returns the N ancestor indices.
std::vector<std::size_t> systematic_indices(std::span<const double> weights,
                                            Rng& rng);

RBBelief systematic_resample(const RBBelief& belief, Rng& rng);
SirBelief systematic_resample(const SirBelief& belief, Rng& rng);

/// One RBPF step: propagate s_pi, UKF-update each particle's Gaussian, weight
/// by the innovation likelihood, normalize, resample when ess/N < tau.
/// With compute_nis the diagnostics also carry the NIS of the
/// moment-matched predictive observation distribution.
RBBelief rbpf_update(const RBBelief& belief, const Vector& a, const Vector& o,
                     const RBFactoredModel& model, Rng& rng,
                     const UkfParams& ukf = {}, bool compute_nis = false);

/// One bootstrap step. Resampled particles get Gaussian jitter with the
/// belief's bandwidth, then model.canonicalize().
SirBelief sirpf_update(const SirBelief& belief, const Vector& a,
                       const Vector& o, const PomdpModel& model, Rng& rng,
                       bool compute_nis = false);

/// Weighted moments of the tractable block (mixture of the particles'
/// Gaussians).
quad::GaussianStat tractable_moments(const RBBelief& belief);
/// Weighted moments over selected state components of a bootstrap belief.
quad::GaussianStat state_moments(const SirBelief& belief,
                                 std::span<const Eigen::Index> components);

}  // namespace rbpomdp::filters
