#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "rbpomdp/filters/consistency.hpp"
#include "rbpomdp/filters/particle_filters.hpp"
#include "rbpomdp/filters/ukf.hpp"
#include "support/models.hpp"

using namespace rbpomdp;
using rbpomdp::testing::ChainModel;
using rbpomdp::testing::kalman_step;
using rbpomdp::testing::LinearRbModel;

namespace {

quad::GaussianStat prior2() {
  Matrix cov(2, 2);
  cov << 1.0, 0.2, 0.2, 0.5;
  return quad::GaussianStat::make(Eigen::Vector2d(0.3, -0.4), cov);
}

filters::RBBelief rb_prior(std::size_t n, Rng& rng, double threshold) {
  filters::RBBelief b;
  b.resample_threshold = threshold;
  for (std::size_t i = 0; i < n; ++i) {
    filters::RBParticle p;
    p.s_pi = Vector::Constant(1, 0.7 * rng.normal());
    p.theta = quad::GaussianStat::make(Vector::Zero(2), Matrix::Identity(2, 2));
    p.weight = 1.0 / static_cast<double>(n);
    b.particles.push_back(p);
  }
  return b;
}

}  // namespace

TEST(Ukf, MatchesKalmanFilterOnLinearModel) {
  const LinearRbModel model;
  Rng rng(3);
  quad::GaussianStat theta = prior2();
  double z = 0.2;
  for (int k = 0; k < 30; ++k) {
    const double z_next = z + 0.3 * rng.normal();
    const Vector a = Vector::Constant(1, rng.normal());
    const Vector o = rng.normal_vector(2);
    const auto ukf = filters::ukf_analytical_update(theta, Vector::Constant(1, z),
                                                    Vector::Constant(1, z_next), o, a, model);
    const auto kf = kalman_step(model, theta, z, z_next, a, o);
    EXPECT_LT((ukf.posterior.mean - kf.posterior.mean).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((ukf.posterior.cov - kf.posterior.cov).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_NEAR(ukf.loglik, kf.loglik, 1e-8);
    EXPECT_LT((ukf.innovation_cov - kf.innovation_cov).cwiseAbs().maxCoeff(), 1e-8);
    theta = ukf.posterior;
    z = z_next;
  }
}

TEST(Ukf, ConjugateUpdate) {
  LinearRbModel::Params p;
  p.q = 0.0;
  p.r = 1.0;
  const LinearRbModel model(p);
  // cos(pi/2) = 0 gives F = I; sin(pi) = 0 gives H = I.
  const auto r = filters::ukf_analytical_update(
      quad::GaussianStat::make(Vector::Zero(2), Matrix::Identity(2, 2)),
      Vector::Constant(1, std::numbers::pi / 2), Vector::Constant(1, std::numbers::pi),
      Eigen::Vector2d(1.0, 1.0), Vector::Zero(1), model);
  EXPECT_LT((r.posterior.mean - Eigen::Vector2d(0.5, 0.5)).norm(), 1e-12);
  EXPECT_LT((r.posterior.cov - 0.5 * Matrix::Identity(2, 2)).norm(), 1e-12);
  EXPECT_LT((r.innovation_cov - 2.0 * Matrix::Identity(2, 2)).norm(), 1e-12);
}

TEST(Ukf, ZeroInnovationLoglik) {
  const LinearRbModel model;
  const auto theta = prior2();
  const Vector z = Vector::Constant(1, 0.1), z_next = Vector::Constant(1, 0.4);
  const Vector a = Vector::Constant(1, 1.0);
  const auto pred = filters::ukf_predict(theta, z, z_next, a, model);
  const Vector o = model.observation_mean(pred.mean, z_next);
  const auto r = filters::ukf_analytical_update(theta, z, z_next, o, a, model);
  EXPECT_LT(r.innovation.norm(), 1e-12);
  const double expected = -0.5 * (2.0 * std::log(2.0 * std::numbers::pi) +
                                  std::log(r.innovation_cov.determinant()));
  EXPECT_NEAR(r.loglik, expected, 1e-12);
}

TEST(Ukf, SingularInnovationRaises) {
  LinearRbModel::Params p;
  p.q = 0.0;
  p.r = 0.0;
  const LinearRbModel model(p);
  const auto theta = quad::GaussianStat::make(Vector::Zero(2), Matrix::Zero(2, 2));
  EXPECT_THROW(filters::ukf_analytical_update(theta, Vector::Zero(1), Vector::Zero(1),
                                              Vector::Ones(2), Vector::Zero(1), model),
               NumericalError);
}

TEST(Ess, KnownValues) {
  EXPECT_NEAR(filters::ess(std::vector<double>(100, 0.01)), 100.0, 1e-9);
  std::vector<double> one(10, 0.0);
  one[3] = 1.0;
  EXPECT_DOUBLE_EQ(filters::ess(one), 1.0);
  EXPECT_DOUBLE_EQ(filters::ess(std::vector<double>{0.5, 0.5, 0.0, 0.0}), 2.0);
  EXPECT_THROW(filters::ess(std::vector<double>{0.0, 0.0}), DegenerateBeliefError);
}

TEST(NormalizeLogWeights, SurvivesLargeMagnitudes) {
  const auto w = filters::normalize_log_weights(std::vector<double>{-1000.0, -1000.0 + std::log(3.0)});
  EXPECT_NEAR(w[0], 0.25, 1e-12);
  EXPECT_NEAR(w[1], 0.75, 1e-12);
  const double inf = std::numeric_limits<double>::infinity();
  const auto partial = filters::normalize_log_weights(std::vector<double>{-inf, 0.0});
  EXPECT_EQ(partial[0], 0.0);
  EXPECT_EQ(partial[1], 1.0);
  EXPECT_THROW(filters::normalize_log_weights(std::vector<double>{-inf, -inf}),
               DegenerateBeliefError);
}

TEST(SystematicResampling, UniformWeightsKeepEveryParticleOnAverage) {
  const std::size_t n = 20;
  std::vector<double> counts(n, 0.0);
  Rng rng(11);
  const std::vector<double> w(n, 1.0 / n);
  const int reps = 10000;
  for (int r = 0; r < reps; ++r) {
    for (std::size_t i : filters::systematic_indices(w, rng)) counts[i] += 1.0;
  }
  for (double c : counts) EXPECT_NEAR(c / reps, 1.0, 0.05);
}

TEST(SystematicResampling, ExpectedCopiesAreProportionalToWeight) {
  const std::vector<double> w{0.05, 0.15, 0.3, 0.5};
  std::vector<double> counts(w.size(), 0.0);
  Rng rng(12);
  const int reps = 10000;
  for (int r = 0; r < reps; ++r) {
    for (std::size_t i : filters::systematic_indices(w, rng)) counts[i] += 1.0;
  }
  for (std::size_t i = 0; i < w.size(); ++i) {
    EXPECT_NEAR(counts[i] / reps, 4.0 * w[i], 0.05);
  }
}

TEST(SystematicResampling, PointMassCopiesOneParticle) {
  filters::SirBelief b;
  b.states = Matrix::Zero(2, 5);
  for (int i = 0; i < 5; ++i) b.states(0, i) = i;
  b.weights = {1.0, 0.0, 0.0, 0.0, 0.0};
  b.bandwidth = Vector::Zero(2);
  Rng rng(1);
  const auto out = filters::systematic_resample(b, rng);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(out.states(0, i), 0.0);
  for (double w : out.weights) EXPECT_DOUBLE_EQ(w, 0.2);
}

TEST(Rbpf, SingleDeterministicParticle) {
  LinearRbModel::Params p;
  p.sigma_z = 0.0;
  const LinearRbModel model(p);
  Rng rng(4);
  filters::RBBelief b;
  b.particles.push_back({Vector::Constant(1, 0.3), prior2(), 1.0});
  const Vector a = Vector::Constant(1, 0.5), o = Eigen::Vector2d(0.2, -0.1);
  const auto out = filters::rbpf_update(b, a, o, model, rng);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_DOUBLE_EQ(out.particles[0].weight, 1.0);
  const auto ref = filters::ukf_analytical_update(prior2(), Vector::Constant(1, 0.3),
                                                  Vector::Constant(1, 0.3), o, a, model);
  EXPECT_LT((out.particles[0].theta.mean - ref.posterior.mean).norm(), 1e-14);
  EXPECT_LT((out.particles[0].theta.cov - ref.posterior.cov).norm(), 1e-14);
}

TEST(Rbpf, MatchesPerParticleKalmanReferenceOverFiftySteps) {
  const LinearRbModel model;
  Rng rng(21);
  const std::size_t n = 25;
  filters::RBBelief b = rb_prior(n, rng, 0.0);
  std::vector<quad::GaussianStat> ref;
  std::vector<double> log_w(n, 0.0);
  for (const auto& p : b.particles) ref.push_back(p.theta);
  Vector truth(3);
  truth << 0.0, 0.5, -0.5;
  for (int k = 0; k < 50; ++k) {
    const Vector a = Vector::Constant(1, k % 3 - 1.0);
    truth = model.sample_transition(truth, a, rng);
    const Vector o = model.sample_observation(truth, a, rng);
    const filters::RBBelief next = filters::rbpf_update(b, a, o, model, rng);
    ASSERT_FALSE(next.diagnostics.resampled);
    for (std::size_t i = 0; i < n; ++i) {
      const auto kf = kalman_step(model, ref[i], b.particles[i].s_pi[0],
                                  next.particles[i].s_pi[0], a, o);
      ref[i] = kf.posterior;
      log_w[i] += kf.loglik;
    }
    const auto w = filters::normalize_log_weights(log_w);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& p = next.particles[i];
      ASSERT_LT((p.theta.mean - ref[i].mean).cwiseAbs().maxCoeff(), 1e-6) << "step " << k;
      ASSERT_LT((p.theta.cov - ref[i].cov).cwiseAbs().maxCoeff(), 1e-6) << "step " << k;
      ASSERT_NEAR(p.weight, w[i], 1e-6) << "step " << k;
    }
    b = next;
  }
}

TEST(Rbpf, ResamplesBelowThreshold) {
  const ChainModel model;
  Rng rng(2);
  filters::RBBelief b;
  b.resample_threshold = 0.5;
  for (int i = 0; i < 10; ++i) {
    b.particles.push_back({Vector::Constant(1, i),
                           quad::GaussianStat::make(Vector::Zero(1), Matrix::Identity(1, 1)),
                           i < 4 ? 0.25 : 0.0});
  }
  const auto out = filters::rbpf_update(b, Vector::Zero(1), Vector::Zero(1), model, rng);
  EXPECT_NEAR(out.diagnostics.ess_normalized, 0.4, 1e-12);
  EXPECT_TRUE(out.diagnostics.resampled);
  for (const auto& p : out.particles) EXPECT_DOUBLE_EQ(p.weight, 0.1);
}

TEST(Rbpf, WeightsStayNormalized) {
  const LinearRbModel model;
  Rng rng(5);
  filters::RBBelief b = rb_prior(50, rng, 0.5);
  Vector truth = Vector::Zero(3);
  for (int k = 0; k < 20; ++k) {
    const Vector a = Vector::Constant(1, 1.0);
    truth = model.sample_transition(truth, a, rng);
    b = filters::rbpf_update(b, a, model.sample_observation(truth, a, rng), model, rng);
    double sum = 0.0;
    for (double w : b.weights()) sum += w;
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_GT(b.diagnostics.ess_normalized, 0.0);
    EXPECT_LE(b.diagnostics.ess_normalized, 1.0 + 1e-12);
  }
}

TEST(Sirpf, ConcentratesOnConsistentParticles) {
  LinearRbModel::Params p;
  p.sigma_z = 0.0;
  p.q = 0.0;
  p.r = 1e-10;
  const LinearRbModel model(p);
  filters::SirBelief b;
  b.states = Matrix::Zero(3, 5);
  for (int i = 0; i < 5; ++i) b.states(1, i) = i;
  b.weights.assign(5, 0.2);
  b.bandwidth = Vector::Zero(3);
  b.resample_threshold = 0.0;
  Rng rng(3);
  const Vector a = Vector::Zero(1);
  const Vector truth_next = model.sample_transition(b.states.col(2), a, rng);
  const Vector o = model.noise_free_observation(truth_next);
  const auto out = filters::sirpf_update(b, a, o, model, rng);
  EXPECT_GT(out.weights[2], 1.0 - 1e-9);
}

TEST(Sirpf, PosteriorMeanMatchesKalmanFilter) {
  LinearRbModel::Params p;
  p.sigma_z = 0.0;
  const LinearRbModel model(p);
  const int n = 100000;
  Rng rng(8);
  const auto prior = prior2();
  const Matrix l = quad::psd_sqrt_factor(prior.cov);
  filters::SirBelief b;
  b.states.resize(3, n);
  for (int i = 0; i < n; ++i) {
    b.states(0, i) = 0.3;
    b.states.col(i).tail(2) = prior.mean + l * rng.normal_vector(2);
  }
  b.weights.assign(n, 1.0 / n);
  b.bandwidth = Vector::Zero(3);
  b.resample_threshold = 0.0;
  const Vector a = Vector::Constant(1, 0.5), o = Eigen::Vector2d(0.8, -0.3);
  const auto out = filters::sirpf_update(b, a, o, model, rng);
  const auto kf = kalman_step(model, prior, 0.3, 0.3, a, o);
  const std::vector<Eigen::Index> comps{1, 2};
  const auto m = filters::state_moments(out, comps);
  const double n_eff = filters::ess(out.weights);
  for (int j = 0; j < 2; ++j) {
    const double se = std::sqrt(kf.posterior.cov(j, j) / n_eff);
    EXPECT_LT(std::abs(m.mean[j] - kf.posterior.mean[j]), 3.0 * se);
  }
}

TEST(Sirpf, ZeroBandwidthLeavesExactDuplicates) {
  const LinearRbModel model;
  Rng rng(9);
  filters::SirBelief b;
  b.states = Matrix::Zero(3, 40);
  for (int i = 0; i < 40; ++i) b.states.col(i) = rng.normal_vector(3);
  b.weights.assign(40, 1.0 / 40);
  b.bandwidth = Vector::Zero(3);
  b.resample_threshold = 1.0;
  const auto out = filters::sirpf_update(b, Vector::Zero(1), Eigen::Vector2d(2.0, 2.0), model, rng);
  ASSERT_TRUE(out.diagnostics.resampled);
  std::set<std::vector<double>> distinct;
  for (int i = 0; i < 40; ++i) {
    distinct.insert({out.states(0, i), out.states(1, i), out.states(2, i)});
  }
  EXPECT_LT(distinct.size(), 40u);
}

TEST(Consistency, NeesKnownValues) {
  EXPECT_DOUBLE_EQ(filters::nees(Eigen::Vector2d(1, 2), Eigen::Vector2d(1, 2),
                                 Matrix::Identity(2, 2)).nees, 0.0);
  const double sigma = 0.7;
  EXPECT_NEAR(filters::nees(Vector::Constant(1, sigma), Vector::Zero(1),
                            Matrix::Constant(1, 1, sigma * sigma)).nees, 1.0, 1e-12);
  EXPECT_THROW(filters::nees(Vector::Zero(2), Vector::Ones(2), Matrix::Zero(2, 2)),
               NumericalError);
  EXPECT_NEAR(filters::nis(Eigen::Vector2d(1, 1), 2.0 * Matrix::Identity(2, 2)).nis, 1.0, 1e-12);
}

TEST(Consistency, ChiSquareInterval) {
  const auto iv = filters::chi2_interval(2);
  EXPECT_NEAR(iv.lower, 0.0506, 1e-4);
  EXPECT_NEAR(iv.upper, 7.378, 1e-3);
}

TEST(Consistency, CoverageOfCalibratedKalmanFilter) {
  LinearRbModel::Params p;
  p.sigma_z = 0.0;
  const LinearRbModel model(p);
  Rng rng(31);
  auto post = quad::GaussianStat::make(Vector::Zero(2), Matrix::Identity(2, 2));
  Vector truth(3);
  truth << 0.4, rng.normal(), rng.normal();
  std::vector<double> calibrated, doubled;
  for (int k = 0; k < 10000; ++k) {
    const Vector a = Vector::Constant(1, -0.5 * truth[2]);
    truth = model.sample_transition(truth, a, rng);
    const Vector o = model.sample_observation(truth, a, rng);
    post = kalman_step(model, post, 0.4, 0.4, a, o).posterior;
    calibrated.push_back(filters::nees(post.mean, truth.tail(2), post.cov).nees);
    doubled.push_back(filters::nees(post.mean, truth.tail(2), 2.0 * post.cov).nees);
  }
  EXPECT_NEAR(filters::chi2_coverage(calibrated, 2), 0.95, 0.05);
  EXPECT_GT(filters::chi2_fraction_below(doubled, 2), 0.025);
}
