#include "rbpomdp/filters/ukf.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rbpomdp::filters {
namespace {

struct SigmaWeights {
  double scale;  // sqrt(n + lambda)
  double mean0, cov0, rest;
};

SigmaWeights sigma_weights(Eigen::Index n, const UkfParams& p) {
  const double nd = static_cast<double>(n);
  const double lambda = p.alpha * p.alpha * (nd + p.kappa) - nd;
  if (!(nd + lambda > 0.0) || !(p.alpha > 0.0)) {
    throw std::invalid_argument("UKF parameters give n + lambda <= 0");
  }
  SigmaWeights w;
  w.scale = std::sqrt(nd + lambda);
  w.mean0 = lambda / (nd + lambda);
  w.cov0 = w.mean0 + (1.0 - p.alpha * p.alpha + p.beta);
  w.rest = 0.5 / (nd + lambda);
  return w;
}

// Columns: mean, mean + scale L_i, mean - scale L_i.
Matrix sigma_points(const quad::GaussianStat& g, double scale) {
  const Eigen::Index n = g.dim();
  const Matrix l = quad::psd_sqrt_factor(g.cov) * scale;
  Matrix pts(n, 2 * n + 1);
  pts.col(0) = g.mean;
  for (Eigen::Index i = 0; i < n; ++i) {
    pts.col(1 + i) = g.mean + l.col(i);
    pts.col(1 + n + i) = g.mean - l.col(i);
  }
  return pts;
}

Vector covariance_weights(Eigen::Index cols, const SigmaWeights& w) {
  Vector wc = Vector::Constant(cols, w.rest);
  wc[0] = w.cov0;
  return wc;
}

}  // namespace

quad::GaussianStat ukf_predict(const quad::GaussianStat& theta,
                               const Vector& s_pi, const Vector& s_pi_next,
                               const Vector& a, const RBFactoredModel& model,
                               const UkfParams& params) {
  const Eigen::Index n = theta.dim();
  const SigmaWeights w = sigma_weights(n, params);
  const Matrix chi = sigma_points(theta, w.scale);
  Matrix prop(n, chi.cols());
  for (Eigen::Index i = 0; i < chi.cols(); ++i) {
    prop.col(i) = model.tractable_mean_step(chi.col(i), s_pi, s_pi_next, a);
  }
  const Vector wc = covariance_weights(chi.cols(), w);
  quad::GaussianStat out;
  out.mean = w.mean0 * prop.col(0) + w.rest * prop.rightCols(chi.cols() - 1).rowwise().sum();
  const Matrix dev = prop.colwise() - out.mean;
  out.cov = model.tractable_process_cov(s_pi, s_pi_next, a);
  out.cov.noalias() += dev * wc.asDiagonal() * dev.transpose();
  out.repair();
  return out;
}

UkfResult ukf_analytical_update(const quad::GaussianStat& theta,
                                const Vector& s_pi, const Vector& s_pi_next,
                                const Vector& o, const Vector& a,
                                const RBFactoredModel& model,
                                const UkfParams& params) {
  if (o.size() != model.observation_dim()) {
    throw std::invalid_argument("observation dimension mismatch");
  }
  const quad::GaussianStat prior =
      ukf_predict(theta, s_pi, s_pi_next, a, model, params);

  const Eigen::Index n = prior.dim();
  const Eigen::Index m = o.size();
  const SigmaWeights w = sigma_weights(n, params);
  const Matrix chi = sigma_points(prior, w.scale);
  const Eigen::Index cols = chi.cols();

  Matrix z(m, cols);
  for (Eigen::Index i = 0; i < cols; ++i) {
    z.col(i) = model.observation_mean(chi.col(i), s_pi_next);
  }
  // Mean taken through residuals so wrapped components average correctly.
  Matrix dz = z.colwise() - z.col(0);
  for (Eigen::Index i = 1; i < cols; ++i) model.normalize_residual(dz.col(i));
  const Vector z_mean = z.col(0) + w.rest * dz.rightCols(cols - 1).rowwise().sum();
  dz = z.colwise() - z_mean;
  for (Eigen::Index i = 0; i < cols; ++i) model.normalize_residual(dz.col(i));
  const Vector wc = covariance_weights(cols, w);
  const Matrix dx = chi.colwise() - prior.mean;

  Matrix s = model.observation_cov(s_pi_next);
  s.noalias() += dz * wc.asDiagonal() * dz.transpose();
  const Matrix cross = dx * wc.asDiagonal() * dz.transpose();
  s = (0.5 * (s + s.transpose())).eval();

  const Eigen::LLT<Matrix> llt(s);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("UKF innovation covariance not positive definite:\n" +
                         format_matrix(s));
  }
  UkfResult out;
  out.innovation = model.observation_residual(o, z_mean);
  const Matrix gain = llt.solve(cross.transpose()).transpose();
  out.posterior.mean = prior.mean + gain * out.innovation;
  out.posterior.cov = prior.cov - gain * s * gain.transpose();
  out.posterior.repair();

  const Matrix& lower = llt.matrixLLT();
  const double log_det = 2.0 * lower.diagonal().array().log().sum();
  const Vector white = llt.matrixL().solve(out.innovation);
  out.loglik = -0.5 * (static_cast<double>(m) * std::log(2.0 * std::numbers::pi) +
                       log_det + white.squaredNorm());
  out.predicted_observation = z_mean;
  out.innovation_cov = std::move(s);
  return out;
}

}  // namespace rbpomdp::filters
