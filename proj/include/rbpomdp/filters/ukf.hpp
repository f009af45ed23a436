#pragma once

#include "rbpomdp/core/model.hpp"
#include "rbpomdp/quadrature/quadrature.hpp"

namespace rbpomdp::filters {

/// Scaled (van der Merwe) sigma-point parameters. Valid when
/// alpha in (0, 1], beta >= 0 and n + lambda > 0.
struct UkfParams {
  double alpha = 1e-1;
  double beta = 2.0;
  double kappa = 0.0;
};

struct UkfResult {
  quad::GaussianStat posterior;
  double loglik = 0.0;  // log N(innovation; 0, S)
  Vector predicted_observation;
  Vector innovation;
  Matrix innovation_cov;
};

/// Unscented predict through the conditional tractable dynamics followed by
/// an unscented measurement update through h(.; s_pi_next).
///
/// Throws NumericalError (with a dump of S) when the innovation covariance is
/// not positive definite.
UkfResult ukf_analytical_update(const quad::GaussianStat& theta,
                                const Vector& s_pi, const Vector& s_pi_next,
                                const Vector& o, const Vector& a,
                                const RBFactoredModel& model,
                                const UkfParams& params = {});

/// Predict step only.
quad::GaussianStat ukf_predict(const quad::GaussianStat& theta,
                               const Vector& s_pi, const Vector& s_pi_next,
                               const Vector& a, const RBFactoredModel& model,
                               const UkfParams& params = {});

}  // namespace rbpomdp::filters
