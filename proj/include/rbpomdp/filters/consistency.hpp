#pragma once

#include <span>

#include "rbpomdp/core/types.hpp"

namespace rbpomdp::filters {

struct ConsistencyStats {
  double nees = 0.0;
  double nis = 0.0;
  int dof = 0;
};

/// e^T cov^-1 e with e = est - truth. Throws NumericalError if cov is
/// singular.
ConsistencyStats nees(const Vector& est_mean, const Vector& truth,
                      const Matrix& cov);
/// nu^T S^-1 nu. Throws NumericalError if S is singular.
ConsistencyStats nis(const Vector& innovation, const Matrix& s);

struct ChiSquareInterval {
  double lower;
  double upper;
};

/// Two-sided chi-square acceptance interval with the given coverage.
ChiSquareInterval chi2_interval(int dof, double coverage = 0.95);

/// Fraction of values inside the two-sided interval for `dof`.
double chi2_coverage(std::span<const double> values, int dof,
                     double coverage = 0.95);
/// Fraction of values strictly below the interval's lower bound.
double chi2_fraction_below(std::span<const double> values, int dof,
                           double coverage = 0.95);

}  // namespace rbpomdp::filters
