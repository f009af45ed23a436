#include "rbpomdp/filters/consistency.hpp"

#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>

namespace rbpomdp::filters {
namespace {

double mahalanobis(const Vector& e, const Matrix& m, const char* what) {
  if (m.rows() != e.size() || m.cols() != e.size()) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch");
  }
  const Eigen::FullPivLU<Matrix> lu(m);
  if (!lu.isInvertible()) {
    throw NumericalError(std::string(what) + ": singular matrix\n" +
                         format_matrix(m));
  }
  return e.dot(lu.solve(e));
}

}  // namespace

ConsistencyStats nees(const Vector& est_mean, const Vector& truth,
                      const Matrix& cov) {
  ConsistencyStats out;
  out.nees = mahalanobis(est_mean - truth, cov, "nees");
  out.dof = static_cast<int>(truth.size());
  return out;
}

ConsistencyStats nis(const Vector& innovation, const Matrix& s) {
  ConsistencyStats out;
  out.nis = mahalanobis(innovation, s, "nis");
  out.dof = static_cast<int>(innovation.size());
  return out;
}

ChiSquareInterval chi2_interval(int dof, double coverage) {
  const boost::math::chi_squared dist(dof);
  const double tail = 0.5 * (1.0 - coverage);
  return {boost::math::quantile(dist, tail),
          boost::math::quantile(dist, 1.0 - tail)};
}

double chi2_coverage(std::span<const double> values, int dof,
                     double coverage) {
  if (values.empty()) return 0.0;
  const auto band = chi2_interval(dof, coverage);
  std::size_t inside = 0;
  for (double v : values) inside += (v >= band.lower && v <= band.upper);
  return static_cast<double>(inside) / static_cast<double>(values.size());
}

double chi2_fraction_below(std::span<const double> values, int dof,
                           double coverage) {
  if (values.empty()) return 0.0;
  const auto band = chi2_interval(dof, coverage);
  std::size_t below = 0;
  for (double v : values) below += (v < band.lower);
  return static_cast<double>(below) / static_cast<double>(values.size());
}

}  // namespace rbpomdp::filters
