#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace rbpomdp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Thrown when every particle weight collapses to zero (all log-weights -inf).
class DegenerateBeliefError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown for singular innovation / covariance matrices. The message carries a
// dump of the offending matrix.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string format_matrix(const Matrix& m);

}  // namespace rbpomdp
