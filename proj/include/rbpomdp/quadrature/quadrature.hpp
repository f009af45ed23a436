#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rbpomdp/core/types.hpp"

namespace rbpomdp::quad {

/// Orthogonal-polynomial families usable as univariate rules. Only Hermite
/// (Gaussian weight) is implemented; the others raise UnsupportedFamily.
enum class RuleFamily { Hermite, Legendre, Laguerre, Jacobi };

class UnsupportedFamily : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

RuleFamily parse_family(const std::string& name);

/// Nodes and weights on the standard-normal scale. Weights sum to one.
struct UnivariateRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

struct RuleDescriptor {
  enum class Kind { Tensor, Smolyak };
  Kind kind = Kind::Tensor;
  int level = 0;  // Smolyak level q; unused for tensor rules
};

/// d-dimensional rule. nodes is d x M (one column per node). Smolyak weights
/// may be negative.
struct MultiRule {
  Matrix nodes;
  std::vector<double> weights;
  RuleDescriptor descriptor;

  Eigen::Index dim() const { return nodes.rows(); }
  std::size_t size() const { return weights.size(); }
};

/// Mean and covariance of a Gaussian over the tractable block.
struct GaussianStat {
  Vector mean;
  Matrix cov;

  Eigen::Index dim() const { return mean.size(); }

  /// Symmetrizes cov and clamps eigenvalues below zero. Throws
  /// std::invalid_argument on shape mismatch, asymmetry beyond 1e-12 or an
  /// eigenvalue below -1e-10.
  static GaussianStat make(Vector mean, Matrix cov);
  /// Symmetrizes and, if the cheap check fails, projects cov onto the PSD
  /// cone.
  void repair();
};

/// n-point probabilists' Gauss-Hermite rule from the Jacobi-matrix
/// eigenproblem. 1 <= n <= 50.
UnivariateRule gauss_hermite_rule(int n);
UnivariateRule univariate_rule(RuleFamily family, int n);

MultiRule tensor_rule(std::span<const UnivariateRule> per_dim);

/// Growth map level -> number of univariate points.
using GrowthRule = std::function<int(int)>;
int linear_growth(int level);

/// Smolyak sparse grid
///   A(q,d) = sum_{q-d+1 <= |i| <= q} (-1)^(q-|i|) C(d-1, q-|i|) (x)_j Q_{i_j}
/// over Gauss-Hermite rules with m(i_j) = growth(i_j) points. Nodes closer
/// than 1e-9 (max-norm) are merged. Requires q >= d >= 1.
MultiRule smolyak_rule(int q, int d, const GrowthRule& growth = linear_growth);

/// Single node at the origin with weight one (evaluates at the mean).
MultiRule mean_rule(int d);

/// Lower-triangular L with L L^T = cov. Pivots below 1e-12 are clamped to
/// zero, so PSD (rank-deficient) covariances are accepted.
Matrix psd_sqrt_factor(const Matrix& cov);

/// Physical nodes mean + L u_k, one column per rule node.
Matrix transformed_nodes(const GaussianStat& g, const MultiRule& rule);

double expect_gaussian(const GaussianStat& g,
                       const std::function<double(const Vector&)>& f,
                       const MultiRule& rule);
Vector expect_gaussian_vector(const GaussianStat& g,
                              const std::function<Vector(const Vector&)>& f,
                              const MultiRule& rule);
/// Same as expect_gaussian but with a caller-supplied square-root factor.
double expect_gaussian_with_factor(
    const Vector& mean, const Matrix& factor,
    const std::function<double(const Vector&)>& f, const MultiRule& rule);

}  // namespace rbpomdp::quad
