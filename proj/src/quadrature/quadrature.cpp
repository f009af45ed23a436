#include "rbpomdp/quadrature/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rbpomdp::quad {
namespace {

constexpr double kMergeTolerance = 1e-9;
constexpr double kPivotFloor = 1e-12;

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Accumulates weighted nodes, merging points within kMergeTolerance.
class NodeAccumulator {
 public:
  explicit NodeAccumulator(int dim) : dim_(dim) {}

  void add(const Vector& x, double w) {
    for (std::size_t k = 0; k < points_.size(); ++k) {
      if ((points_[k] - x).lpNorm<Eigen::Infinity>() <= kMergeTolerance) {
        weights_[k] += w;
        return;
      }
    }
    points_.push_back(x);
    weights_.push_back(w);
  }

  MultiRule finish(RuleDescriptor descriptor) const {
    std::vector<std::size_t> order;
    for (std::size_t k = 0; k < points_.size(); ++k) {
      // Exact cancellations between tensor terms leave zero-weight nodes.
      if (std::abs(weights_[k]) > 1e-15) order.push_back(k);
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const Vector& pa = points_[a];
      const Vector& pb = points_[b];
      return std::lexicographical_compare(pa.data(), pa.data() + pa.size(),
                                          pb.data(), pb.data() + pb.size());
    });
    MultiRule rule;
    rule.descriptor = descriptor;
    rule.nodes.resize(dim_, static_cast<Eigen::Index>(order.size()));
    rule.weights.reserve(order.size());
    for (std::size_t c = 0; c < order.size(); ++c) {
      rule.nodes.col(static_cast<Eigen::Index>(c)) = points_[order[c]];
      rule.weights.push_back(weights_[order[c]]);
    }
    return rule;
  }

 private:
  int dim_;
  std::vector<Vector> points_;
  std::vector<double> weights_;
};

void tensor_accumulate(std::span<const UnivariateRule> per_dim, double scale,
                       NodeAccumulator& acc) {
  const int d = static_cast<int>(per_dim.size());
  std::vector<std::size_t> idx(per_dim.size(), 0);
  Vector x(d);
  while (true) {
    double w = scale;
    for (int j = 0; j < d; ++j) {
      x[j] = per_dim[j].nodes[idx[j]];
      w *= per_dim[j].weights[idx[j]];
    }
    acc.add(x, w);
    int j = 0;
    while (j < d && ++idx[j] == per_dim[j].size()) idx[j++] = 0;
    if (j == d) break;
  }
}

// Calls visit(i) for every multi-index with entries >= 1 and |i| in [lo, hi].
template <typename Visit>
void for_each_multi_index(int d, int lo, int hi, std::vector<int>& cur,
                          int sum, Visit&& visit) {
  const int pos = static_cast<int>(cur.size());
  if (pos == d) {
    if (sum >= lo && sum <= hi) visit(cur);
    return;
  }
  const int remaining = d - pos - 1;
  for (int v = 1; sum + v + remaining <= hi; ++v) {
    cur.push_back(v);
    for_each_multi_index(d, lo, hi, cur, sum + v, visit);
    cur.pop_back();
  }
}

}  // namespace

RuleFamily parse_family(const std::string& name) {
  if (name == "hermite") return RuleFamily::Hermite;
  if (name == "legendre") return RuleFamily::Legendre;
  if (name == "laguerre") return RuleFamily::Laguerre;
  if (name == "jacobi") return RuleFamily::Jacobi;
  throw std::invalid_argument("unknown rule family: " + name);
}

UnivariateRule gauss_hermite_rule(int n) {
  if (n < 1 || n > 50) {
    throw std::invalid_argument("gauss_hermite_rule: n must be in [1, 50]");
  }
  // Jacobi matrix of the monic probabilists' Hermite recurrence
  // x He_k = He_{k+1} + k He_{k-1}.
  Matrix jacobi = Matrix::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    jacobi(k - 1, k) = jacobi(k, k - 1) = std::sqrt(static_cast<double>(k));
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(jacobi);
  const Vector& x = eig.eigenvalues();
  const Matrix& v = eig.eigenvectors();

  UnivariateRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = x[i];
    rule.weights[i] = v(0, i) * v(0, i);
  }
  // Enforce the exact symmetry of the rule about zero.
  for (int i = 0; i < n / 2; ++i) {
    const int j = n - 1 - i;
    const double node = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    const double weight = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.nodes[i] = -node;
    rule.nodes[j] = node;
    rule.weights[i] = rule.weights[j] = weight;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  const double total =
      std::accumulate(rule.weights.begin(), rule.weights.end(), 0.0);
  for (double& w : rule.weights) w /= total;
  return rule;
}

UnivariateRule univariate_rule(RuleFamily family, int n) {
  switch (family) {
    case RuleFamily::Hermite:
      return gauss_hermite_rule(n);
    case RuleFamily::Legendre:
      throw UnsupportedFamily("Legendre rules are not implemented");
    case RuleFamily::Laguerre:
      throw UnsupportedFamily("Laguerre rules are not implemented");
    case RuleFamily::Jacobi:
      throw UnsupportedFamily("Jacobi rules are not implemented");
  }
  throw UnsupportedFamily("unknown rule family");
}

MultiRule tensor_rule(std::span<const UnivariateRule> per_dim) {
  if (per_dim.empty()) throw std::invalid_argument("tensor_rule: no rules");
  NodeAccumulator acc(static_cast<int>(per_dim.size()));
  tensor_accumulate(per_dim, 1.0, acc);
  return acc.finish({RuleDescriptor::Kind::Tensor, 0});
}

int linear_growth(int level) { return level; }

MultiRule smolyak_rule(int q, int d, const GrowthRule& growth) {
  if (d < 1) throw std::invalid_argument("smolyak_rule: d must be >= 1");
  if (q < d) throw std::invalid_argument("smolyak_rule: level q must be >= d");

  std::vector<UnivariateRule> cache;
  auto rule_at = [&](int level) -> const UnivariateRule& {
    if (static_cast<int>(cache.size()) < level) cache.resize(level);
    UnivariateRule& r = cache[level - 1];
    if (r.nodes.empty()) r = gauss_hermite_rule(growth(level));
    return r;
  };

  NodeAccumulator acc(d);
  std::vector<int> cur;
  std::vector<UnivariateRule> factors(d);
  for_each_multi_index(d, q - d + 1, q, cur, 0, [&](const std::vector<int>& i) {
    const int norm = std::accumulate(i.begin(), i.end(), 0);
    const double coef = ((q - norm) % 2 == 0 ? 1.0 : -1.0) *
                        binomial(d - 1, q - norm);
    for (int j = 0; j < d; ++j) factors[j] = rule_at(i[j]);
    tensor_accumulate(factors, coef, acc);
  });
  return acc.finish({RuleDescriptor::Kind::Smolyak, q});
}

MultiRule mean_rule(int d) {
  MultiRule rule;
  rule.nodes = Matrix::Zero(d, 1);
  rule.weights = {1.0};
  rule.descriptor = {RuleDescriptor::Kind::Smolyak, d};
  return rule;
}

GaussianStat GaussianStat::make(Vector mean, Matrix cov) {
  if (cov.rows() != mean.size() || cov.cols() != mean.size()) {
    throw std::invalid_argument("GaussianStat: covariance shape mismatch");
  }
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw std::invalid_argument("GaussianStat: covariance not symmetric");
  }
  GaussianStat g{std::move(mean), std::move(cov)};
  g.cov = (0.5 * (g.cov + g.cov.transpose())).eval();
  if (g.dim() > 0) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(g.cov);
    if (eig.eigenvalues().minCoeff() < -1e-10) {
      throw std::invalid_argument("GaussianStat: covariance not PSD");
    }
  }
  g.repair();
  return g;
}

void GaussianStat::repair() {
  cov = (0.5 * (cov + cov.transpose())).eval();
  if (dim() == 0) return;
  if (cov.llt().info() == Eigen::Success) return;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.eigenvalues().minCoeff() >= 0.0) return;
  cov = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).asDiagonal() *
        eig.eigenvectors().transpose();
  cov = (0.5 * (cov + cov.transpose())).eval();
}

Matrix psd_sqrt_factor(const Matrix& cov) {
  const Eigen::Index n = cov.rows();
  Matrix l = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double pivot = cov(j, j);
    for (Eigen::Index k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k);
    if (pivot < kPivotFloor) continue;  // column stays zero
    const double root = std::sqrt(pivot);
    l(j, j) = root;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double v = cov(i, j);
      for (Eigen::Index k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
      l(i, j) = v / root;
    }
  }
  return l;
}

Matrix transformed_nodes(const GaussianStat& g, const MultiRule& rule) {
  if (rule.dim() != g.dim()) {
    throw std::invalid_argument("rule dimension does not match Gaussian");
  }
  Matrix pts = psd_sqrt_factor(g.cov) * rule.nodes;
  pts.colwise() += g.mean;
  return pts;
}

double expect_gaussian_with_factor(
    const Vector& mean, const Matrix& factor,
    const std::function<double(const Vector&)>& f, const MultiRule& rule) {
  if (rule.dim() != mean.size() || factor.rows() != mean.size()) {
    throw std::invalid_argument("rule dimension does not match Gaussian");
  }
  double total = 0.0;
  Vector x(mean.size());
  for (std::size_t k = 0; k < rule.size(); ++k) {
    x = mean + factor * rule.nodes.col(static_cast<Eigen::Index>(k));
    total += rule.weights[k] * f(x);
  }
  return total;
}

double expect_gaussian(const GaussianStat& g,
                       const std::function<double(const Vector&)>& f,
                       const MultiRule& rule) {
  if (rule.dim() != g.dim()) {
    throw std::invalid_argument("rule dimension does not match Gaussian");
  }
  return expect_gaussian_with_factor(g.mean, psd_sqrt_factor(g.cov), f, rule);
}

Vector expect_gaussian_vector(const GaussianStat& g,
                              const std::function<Vector(const Vector&)>& f,
                              const MultiRule& rule) {
  const Matrix pts = transformed_nodes(g, rule);
  Vector total;
  for (std::size_t k = 0; k < rule.size(); ++k) {
    Vector v = f(pts.col(static_cast<Eigen::Index>(k)));
    if (k == 0) total = Vector::Zero(v.size());
    total += rule.weights[k] * v;
  }
  return total;
}

}  // namespace rbpomdp::quad
