#include "rbpomdp/planners/params.hpp"

#include <stdexcept>

namespace rbpomdp::planners {

quad::MultiRule RuleSpec::build(int dim) const {
  switch (kind) {
    case Kind::Mean:
      return quad::mean_rule(dim);
    case Kind::SparseGrid:
      if (level < 1) throw std::invalid_argument("sparse grid level must be >= 1");
      if (growth == Growth::Odd) {
        return quad::smolyak_rule(level + dim - 1, dim,
                                  [](int i) { return 2 * i - 1; });
      }
      return quad::smolyak_rule(level + dim - 1, dim);
    case Kind::Tensor: {
      if (level < 1) throw std::invalid_argument("tensor level must be >= 1");
      std::vector<quad::UnivariateRule> rules(dim, quad::gauss_hermite_rule(level));
      return quad::tensor_rule(rules);
    }
  }
  throw std::invalid_argument("unknown rule kind");
}

std::string RuleSpec::describe() const {
  switch (kind) {
    case Kind::Mean:
      return "mean";
    case Kind::SparseGrid:
      return "sparse-grid:" + std::to_string(level) +
             (growth == Growth::Odd ? ":odd" : "");
    case Kind::Tensor:
      return "tensor:" + std::to_string(level);
  }
  return "unknown";
}

void PlannerParams::validate() const {
  if (n_iterations <= 0) {
    throw std::invalid_argument("planner iterations must be positive");
  }
  if (max_depth <= 0) throw std::invalid_argument("max_depth must be positive");
  if (!(ucb_c >= 0.0)) throw std::invalid_argument("UCB constant must be >= 0");
  if (!(k_action > 0.0) || !(k_obs > 0.0)) {
    throw std::invalid_argument("widening constants must be positive");
  }
  if (alpha_action < 0.0 || alpha_action > 1.0 || alpha_obs < 0.0 ||
      alpha_obs > 1.0) {
    throw std::invalid_argument("widening exponents must lie in [0, 1]");
  }
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
}

}  // namespace rbpomdp::planners
