#pragma once

#include <string>

#include "rbpomdp/filters/ukf.hpp"
#include "rbpomdp/quadrature/quadrature.hpp"

namespace rbpomdp::planners {

enum class RolloutPolicy { Heuristic, Random };

/// How expectations over the tractable block are integrated.
///
/// Sparse-grid levels count from 1: level l over d dimensions is the Smolyak
/// rule A(l + d - 1, d) with linear growth, so level 1 is the mean-only rule
/// in every dimension. Tensor rules use `level` Gauss-Hermite points per
/// dimension. Growth picks the univariate point count per sparse-grid level:
/// linear m(i) = i or odd m(i) = 2i - 1.
struct RuleSpec {
  enum class Kind { Mean, SparseGrid, Tensor };
  enum class Growth { Linear, Odd };
  Kind kind = Kind::Mean;
  int level = 1;
  Growth growth = Growth::Linear;

  quad::MultiRule build(int dim) const;
  std::string describe() const;
  static RuleSpec mean() { return {Kind::Mean, 1, Growth::Linear}; }
  static RuleSpec sparse_grid(int level, Growth growth = Growth::Linear) {
    return {Kind::SparseGrid, level, growth};
  }
};

struct PlannerParams {
  int n_iterations = 50;
  int max_depth = 20;
  double ucb_c = 10.0;
  double k_action = 6.0;
  double alpha_action = 0.0;
  double k_obs = 4.0;
  double alpha_obs = 0.1;
  double epsilon = 0.01;  // rollout stops once gamma^depth < epsilon
  RuleSpec simulate_rule = RuleSpec::sparse_grid(3);
  RuleSpec rollout_rule = RuleSpec::mean();
  RolloutPolicy rollout_policy = RolloutPolicy::Heuristic;
  filters::UkfParams ukf;

  /// Throws std::invalid_argument for non-positive counts/constants or
  /// widening exponents outside [0, 1].
  void validate() const;
};

}  // namespace rbpomdp::planners
