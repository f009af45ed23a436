#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "rbpomdp/localization/localization.hpp"
#include "rbpomdp/planners/planners.hpp"
#include "support/models.hpp"

using namespace rbpomdp;
using namespace rbpomdp::planners;
namespace loc = rbpomdp::localization;
using rbpomdp::testing::ChainModel;
using rbpomdp::testing::geometric_sum;

namespace {

PlannerParams chain_params(int depth, int iterations) {
  PlannerParams p;
  p.max_depth = depth;
  p.n_iterations = iterations;
  p.epsilon = 1e-300;
  p.simulate_rule = RuleSpec::mean();
  return p;
}

filters::RBBelief chain_belief() {
  filters::RBBelief b;
  b.particles.push_back({Vector::Zero(1),
                         quad::GaussianStat::make(Vector::Zero(1), Matrix::Zero(1, 1)), 1.0});
  return b;
}

double root_q(const PlannerTree& tree, std::size_t action) {
  for (std::size_t ha : tree.history(PlannerTree::root()).children) {
    if (tree.action_node(ha).action == action) return tree.action_node(ha).value;
  }
  return std::nan("");
}

loc::LocalizationModel world_model() {
  return loc::rb_factorization(loc::WorldConfig{}, loc::default_landmarks());
}

filters::RBBelief world_belief(const loc::LocalizationModel& model, std::uint64_t seed) {
  Rng rng(seed);
  return model.initial_rb_belief(50, rng);
}

NodeBelief node_of(const filters::RBBelief& b, std::size_t i) {
  return {b.particles[i].s_pi, b.particles[i].theta};
}

}  // namespace

TEST(ChainOracle, RbPomcpowRootValueIsGeometricSeries) {
  const ChainModel model(0.9, 1.0);
  for (int depth : {1, 2, 5, 12}) {
    RbPomcpowPlanner planner(model, chain_params(depth, 300));
    Rng rng(1);
    EXPECT_EQ(planner.search(chain_belief(), rng), 0u);
    EXPECT_NEAR(root_q(planner.tree(), 0), geometric_sum(0.9, depth), 1e-9) << depth;
  }
}

TEST(ChainOracle, RbPomcpRootValueIsGeometricSeries) {
  const ChainModel model(0.9, 2.0);
  for (int depth : {1, 3, 8}) {
    RbPomcpPlanner planner(model, chain_params(depth, 300));
    Rng rng(1);
    EXPECT_EQ(planner.search(chain_belief(), rng), 0u);
    EXPECT_NEAR(root_q(planner.tree(), 0), 2.0 * geometric_sum(0.9, depth), 1e-9) << depth;
  }
}

TEST(ChainOracle, PomcpowRootValueIsGeometricSeries) {
  const ChainModel model(0.8, 1.0);
  for (int depth : {1, 4, 10}) {
    PomcpowPlanner planner(model, chain_params(depth, 300));
    Rng rng(1);
    const auto a = planner.search([](Rng&) -> Vector { return Vector::Zero(2); }, rng);
    EXPECT_EQ(a, 0u);
    EXPECT_NEAR(root_q(planner.tree(), 0), geometric_sum(0.8, depth), 1e-9) << depth;
  }
}

TEST(RbSimulate, ZeroDepthReturnsZero) {
  const ChainModel model;
  RbPomcpowPlanner planner(model, chain_params(5, 10));
  Rng rng(1);
  EXPECT_EQ(planner.simulate(node_of(chain_belief(), 0), PlannerTree::root(), 0, rng), 0.0);
}

TEST(RbSimulate, TwoStepHandExpansion) {
  const ChainModel model(0.7, 3.0);
  RbPomcpowPlanner planner(model, chain_params(2, 10));
  Rng rng(1);
  for (int i = 0; i < 5; ++i) {
    const double total = planner.simulate(node_of(chain_belief(), 0), PlannerTree::root(), 2, rng);
    EXPECT_NEAR(total, 3.0 + 0.7 * 3.0, 1e-12);
  }
}

TEST(RbSimulate, AlwaysWidenGivesFreshBranches) {
  const auto model = world_model();
  PlannerParams p;
  p.k_obs = 1e9;
  p.n_iterations = 200;
  RbPomcpowPlanner planner(model, p);
  Rng rng(3);
  planner.search(world_belief(model, 4), rng);
  const auto& tree = planner.tree();
  ASSERT_GT(tree.num_branches(), 0u);
  // Never re-selected: every visit of a branch came from its own expected
  // observation. Turning actions sample a continuous heading, so their
  // expected observations never repeat.
  std::size_t turning = 0;
  for (std::size_t ha = 0; ha < tree.num_action_nodes(); ++ha) {
    const auto& node = tree.action_node(ha);
    const bool turns = model.actions()[node.action][1] != 0.0;
    for (std::size_t hao : node.branches) {
      const auto& b = tree.branch(hao);
      EXPECT_EQ(static_cast<std::size_t>(b.visits), b.states.size());
      if (turns) {
        EXPECT_EQ(b.visits, 1);
        ++turning;
      }
    }
  }
  EXPECT_GT(turning, 0u);
}

TEST(RbRollout, Cutoffs) {
  const ChainModel model(0.5, 1.0);
  PlannerParams p = chain_params(10, 1);
  p.epsilon = 0.1;
  RbPomcpowPlanner planner(model, p);
  Rng rng(1);
  const NodeBelief n = node_of(chain_belief(), 0);
  // 0.5^4 = 0.0625 < 0.1
  EXPECT_EQ(planner.rollout(n, 10, 4, rng), 0.0);
  EXPECT_EQ(planner.rollout(n, 0, 0, rng), 0.0);
  // Depths 0..3 contribute: 1 + 0.5 + 0.25 + 0.125.
  EXPECT_NEAR(planner.rollout(n, 10, 0, rng), 1.875, 1e-12);
}

TEST(RbRollout, ThreeStepChain) {
  const ChainModel model(0.9, 2.0);
  RbPomcpowPlanner planner(model, chain_params(10, 1));
  Rng rng(1);
  EXPECT_NEAR(planner.rollout(node_of(chain_belief(), 0), 3, 0, rng),
              2.0 * (1 + 0.9 + 0.81), 1e-12);
}

TEST(RbRollout, TerminalNodeYieldsTerminalReward) {
  const auto model = world_model();
  RbPomcpowPlanner planner(model, PlannerParams{});
  Rng rng(1);
  const NodeBelief at_goal{Vector::Zero(1),
                           quad::GaussianStat::make(Eigen::Vector2d(0.1, 0.2), 0.01 * Matrix::Identity(2, 2))};
  EXPECT_EQ(planner.rollout(at_goal, 5, 1, rng), model.terminal_reward());
}

TEST(RbPomcp, CutoffAndFirstVisitRollout) {
  const ChainModel model(0.5, 1.0);
  PlannerParams p = chain_params(10, 1);
  p.epsilon = 0.1;
  RbPomcpPlanner planner(model, p);
  Rng rng(1);
  const NodeBelief n = node_of(chain_belief(), 0);
  EXPECT_EQ(planner.simulate(n, PlannerTree::root(), 4, rng), 0.0);
  // First visit at depth 1: a rollout of the remaining horizon, depths 1..3.
  EXPECT_NEAR(planner.simulate(n, PlannerTree::root(), 1, rng), 1 + 0.5 + 0.25, 1e-12);
  EXPECT_EQ(planner.tree().history(PlannerTree::root()).children.size(), 1u);
  EXPECT_EQ(planner.tree().history(PlannerTree::root()).visits, 0);
}

TEST(Pomcpow, ZeroDepthReturnsZero) {
  const ChainModel model;
  PomcpowPlanner planner(model, chain_params(5, 10));
  Rng rng(1);
  EXPECT_EQ(planner.simulate(Vector::Zero(2), PlannerTree::root(), 0, rng), 0.0);
}

TEST(Pomcpow, AgreesWithRbPomcpowOnDegenerateInstance) {
  const ChainModel model(0.9, 1.0, 3, 0.2);
  PlannerParams p = chain_params(6, 400);
  p.rollout_rule = RuleSpec::mean();
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    RbPomcpowPlanner rb(model, p);
    PomcpowPlanner base(model, p);
    Rng r1(seed), r2(seed);
    const auto a_rb = rb.search(chain_belief(), r1);
    const auto a_base = base.search([](Rng&) -> Vector { return Vector::Zero(2); }, r2);
    EXPECT_EQ(a_rb, a_base);
    EXPECT_EQ(a_rb, 0u);
  }
}

TEST(Search, SingleActionIsReturned) {
  const ChainModel model(0.9, -5.0);
  RbPomcpowPlanner planner(model, chain_params(4, 20));
  Rng rng(9);
  EXPECT_EQ(planner.search(chain_belief(), rng), 0u);
}

TEST(Search, ZeroIterationsIsRejected) {
  const ChainModel model;
  PlannerParams p = chain_params(4, 0);
  EXPECT_THROW(RbPomcpowPlanner(model, p), std::invalid_argument);
  EXPECT_THROW(PomcpowPlanner(model, p), std::invalid_argument);
}

TEST(Search, EmptyBeliefIsRejected) {
  const ChainModel model;
  RbPomcpowPlanner planner(model, chain_params(4, 5));
  Rng rng(1);
  EXPECT_THROW(planner.search(filters::RBBelief{}, rng), std::invalid_argument);
}

TEST(Search, SeedDeterminism) {
  const auto model = world_model();
  const auto belief = world_belief(model, 7);
  PlannerParams p;
  p.n_iterations = 100;
  for (std::uint64_t seed : {1u, 17u, 99u}) {
    RbPomcpowPlanner a(model, p), b(model, p);
    Rng r1(seed), r2(seed);
    EXPECT_EQ(a.search(belief, r1), b.search(belief, r2));
    EXPECT_EQ(a.tree().num_histories(), b.tree().num_histories());
    EXPECT_EQ(root_q(a.tree(), 0), root_q(b.tree(), 0));
    PomcpowPlanner c(model, p), d(model, p);
    Rng r3(seed), r4(seed);
    EXPECT_EQ(c.search(belief, model, r3), d.search(belief, model, r4));
    RbPomcpPlanner e(model, p), f(model, p);
    Rng r5(seed), r6(seed);
    EXPECT_EQ(e.search(belief, r5), f.search(belief, r6));
  }
}

TEST(Widening, UnitBoundWithZeroExponentAllowsTwoChildren) {
  PlannerTree tree;
  PlannerParams p;
  p.k_action = 1.0;
  p.alpha_action = 0.0;
  for (int i = 0; i < 50; ++i) {
    const std::size_t ha = action_prog_widen(tree, PlannerTree::root(), p, 6);
    tree.history(PlannerTree::root()).visits += 1;
    tree.action_node(ha).visits += 1;
  }
  EXPECT_EQ(tree.history(PlannerTree::root()).children.size(), 2u);
}

TEST(Widening, GenerousBoundAddsEveryAction) {
  PlannerTree tree;
  PlannerParams p;
  p.k_action = 10.0;
  p.alpha_action = 0.5;
  for (int i = 0; i < 20; ++i) {
    const std::size_t ha = action_prog_widen(tree, PlannerTree::root(), p, 6);
    tree.history(PlannerTree::root()).visits += 1;
    tree.action_node(ha).visits += 1;
  }
  const auto& children = tree.history(PlannerTree::root()).children;
  ASSERT_EQ(children.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(tree.action_node(children[i]).action, i);
}

TEST(Ucb, ArgmaxAndTies) {
  PlannerTree tree;
  const std::size_t a0 = tree.add_action(PlannerTree::root(), 0);
  const std::size_t a1 = tree.add_action(PlannerTree::root(), 1);
  tree.history(PlannerTree::root()).visits = 10;
  tree.action_node(a0).visits = 5;
  tree.action_node(a1).visits = 5;
  tree.action_node(a0).value = 1.0;
  tree.action_node(a1).value = 0.0;
  EXPECT_EQ(ucb_select(tree, PlannerTree::root(), 0.0), a0);
  tree.action_node(a1).value = 1.0;
  EXPECT_EQ(ucb_select(tree, PlannerTree::root(), 0.0), a0);
  tree.action_node(a1).visits = 0;
  EXPECT_EQ(ucb_select(tree, PlannerTree::root(), 0.0), a1);
}

TEST(Tree, BestRootActionBreaksTiesByIndex) {
  PlannerTree tree;
  EXPECT_FALSE(tree.best_root_action().has_value());
  tree.action_node(tree.add_action(PlannerTree::root(), 3)).value = 2.0;
  tree.action_node(tree.add_action(PlannerTree::root(), 1)).value = 2.0;
  tree.action_node(tree.add_action(PlannerTree::root(), 2)).value = 1.0;
  EXPECT_EQ(tree.best_root_action(), 1u);
}

TEST(ExpectedGenerative, DiracBeliefMatchesDeterministicStep) {
  loc::WorldConfig cfg;
  cfg.actuation_cov.setZero();
  const auto model = loc::rb_factorization(cfg, loc::default_landmarks());
  const NodeBelief p{Vector::Constant(1, 0.4),
                     quad::GaussianStat::make(Eigen::Vector2d(-3.0, 2.0), Matrix::Zero(2, 2))};
  Rng r1(1), r2(1);
  for (std::size_t i = 0; i < model.num_actions(); ++i) {
    const Vector& a = model.actions()[i];
    const auto step = expected_generative(p, a, model, quad::smolyak_rule(4, 2), r1);
    const Vector s = node_mean_state(p, model);
    const Vector s_next = model.sample_transition(s, a, r2);
    EXPECT_LT((step.next_state - s_next).norm(), 1e-12);
    EXPECT_LT((step.observation - model.noise_free_observation(s_next)).norm(), 1e-12);
    EXPECT_NEAR(step.reward, model.step_reward(s, a, s_next), 1e-12);
  }
}

TEST(ExpectedGenerative, QuadraticRewardIdentity) {
  loc::WorldConfig cfg;
  cfg.state_weights = Eigen::Vector3d(0.3, 0.7, 0.0).asDiagonal();
  const auto model = loc::rb_factorization(cfg, loc::default_landmarks());
  Matrix cov(2, 2);
  cov << 0.5, 0.1, 0.1, 0.3;
  const NodeBelief p{Vector::Constant(1, 0.0), quad::GaussianStat::make(Eigen::Vector2d(5.0, 5.0), cov)};
  const Vector a = model.actions()[1];
  const Matrix psi = cfg.state_weights.topLeftCorner(2, 2);
  const double exact = -(p.theta.mean.dot(psi * p.theta.mean) + (psi * cov).trace()) -
                       a.dot(cfg.action_weights * a);
  for (int level : {2, 3, 4}) {
    Rng rng(1);
    const auto step = expected_generative(p, a, model, RuleSpec::sparse_grid(level).build(2), rng);
    EXPECT_NEAR(step.reward, exact, 1e-10) << level;
  }
}

TEST(ExpectedGenerative, RewardAgainstMonteCarlo) {
  const auto model = world_model();
  Matrix cov(2, 2);
  cov << 0.6, 0.2, 0.2, 0.4;
  const NodeBelief p{Vector::Constant(1, 0.3), quad::GaussianStat::make(Eigen::Vector2d(4.0, -5.0), cov)};
  const Vector a = model.actions()[2];
  Rng rng(2);
  const double r_hat = expected_generative(p, a, model, quad::smolyak_rule(4, 2), rng).reward;
  const Matrix l = quad::psd_sqrt_factor(cov);
  const int n = 1000000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const Vector s = model.compose(p.s_pi, p.theta.mean + l * rng.normal_vector(2));
    const double v = model.reward(s, a);
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / n, se = std::sqrt((sum_sq / n - mean * mean) / n);
  EXPECT_LT(std::abs(r_hat - mean), 3.0 * se);
}

TEST(ExpectedGenerative, DimensionMismatchRaises) {
  const auto model = world_model();
  const NodeBelief p{Vector::Zero(1), quad::GaussianStat::make(Vector::Zero(2), Matrix::Identity(2, 2))};
  Rng rng(1);
  EXPECT_THROW(expected_generative(p, model.actions()[0], model, quad::mean_rule(3), rng),
               std::invalid_argument);
}

TEST(RuleSpec, LevelsMapOntoSparseGrids) {
  EXPECT_EQ(RuleSpec::sparse_grid(1).build(2).size(), 1u);
  EXPECT_EQ(RuleSpec::sparse_grid(3).build(2).size(), quad::smolyak_rule(4, 2).size());
  EXPECT_EQ(RuleSpec::sparse_grid(2, RuleSpec::Growth::Odd).build(2).size(),
            quad::smolyak_rule(3, 2, [](int i) { return 2 * i - 1; }).size());
  EXPECT_EQ(RuleSpec::mean().build(2).size(), 1u);
  EXPECT_EQ((RuleSpec{RuleSpec::Kind::Tensor, 3, RuleSpec::Growth::Linear}).build(2).size(), 9u);
}

TEST(Params, Validation) {
  PlannerParams p;
  EXPECT_NO_THROW(p.validate());
  p.alpha_obs = 1.5;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = PlannerParams{};
  p.k_action = 0.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = PlannerParams{};
  p.max_depth = 0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

namespace {

struct Shadow {
  std::map<std::size_t, std::pair<double, long>> sums;
  double max_abs_total = 0.0;

  BackupObserver observer() {
    return [this](std::size_t ha, double total) {
      auto& s = sums[ha];
      s.first += total;
      s.second += 1;
      max_abs_total = std::max(max_abs_total, std::abs(total));
    };
  }

  void check(const PlannerTree& tree) const {
    for (const auto& [ha, s] : sums) {
      ASSERT_EQ(tree.action_node(ha).visits, s.second);
      ASSERT_NEAR(tree.action_node(ha).value, s.first / static_cast<double>(s.second), 1e-9);
    }
  }
};

double return_bound(const loc::LocalizationModel& model, int depth) {
  const auto& c = model.config();
  const double far = c.state_weights(0, 0) * c.x_max * c.x_max + c.state_weights(1, 1) * c.y_max * c.y_max;
  double act = 0.0;
  for (const auto& a : model.actions()) act = std::max(act, a.dot(c.action_weights * a));
  const double r_max = far + act + c.obstacle_penalty;
  const double g = c.discount;
  return r_max * (1 - std::pow(g, depth)) / (1 - g) + std::abs(c.terminal_reward);
}

PlannerParams random_params(Rng& rng) {
  PlannerParams p;
  p.max_depth = 2 + static_cast<int>(rng.uniform_index(10));
  p.k_action = 0.5 + 4.0 * rng.uniform();
  p.alpha_action = rng.uniform();
  p.k_obs = 0.5 + 4.0 * rng.uniform();
  p.alpha_obs = rng.uniform();
  p.ucb_c = 20.0 * rng.uniform();
  p.simulate_rule = RuleSpec::sparse_grid(1 + static_cast<int>(rng.uniform_index(3)));
  return p;
}

}  // namespace

TEST(TreeInvariants, RbPomcpowRandomizedSimulations) {
  const auto model = world_model();
  const auto belief = world_belief(model, 5);
  Rng meta(77);
  int sims = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const PlannerParams p = random_params(meta);
    RbPomcpowPlanner planner(model, p);
    Shadow shadow;
    planner.set_backup_observer(shadow.observer());
    Rng rng(meta.uniform_index(1u << 30));
    for (int i = 0; i < 1000; ++i, ++sims) {
      const auto& part = belief.particles[rng.uniform_index(belief.size())];
      planner.simulate({part.s_pi, part.theta}, PlannerTree::root(), p.max_depth, rng);
      if (i % 100 == 99) {
        const auto errors = planner.tree().check_invariants(p);
        ASSERT_TRUE(errors.empty()) << errors.front();
      }
    }
    shadow.check(planner.tree());
  }
  EXPECT_EQ(sims, 10000);
}

TEST(TreeInvariants, PomcpowRandomizedSimulations) {
  const auto model = world_model();
  const auto belief = world_belief(model, 6);
  Rng meta(78);
  for (int trial = 0; trial < 10; ++trial) {
    const PlannerParams p = random_params(meta);
    PomcpowPlanner planner(model, p);
    Shadow shadow;
    planner.set_backup_observer(shadow.observer());
    Rng rng(meta.uniform_index(1u << 30));
    for (int i = 0; i < 1000; ++i) {
      const auto& part = belief.particles[rng.uniform_index(belief.size())];
      const Vector s = model.canonicalize(model.compose(part.s_pi, part.theta.mean));
      planner.simulate(s, PlannerTree::root(), p.max_depth, rng);
      if (i % 100 == 99) {
        const auto errors = planner.tree().check_invariants(p);
        ASSERT_TRUE(errors.empty()) << errors.front();
      }
    }
    shadow.check(planner.tree());
    EXPECT_LE(shadow.max_abs_total, return_bound(model, p.max_depth));
  }
}

TEST(TreeInvariants, RbPomcpRandomizedSimulations) {
  const auto model = world_model();
  const auto belief = world_belief(model, 8);
  Rng meta(79);
  for (int trial = 0; trial < 10; ++trial) {
    const PlannerParams p = random_params(meta);
    RbPomcpPlanner planner(model, p);
    Shadow shadow;
    planner.set_backup_observer(shadow.observer());
    Rng rng(meta.uniform_index(1u << 30));
    for (int i = 0; i < 1000; ++i) {
      const auto& part = belief.particles[rng.uniform_index(belief.size())];
      planner.simulate({part.s_pi, part.theta}, PlannerTree::root(), 0, rng);
      if (i % 100 == 99) {
        const auto errors = planner.tree().check_invariants(p, false);
        ASSERT_TRUE(errors.empty()) << errors.front();
      }
    }
    shadow.check(planner.tree());
  }
}

TEST(WeightedSampler, FrequenciesFollowWeights) {
  const std::vector<double> w{1.0, 0.0, 3.0};
  const WeightedSampler s(w);
  Rng rng(1);
  std::vector<int> counts(3, 0);
  for (int i = 0; i < 40000; ++i) counts[s.sample(rng)]++;
  EXPECT_EQ(counts[1], 0);
  EXPECT_NEAR(counts[2] / 40000.0, 0.75, 0.01);
}
