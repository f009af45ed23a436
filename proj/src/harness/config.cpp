#include "rbpomdp/harness/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>

namespace rbpomdp::harness {

using nlohmann::json;

std::string to_string(FilterKind kind) {
  switch (kind) {
    case FilterKind::Sirpf: return "sirpf";
    case FilterKind::Rbpf: return "rbpf";
    case FilterKind::Oracle: return "oracle";
  }
  return "unknown";
}

std::string to_string(PlannerKind kind) {
  switch (kind) {
    case PlannerKind::Pomcpow: return "pomcpow";
    case PlannerKind::RbPomcpow: return "rb-pomcpow";
    case PlannerKind::RbPomcp: return "rb-pomcp";
    case PlannerKind::Heuristic: return "heuristic";
  }
  return "unknown";
}

FilterKind parse_filter_kind(const std::string& name) {
  if (name == "sirpf") return FilterKind::Sirpf;
  if (name == "rbpf") return FilterKind::Rbpf;
  if (name == "oracle") return FilterKind::Oracle;
  throw std::invalid_argument("unknown filter kind: " + name);
}

PlannerKind parse_planner_kind(const std::string& name) {
  if (name == "pomcpow") return PlannerKind::Pomcpow;
  if (name == "rb-pomcpow") return PlannerKind::RbPomcpow;
  if (name == "rb-pomcp") return PlannerKind::RbPomcp;
  if (name == "heuristic") return PlannerKind::Heuristic;
  throw std::invalid_argument("unknown planner kind: " + name);
}

void ExperimentConfig::validate() const {
  world.validate();
  map.validate();
  if (filter.particles <= 0 && filter.kind != FilterKind::Oracle) {
    throw std::invalid_argument("filter particles must be positive");
  }
  if (!(filter.resample_threshold >= 0.0 && filter.resample_threshold <= 1.0)) {
    throw std::invalid_argument("resample threshold must lie in [0, 1]");
  }
  if (!(filter.bandwidth >= 0.0)) {
    throw std::invalid_argument("bandwidth must be non-negative");
  }
  if (planner != PlannerKind::Heuristic) planner_params.validate();
  if ((planner == PlannerKind::RbPomcpow || planner == PlannerKind::RbPomcp) &&
      filter.kind == FilterKind::Sirpf) {
    throw std::invalid_argument(
        "Rao-Blackwellized planners need an rbpf or oracle belief");
  }
  if (episodes <= 0) throw std::invalid_argument("episodes must be positive");
  if (workers <= 0) throw std::invalid_argument("workers must be positive");
}

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) {
      throw std::invalid_argument("unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

Eigen::Vector2d vec2(const json& j) {
  if (!j.is_array() || j.size() != 2) {
    throw std::invalid_argument("expected a 2-element array");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

json diag_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(m(i, i));
  return out;
}

Matrix diag_from(const json& j, Eigen::Index n) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n) {
    throw std::invalid_argument("diagonal weight has the wrong length");
  }
  Vector d(n);
  for (Eigen::Index i = 0; i < n; ++i) d[i] = j[static_cast<std::size_t>(i)].get<double>();
  return d.asDiagonal();
}

localization::WorldConfig world_from(const json& j) {
  check_keys(j,
             {"dt", "box", "goal_radius", "obstacle_center", "obstacle_radius",
              "obstacle_penalty", "terminal_reward", "state_weights",
              "action_weights", "range_var", "bearing_var", "actuation_mean",
              "actuation_var", "discount", "speeds", "turn_rates", "start",
              "initial_position_std", "max_steps", "landmarks"},
             "scenario");
  localization::WorldConfig w;
  read(j, "dt", w.dt);
  if (j.contains("box")) {
    const auto b = j.at("box").get<std::vector<double>>();
    if (b.size() != 4) throw std::invalid_argument("box is [x_min, x_max, y_min, y_max]");
    w.x_min = b[0];
    w.x_max = b[1];
    w.y_min = b[2];
    w.y_max = b[3];
  }
  read(j, "goal_radius", w.goal_radius);
  if (j.contains("obstacle_center")) w.obstacle_center = vec2(j.at("obstacle_center"));
  read(j, "obstacle_radius", w.obstacle_radius);
  read(j, "obstacle_penalty", w.obstacle_penalty);
  read(j, "terminal_reward", w.terminal_reward);
  if (j.contains("state_weights")) w.state_weights = diag_from(j.at("state_weights"), 3);
  if (j.contains("action_weights")) w.action_weights = diag_from(j.at("action_weights"), 2);
  read(j, "range_var", w.range_var);
  read(j, "bearing_var", w.bearing_var);
  if (j.contains("actuation_mean")) w.actuation_mean = vec2(j.at("actuation_mean"));
  if (j.contains("actuation_var")) {
    const Eigen::Vector2d v = vec2(j.at("actuation_var"));
    w.actuation_cov = v.asDiagonal();
  }
  read(j, "discount", w.discount);
  read(j, "speeds", w.speeds);
  read(j, "turn_rates", w.turn_rates);
  if (j.contains("start")) {
    const auto s = j.at("start").get<std::vector<double>>();
    if (s.size() != 3) throw std::invalid_argument("start is [xi, eta, theta]");
    w.start = Eigen::Vector3d(s[0], s[1], s[2]);
  }
  read(j, "initial_position_std", w.initial_position_std);
  read(j, "max_steps", w.max_steps);
  return w;
}

json world_to(const localization::WorldConfig& w,
              const localization::LandmarkMap& map) {
  json lm = json::array();
  for (const auto& l : map.landmarks) lm.push_back({l.x(), l.y()});
  return json{
      {"dt", w.dt},
      {"box", {w.x_min, w.x_max, w.y_min, w.y_max}},
      {"goal_radius", w.goal_radius},
      {"obstacle_center", {w.obstacle_center.x(), w.obstacle_center.y()}},
      {"obstacle_radius", w.obstacle_radius},
      {"obstacle_penalty", w.obstacle_penalty},
      {"terminal_reward", w.terminal_reward},
      {"state_weights", diag_json(w.state_weights)},
      {"action_weights", diag_json(w.action_weights)},
      {"range_var", w.range_var},
      {"bearing_var", w.bearing_var},
      {"actuation_mean", {w.actuation_mean.x(), w.actuation_mean.y()}},
      {"actuation_var", {w.actuation_cov(0, 0), w.actuation_cov(1, 1)}},
      {"discount", w.discount},
      {"speeds", w.speeds},
      {"turn_rates", w.turn_rates},
      {"start", {w.start.x(), w.start.y(), w.start.z()}},
      {"initial_position_std", w.initial_position_std},
      {"max_steps", w.max_steps},
      {"landmarks", lm},
  };
}

planners::RuleSpec rule_from(const json& j) {
  check_keys(j, {"kind", "level", "growth"}, "rule");
  planners::RuleSpec r;
  const std::string kind = j.value("kind", std::string("mean"));
  if (kind == "mean") {
    r = planners::RuleSpec::mean();
  } else if (kind == "sparse-grid") {
    r.kind = planners::RuleSpec::Kind::SparseGrid;
  } else if (kind == "tensor") {
    r.kind = planners::RuleSpec::Kind::Tensor;
  } else {
    throw std::invalid_argument("unknown rule kind: " + kind);
  }
  read(j, "level", r.level);
  const std::string growth = j.value("growth", std::string("linear"));
  if (growth == "linear") {
    r.growth = planners::RuleSpec::Growth::Linear;
  } else if (growth == "odd") {
    r.growth = planners::RuleSpec::Growth::Odd;
  } else {
    throw std::invalid_argument("unknown growth rule: " + growth);
  }
  return r;
}

json rule_to(const planners::RuleSpec& r) {
  std::string kind = "mean";
  if (r.kind == planners::RuleSpec::Kind::SparseGrid) kind = "sparse-grid";
  if (r.kind == planners::RuleSpec::Kind::Tensor) kind = "tensor";
  return json{{"kind", kind},
              {"level", r.level},
              {"growth", r.growth == planners::RuleSpec::Growth::Odd ? "odd" : "linear"}};
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  check_keys(j, {"schema_version", "scenario", "filter", "planner", "experiment"},
             "config");
  const int version = j.value("schema_version", kConfigSchemaVersion);
  if (version != kConfigSchemaVersion) {
    throw std::invalid_argument("unsupported schema_version " +
                                std::to_string(version));
  }
  ExperimentConfig cfg;
  if (j.contains("scenario")) {
    const json& s = j.at("scenario");
    cfg.world = world_from(s);
    if (s.contains("landmarks")) {
      cfg.map.landmarks.clear();
      for (const auto& l : s.at("landmarks")) cfg.map.landmarks.push_back(vec2(l));
    }
  }
  if (j.contains("filter")) {
    const json& f = j.at("filter");
    check_keys(f, {"kind", "particles", "resample_threshold", "bandwidth", "consistency"},
               "filter");
    if (f.contains("kind")) cfg.filter.kind = parse_filter_kind(f.at("kind"));
    read(f, "particles", cfg.filter.particles);
    read(f, "resample_threshold", cfg.filter.resample_threshold);
    read(f, "bandwidth", cfg.filter.bandwidth);
    read(f, "consistency", cfg.filter.consistency);
  }
  if (j.contains("planner")) {
    const json& p = j.at("planner");
    check_keys(p,
               {"kind", "iterations", "max_depth", "ucb_c", "k_action",
                "alpha_action", "k_obs", "alpha_obs", "epsilon", "simulate_rule",
                "rollout_rule", "rollout_policy", "ukf"},
               "planner");
    auto& pp = cfg.planner_params;
    if (p.contains("kind")) cfg.planner = parse_planner_kind(p.at("kind"));
    read(p, "iterations", pp.n_iterations);
    read(p, "max_depth", pp.max_depth);
    read(p, "ucb_c", pp.ucb_c);
    read(p, "k_action", pp.k_action);
    read(p, "alpha_action", pp.alpha_action);
    read(p, "k_obs", pp.k_obs);
    read(p, "alpha_obs", pp.alpha_obs);
    read(p, "epsilon", pp.epsilon);
    if (p.contains("simulate_rule")) pp.simulate_rule = rule_from(p.at("simulate_rule"));
    if (p.contains("rollout_rule")) pp.rollout_rule = rule_from(p.at("rollout_rule"));
    if (p.contains("rollout_policy")) {
      const std::string policy = p.at("rollout_policy");
      if (policy == "heuristic") {
        pp.rollout_policy = planners::RolloutPolicy::Heuristic;
      } else if (policy == "random") {
        pp.rollout_policy = planners::RolloutPolicy::Random;
      } else {
        throw std::invalid_argument("unknown rollout policy: " + policy);
      }
    }
    if (p.contains("ukf")) {
      const json& u = p.at("ukf");
      check_keys(u, {"alpha", "beta", "kappa"}, "ukf");
      read(u, "alpha", pp.ukf.alpha);
      read(u, "beta", pp.ukf.beta);
      read(u, "kappa", pp.ukf.kappa);
    }
  }
  if (j.contains("experiment")) {
    const json& e = j.at("experiment");
    check_keys(e, {"episodes", "base_seed", "output_dir", "workers"}, "experiment");
    read(e, "episodes", cfg.episodes);
    read(e, "base_seed", cfg.base_seed);
    read(e, "output_dir", cfg.output_dir);
    read(e, "workers", cfg.workers);
  }
  cfg.validate();
  return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
  const auto& pp = cfg.planner_params;
  return json{
      {"schema_version", kConfigSchemaVersion},
      {"scenario", world_to(cfg.world, cfg.map)},
      {"filter",
       {{"kind", to_string(cfg.filter.kind)},
        {"particles", cfg.filter.particles},
        {"resample_threshold", cfg.filter.resample_threshold},
        {"bandwidth", cfg.filter.bandwidth},
        {"consistency", cfg.filter.consistency}}},
      {"planner",
       {{"kind", to_string(cfg.planner)},
        {"iterations", pp.n_iterations},
        {"max_depth", pp.max_depth},
        {"ucb_c", pp.ucb_c},
        {"k_action", pp.k_action},
        {"alpha_action", pp.alpha_action},
        {"k_obs", pp.k_obs},
        {"alpha_obs", pp.alpha_obs},
        {"epsilon", pp.epsilon},
        {"simulate_rule", rule_to(pp.simulate_rule)},
        {"rollout_rule", rule_to(pp.rollout_rule)},
        {"rollout_policy",
         pp.rollout_policy == planners::RolloutPolicy::Heuristic ? "heuristic" : "random"},
        {"ukf", {{"alpha", pp.ukf.alpha}, {"beta", pp.ukf.beta}, {"kappa", pp.ukf.kappa}}}}},
      {"experiment",
       {{"episodes", cfg.episodes},
        {"base_seed", cfg.base_seed},
        {"output_dir", cfg.output_dir},
        {"workers", cfg.workers}}},
  };
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config parse error in " + path + ": " + e.what());
  }
  try {
    return config_from_json(j);
  } catch (const json::exception& e) {
    throw std::invalid_argument("config type error in " + path + ": " + e.what());
  }
}

std::string config_hash(const ExperimentConfig& cfg) {
  json j = config_to_json(cfg);
  // Execution-only fields do not change results.
  j["experiment"].erase("workers");
  j["experiment"].erase("output_dir");
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace rbpomdp::harness
