#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "rbpomdp/localization/localization.hpp"
#include "rbpomdp/planners/params.hpp"

namespace rbpomdp::harness {

enum class FilterKind { Sirpf, Rbpf, Oracle };
enum class PlannerKind { Pomcpow, RbPomcpow, RbPomcp, Heuristic };

std::string to_string(FilterKind kind);
std::string to_string(PlannerKind kind);
FilterKind parse_filter_kind(const std::string& name);
PlannerKind parse_planner_kind(const std::string& name);

struct FilterConfig {
  FilterKind kind = FilterKind::Rbpf;
  int particles = 100;
  double resample_threshold = 0.5;
  double bandwidth = 0.01;  // SIRPF regularization std, every dimension
  bool consistency = true;  // compute NEES/NIS per step
};

/// One experiment: scenario, belief updater, planner and episode fan-out.
struct ExperimentConfig {
  localization::WorldConfig world;
  localization::LandmarkMap map = localization::default_landmarks();
  FilterConfig filter;
  PlannerKind planner = PlannerKind::RbPomcpow;
  planners::PlannerParams planner_params;
  int episodes = 20;
  std::uint64_t base_seed = 1;
  std::string output_dir = "out";
  int workers = 1;

  /// Throws std::invalid_argument on any inconsistent field.
  void validate() const;
};

inline constexpr int kConfigSchemaVersion = 1;

/// Missing keys keep their defaults; unknown keys are rejected so typos do
/// not silently fall back.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::string& path);

/// FNV-1a over the canonical JSON dump, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

}  // namespace rbpomdp::harness
