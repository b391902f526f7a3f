#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cooplane/evaluate.hpp"
#include "cooplane/planner.hpp"
#include "cooplane/refgen.hpp"
#include "cooplane/scenario.hpp"

namespace cooplane {

enum class Policy { kProposed, kProposedWoIp, kIdmMobil };

std::string_view to_string(Policy policy);
/// Accepts "PROPOSED", "PROPOSED_WO_IP", "IDM_MOBIL" in any case.
Policy parse_policy(std::string_view name);

struct EpisodeConfig {
  Scenario scenario;
  Policy policy = Policy::kProposed;
  std::uint64_t seed = 0;  // background traffic
  double t_replan = 1.0;   // s
  int prediction_horizon = 60;  // P, decision layer
  CostWeights weights;     // v_des is taken from the scenario
  RefgenParams refgen;
  MpcConfig mpc;
  bool record_trace = false;

  void validate() const;
};

struct DecisionRecord {
  std::int64_t step = 0;
  int chosen_index = 4;
  LateralAction lat = LateralAction::kKeep;
  LongitudinalOption lon = LongitudinalOption::kKeepSpeed;
  bool abort = false;  // triggered by the proximity check during a lane change
  std::vector<CostBreakdown> costs;
};

struct EpisodeMetrics {
  std::string scenario;
  Policy policy = Policy::kProposed;
  std::uint64_t seed = 0;
  int steps = 0;
  double ego_mean_speed = 0.0;
  double others_mean_speed = 0.0;  // moving vehicles only
  double min_distance = 0.0;       // ego vs everyone, every step
  bool collision = false;          // min_distance <= 0
  int lane_changes = 0;
  std::optional<double> first_lane_change_time;  // s, when the ego's lane index first changed
  int initial_lane = 0;
  int final_lane = 0;
  double final_speed = 0.0;
  double min_speed = 0.0;
  int solver_failures = 0;  // planner steps that fell back to braking
  int planner_steps = 0;
  int optimal_steps = 0;
  // Oracle distance between the plan and the predicted obstacles, minimum
  // over every OPTIMAL_LOCAL step; +inf when there was none.
  double min_planned_distance_optimal = 0.0;
  double max_certificate_residual = 0.0;
  double mean_solve_time = 0.0;
  double max_solve_time = 0.0;
  int aborts = 0;
  std::vector<DecisionRecord> decisions;
};

struct TraceRow {
  std::int64_t step = 0;
  int vehicle_id = 0;
  VehicleState state;
  double a = 0.0;
  double delta = 0.0;
};

struct EpisodeResult {
  EpisodeMetrics metrics;
  std::vector<TraceRow> trace;  // empty unless record_trace
  std::string plan_log;         // CSV, empty unless record_trace
};

EpisodeResult run_episode(const EpisodeConfig& cfg);

/// Summary of one policy over a batch.
struct PolicySummary {
  Policy policy = Policy::kProposed;
  int episodes = 0;
  double ego_mean_speed = 0.0;
  double others_mean_speed = 0.0;
  double min_distance = 0.0;
  int collisions = 0;
  double lane_changes = 0.0;  // per episode
  int solver_failures = 0;
  int planner_steps = 0;
  double min_planned_distance_optimal = 0.0;
  double max_certificate_residual = 0.0;
  double mean_solve_time = 0.0;
};

struct BatchConfig {
  int episodes = 100;
  std::vector<Policy> policies{Policy::kProposed, Policy::kProposedWoIp, Policy::kIdmMobil};
  std::uint64_t seed_base = 1;
  // Scenario of episode i; its seed is seed_base + i for every policy.
  std::function<Scenario(int episode, std::uint64_t seed)> scenario;
  EpisodeConfig base;  // scenario, policy and seed are overwritten
  int threads = 0;     // 0: hardware concurrency
  std::function<void(const EpisodeMetrics&)> on_episode;  // called under a lock
};

struct BatchReport {
  std::vector<EpisodeMetrics> episodes;  // policy-major, then episode index
  std::vector<PolicySummary> summary;
};

BatchReport run_batch(const BatchConfig& cfg);

std::vector<PolicySummary> summarize(const std::vector<EpisodeMetrics>& episodes);

}  // namespace cooplane
