#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cooplane/core.hpp"
#include "cooplane/predict.hpp"
#include "cooplane/refgen.hpp"

namespace cooplane {

struct CostWeights {
  double lambda_s = 1.0;
  double lambda_e = 1.0;
  double lambda_c = 1.0;
  double kappa_s_lon = 100.0;
  double kappa_s_lat = 100.0;
  double kappa_e = 1.0;
  double kappa_c_lon = 1.0;
  double kappa_c_lat = 1.0;
  double v_des = 25.0;
  // Use min(dv / ds, 0) with dv = v_ego - v_other for both neighbors, as the
  // formula is printed. Off by default: that form rewards closing in.
  bool printed_sign = false;
  double min_distance = 0.1;  // floor on the neighbor distance, m
};

void validate(const CostWeights& weights);

struct CostBreakdown {
  int index = 0;
  LateralAction lat = LateralAction::kKeep;
  LongitudinalOption lon = LongitudinalOption::kKeepSpeed;
  double J_s_lon = 0.0;
  double J_s_lat = 0.0;
  double J_s = 0.0;
  double J_e = 0.0;
  double J_c = 0.0;
  double J_d = 0.0;
};

/// Vehicle pose at one prediction step, as seen by the neighbor search.
struct NeighborView {
  int id = 0;
  VehicleState state;
};

struct Neighbors {
  std::optional<NeighborView> pv_lon, fv_lon, pv_lat, fv_lat;
};

/// Nearest preceding/following vehicle by |dx| in `lane` and in
/// `target_lane` (lat roles are skipped when target_lane is empty or equal to
/// lane). Membership is the nearest lane center of each vehicle's y.
Neighbors find_neighbors(const VehicleState& ego, int lane, std::optional<int> target_lane,
                         const std::vector<NeighborView>& vehicles, const RoadGeometry& road);

struct SafetyCost {
  double lon = 0.0;
  double lat = 0.0;
  double total = 0.0;
};

/// Sums over k = 1..P. The lateral roles count only while the ego (at step
/// k) is not yet in the target lane, so a neighbor is never charged twice.
SafetyCost safety_cost(const DecisionCandidate& candidate, const PredictionResult& predictions,
                       const RoadGeometry& road, const CostWeights& weights);

double efficiency_cost(const DecisionCandidate& candidate, const PredictionResult& predictions,
                       const CostWeights& weights);

/// Jerks from second differences of the reference velocity components over
/// samples 1..P (sample 0 is the measured state).
double comfort_cost(const DecisionCandidate& candidate, const CostWeights& weights);

CostBreakdown evaluate_candidate(const DecisionCandidate& candidate,
                                 const PredictionResult& predictions, const RoadGeometry& road,
                                 const CostWeights& weights);

struct Selection {
  std::size_t chosen = 0;  // position in the candidate list
  std::vector<PredictionResult> predictions;
  std::vector<CostBreakdown> costs;
};

/// Predicts and scores every candidate, returns argmin J_d. Ties prefer
/// KEEP, then the smaller speed change, then the lower index.
Selection select_decision(const std::vector<DecisionCandidate>& candidates,
                          const WorldState& observed, const Predictor& predictor,
                          const CostWeights& weights, int horizon);

std::string to_json(const std::vector<CostBreakdown>& costs);

}  // namespace cooplane
