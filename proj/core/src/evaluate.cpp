#include "cooplane/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <tuple>

#include <nlohmann/json.hpp>

namespace cooplane {
namespace {

void pick_nearest(std::optional<NeighborView>& slot, const NeighborView& cand, double ego_x) {
  if (!slot || std::abs(cand.state.x - ego_x) < std::abs(slot->state.x - ego_x)) slot = cand;
}

double pair_term(double closing, double ds, const CostWeights& w) {
  ds = std::max(ds, w.min_distance);
  return std::max(closing, 0.0) / ds;
}

double printed_term(double v_ego, double v_other, double ds, const CostWeights& w) {
  ds = std::max(ds, w.min_distance);
  return std::min((v_ego - v_other) / ds, 0.0);
}

double distance(const VehicleState& a, const VehicleState& b) { return std::hypot(a.x - b.x, a.y - b.y); }

double role_cost(const VehicleState& ego, const std::optional<NeighborView>& pv,
                 const std::optional<NeighborView>& fv, const CostWeights& w) {
  double sum = 0.0;
  if (pv) {
    const double ds = distance(ego, pv->state);
    sum += w.printed_sign ? printed_term(ego.v, pv->state.v, ds, w) : pair_term(ego.v - pv->state.v, ds, w);
  }
  if (fv) {
    const double ds = distance(ego, fv->state);
    sum += w.printed_sign ? printed_term(ego.v, fv->state.v, ds, w) : pair_term(fv->state.v - ego.v, ds, w);
  }
  return sum;
}

std::size_t horizon_of(const DecisionCandidate& c, const PredictionResult& p) {
  std::size_t n = c.reference.size();
  for (const auto& v : p.vehicles) {
    if (v.trajectory.start_step() != c.reference.start_step() || v.trajectory.dt() != c.reference.dt()) {
      throw std::invalid_argument("prediction not aligned with the candidate");
    }
    n = std::min(n, v.trajectory.size());
  }
  return n == 0 ? 0 : n - 1;
}

}  // namespace

void validate(const CostWeights& w) {
  for (double x : {w.lambda_s, w.lambda_e, w.lambda_c, w.kappa_s_lon, w.kappa_s_lat, w.kappa_e,
                   w.kappa_c_lon, w.kappa_c_lat}) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw std::invalid_argument("cost weights must be non-negative");
  }
  if (!(w.v_des >= 0.0) || !(w.min_distance > 0.0)) throw std::invalid_argument("invalid v_des or distance floor");
}

Neighbors find_neighbors(const VehicleState& ego, int lane, std::optional<int> target_lane,
                         const std::vector<NeighborView>& vehicles, const RoadGeometry& road) {
  Neighbors out;
  const bool use_lat = target_lane && *target_lane != lane;
  for (const auto& v : vehicles) {
    const int l = road.lane_of(v.state.y);
    const double dx = v.state.x - ego.x;
    if (l == lane) pick_nearest(dx >= 0.0 ? out.pv_lon : out.fv_lon, v, ego.x);
    if (use_lat && l == *target_lane) pick_nearest(dx >= 0.0 ? out.pv_lat : out.fv_lat, v, ego.x);
  }
  return out;
}

SafetyCost safety_cost(const DecisionCandidate& c, const PredictionResult& p, const RoadGeometry& road,
                       const CostWeights& w) {
  const std::size_t P = horizon_of(c, p);
  SafetyCost out;
  std::vector<NeighborView> views(p.vehicles.size());
  for (std::size_t k = 1; k <= P; ++k) {
    for (std::size_t i = 0; i < p.vehicles.size(); ++i) views[i] = {p.vehicles[i].id, p.vehicles[i].trajectory[k]};
    const VehicleState& ego = c.reference[k];
    const int lane = road.lane_of(ego.y);
    const Neighbors nb = find_neighbors(ego, lane, c.target_lane, views, road);
    out.lon += role_cost(ego, nb.pv_lon, nb.fv_lon, w);
    out.lat += role_cost(ego, nb.pv_lat, nb.fv_lat, w);
  }
  out.lon *= w.kappa_s_lon;
  out.lat *= w.kappa_s_lat;
  const double eta = c.is_lane_change() ? 1.0 : 0.0;
  out.total = out.lon + eta * eta * out.lat;
  return out;
}

double efficiency_cost(const DecisionCandidate& c, const PredictionResult& p, const CostWeights& w) {
  const std::size_t P = horizon_of(c, p);
  double ego = 0.0;
  for (std::size_t k = 1; k <= P; ++k) ego += std::pow(c.reference[k].v - w.v_des, 2);
  double others = 0.0;
  for (const auto& v : p.vehicles)
    for (std::size_t k = 1; k <= P; ++k) others += std::pow(v.trajectory[k].v - w.v_des, 2);
  const double n = static_cast<double>(p.vehicles.size());
  return w.kappa_e * ego + (n > 0.0 ? w.kappa_e / n * others : 0.0);
}

double comfort_cost(const DecisionCandidate& c, const CostWeights& w) {
  const auto& ref = c.reference;
  if (ref.size() < 4) throw std::invalid_argument("comfort cost needs at least four samples");
  const double dt = ref.dt();
  auto vel = [&](std::size_t k) {
    return std::pair{ref[k].v * std::cos(ref[k].psi), ref[k].v * std::sin(ref[k].psi)};
  };
  // Sample 0 is the measured state, whose heading need not match the
  // profile; differences start from sample 1.
  double sum = 0.0;
  for (std::size_t k = 3; k < ref.size(); ++k) {
    const auto [x0, y0] = vel(k - 2);
    const auto [x1, y1] = vel(k - 1);
    const auto [x2, y2] = vel(k);
    const double jx = (x2 - 2.0 * x1 + x0) / (dt * dt);
    const double jy = (y2 - 2.0 * y1 + y0) / (dt * dt);
    sum += w.kappa_c_lon * jx * jx + w.kappa_c_lat * jy * jy;
  }
  return sum;
}

CostBreakdown evaluate_candidate(const DecisionCandidate& c, const PredictionResult& p,
                                 const RoadGeometry& road, const CostWeights& w) {
  CostBreakdown b;
  b.index = c.index;
  b.lat = c.lat;
  b.lon = c.lon;
  const SafetyCost s = safety_cost(c, p, road, w);
  b.J_s_lon = s.lon;
  b.J_s_lat = s.lat;
  b.J_s = s.total;
  b.J_e = efficiency_cost(c, p, w);
  b.J_c = comfort_cost(c, w);
  b.J_d = w.lambda_s * b.J_s + w.lambda_e * b.J_e + w.lambda_c * b.J_c;
  return b;
}

Selection select_decision(const std::vector<DecisionCandidate>& candidates, const WorldState& observed,
                          const Predictor& predictor, const CostWeights& weights, int horizon) {
  if (candidates.empty()) throw std::invalid_argument("empty candidate set");
  validate(weights);
  Selection sel;
  for (const auto& c : candidates) {
    PredictionRequest req{c.reference, observed, {}, horizon};
    sel.predictions.push_back(predictor.predict(req));
    sel.costs.push_back(evaluate_candidate(c, sel.predictions.back(), observed.road, weights));
  }
  auto key = [&](std::size_t i) {
    const auto& c = candidates[i];
    return std::tuple{sel.costs[i].J_d, c.lat != LateralAction::kKeep, std::abs(c.v_x1 - c.v_x0), c.index};
  };
  for (std::size_t i = 1; i < candidates.size(); ++i)
    if (key(i) < key(sel.chosen)) sel.chosen = i;
  return sel;
}

std::string to_json(const std::vector<CostBreakdown>& costs) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : costs) {
    arr.push_back({{"index", c.index},
                   {"lateral", std::string(to_string(c.lat))},
                   {"longitudinal", std::string(to_string(c.lon))},
                   {"J_s_lon", c.J_s_lon},
                   {"J_s_lat", c.J_s_lat},
                   {"J_s", c.J_s},
                   {"J_e", c.J_e},
                   {"J_c", c.J_c},
                   {"J_d", c.J_d}});
  }
  return arr.dump(2);
}

}  // namespace cooplane
