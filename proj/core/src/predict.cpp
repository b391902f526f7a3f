#include "cooplane/predict.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cooplane {
namespace {

void check_request(const PredictionRequest& req) {
  if (req.horizon < 1) throw std::invalid_argument("prediction horizon must be >= 1");
  if (req.ego_reference.size() < static_cast<std::size_t>(req.horizon) + 1) {
    throw std::invalid_argument("ego reference shorter than the prediction horizon");
  }
}

}  // namespace

std::string_view to_string(PredictorKind kind) {
  return kind == PredictorKind::kInteractive ? "INTERACTIVE" : "CONSTANT_VELOCITY";
}

const PredictedVehicle* PredictionResult::find(int id) const {
  for (const auto& v : vehicles)
    if (v.id == id) return &v;
  return nullptr;
}

void rule_based_one_step(WorldState& world) {
  world.recycle.enabled = false;
  step(world);
}

PredictionResult predict_constant_velocity(const PredictionRequest& req) {
  check_request(req);
  const double dt = req.ego_reference.dt();
  const auto n = static_cast<std::size_t>(req.horizon) + 1;
  PredictionResult out;
  out.kind = PredictorKind::kConstantVelocity;
  for (const auto& v : req.world.vehicles) {
    std::vector<VehicleState> states;
    states.reserve(n);
    const VehicleState s0 = v.state;
    const double speed = v.stationary ? 0.0 : s0.v;
    for (std::size_t k = 0; k < n; ++k) {
      VehicleState s = s0;
      const double t = static_cast<double>(k) * dt;
      s.x += speed * std::cos(s0.psi) * t;
      s.y += speed * std::sin(s0.psi) * t;
      s.v = speed;
      states.push_back(s);
    }
    out.vehicles.push_back(
        {v.id, v.geom, v.stationary, Trajectory(req.ego_reference.start_step(), dt, std::move(states))});
  }
  return out;
}

PredictionResult predict_interactive(const PredictionRequest& req, const OneStepModel& model) {
  check_request(req);
  const double dt = req.ego_reference.dt();
  const auto n = static_cast<std::size_t>(req.horizon) + 1;

  WorldState w = req.world;
  w.dt = dt;
  w.recycle.enabled = false;
  w.ego.state = req.ego_reference[0];
  w.ego.lane = w.road.lane_of(w.ego.state.y);

  std::vector<std::vector<VehicleState>> states(w.vehicles.size());
  for (std::size_t i = 0; i < w.vehicles.size(); ++i) {
    states[i].reserve(n);
    states[i].push_back(w.vehicles[i].state);
  }
  for (std::size_t k = 1; k < n; ++k) {
    model(w);
    if (w.vehicles.size() != states.size()) throw std::logic_error("one-step model changed the vehicle set");
    w.ego.state = req.ego_reference[k];
    w.ego.lane = w.road.lane_of(w.ego.state.y);
    for (std::size_t i = 0; i < w.vehicles.size(); ++i) states[i].push_back(w.vehicles[i].state);
  }

  PredictionResult out;
  out.kind = PredictorKind::kInteractive;
  for (std::size_t i = 0; i < w.vehicles.size(); ++i) {
    const auto& v = req.world.vehicles[i];
    out.vehicles.push_back({v.id, v.geom, v.stationary,
                            Trajectory(req.ego_reference.start_step(), dt, std::move(states[i]))});
  }
  return out;
}

WorldState observed_world(const WorldState& truth, const std::map<int, DriverParams>& nominal) {
  WorldState w = truth;
  w.recycle.enabled = false;
  for (auto& v : w.vehicles) {
    auto it = nominal.find(v.id);
    v.params = it != nominal.end() ? it->second : DriverParams{};
    v.params.v0 = std::max(v.params.v0, v.state.v);
  }
  return w;
}

}  // namespace cooplane
