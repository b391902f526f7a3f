#include "cooplane/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace cooplane {
namespace {

struct Leader {
  int id = 0;
  double speed = 0.0;
  double gap = 0.0;
};

struct Accel {
  double value = 0.0;
  bool emergency = false;
};

template <typename F>
void for_each_agent(const WorldState& world, F&& f) {
  f(world.ego);
  for (const auto& v : world.vehicles) f(v);
}

const TrafficVehicle& agent(const WorldState& world, int id) {
  if (id == kEgoId) return world.ego;
  const TrafficVehicle* v = world.find(id);
  if (v == nullptr) throw std::out_of_range("no vehicle with id " + std::to_string(id));
  return *v;
}

// Lanes whose occupants a vehicle reacts to: the lanes its footprint covers
// plus the lane it is moving into.
std::vector<int> attended_lanes(const RoadGeometry& road, const TrafficVehicle& v) {
  std::vector<int> lanes;
  for (int lane = 0; lane < road.lane_count(); ++lane) {
    if (occupies_lane(road, v.state, v.geom, lane) || lane == v.lane) lanes.push_back(lane);
  }
  return lanes;
}

// Nearest agent ahead of `from` (center strictly ahead) occupying `lane`.
// `skip` is excluded as well as `from` itself.
std::optional<Leader> leader_in_lane(const WorldState& world, const TrafficVehicle& from, int lane,
                                     std::optional<int> skip = std::nullopt) {
  std::optional<Leader> best;
  double best_dx = std::numeric_limits<double>::infinity();
  for_each_agent(world, [&](const TrafficVehicle& other) {
    if (other.id == from.id || (skip && other.id == *skip)) return;
    const double dx = other.state.x - from.state.x;
    if (dx <= 0.0 || dx >= best_dx) return;
    if (!occupies_lane(world.road, other.state, other.geom, lane)) return;
    best_dx = dx;
    best = Leader{other.id, other.state.v, bumper_gap(from.state, from.geom, other.state, other.geom)};
  });
  return best;
}

// Nearest agent behind `of` (center strictly behind) occupying `lane`.
const TrafficVehicle* follower_in_lane(const WorldState& world, const TrafficVehicle& of, int lane) {
  const TrafficVehicle* best = nullptr;
  double best_dx = std::numeric_limits<double>::infinity();
  for_each_agent(world, [&](const TrafficVehicle& other) {
    if (other.id == of.id) return;
    const double dx = of.state.x - other.state.x;
    if (dx <= 0.0 || dx >= best_dx) return;
    if (!occupies_lane(world.road, other.state, other.geom, lane)) return;
    best_dx = dx;
    best = &other;
  });
  return best;
}

std::optional<Leader> current_leader(const WorldState& world, const TrafficVehicle& v) {
  std::optional<Leader> best;
  for (int lane : attended_lanes(world.road, v)) {
    auto l = leader_in_lane(world, v, lane);
    if (l && (!best || l->gap < best->gap)) best = l;
  }
  return best;
}

Accel idm_with(const TrafficVehicle& v, const std::optional<Leader>& leader) {
  if (!leader) return {idm_accel(v.state.v, std::nullopt, std::nullopt, v.params), false};
  return {idm_accel(v.state.v, leader->speed, leader->gap, v.params), leader->gap <= 0.0};
}

Accel idm_behind(const TrafficVehicle& follower, const TrafficVehicle& leader) {
  const double gap = bumper_gap(follower.state, follower.geom, leader.state, leader.geom);
  return idm_with(follower, Leader{leader.id, leader.state.v, gap});
}

double accel_or_zero(const TrafficVehicle* v, const WorldState& world) {
  if (v == nullptr || v->stationary) return 0.0;
  return idm_with(*v, current_leader(world, *v)).value;
}

void advance_longitudinal(VehicleState& s, double a, double dt) {
  const double v_next = s.v + a * dt;
  if (v_next >= 0.0) {
    s.x += s.v * dt + 0.5 * a * dt * dt;
    s.v = v_next;
  } else {
    // Comes to rest within the step.
    s.x += 0.5 * s.v * (s.v / -a);
    s.v = 0.0;
  }
}

double lane_change_progress(double elapsed) {
  const double phase = std::clamp(elapsed / kLaneChangeDuration, 0.0, 1.0);
  return 0.5 * (1.0 - std::cos(std::numbers::pi * phase));
}

double lane_change_lateral_speed(const LaneChangeManeuver& m) {
  if (m.elapsed >= kLaneChangeDuration) return 0.0;
  const double phase = m.elapsed / kLaneChangeDuration;
  return (m.y_end - m.y_start) * 0.5 * std::numbers::pi / kLaneChangeDuration *
         std::sin(std::numbers::pi * phase);
}

TrafficVehicle update_vehicle(const WorldState& world, const TrafficVehicle& vehicle, int& emergencies) {
  TrafficVehicle next = vehicle;
  if (vehicle.stationary) {
    next.state.v = 0.0;
    next.accel = 0.0;
    return next;
  }
  const Accel acc = idm_with(vehicle, current_leader(world, vehicle));
  if (acc.emergency) ++emergencies;

  if (!next.lane_change) {
    const LaneDecision d = mobil_decide(vehicle.id, world);
    if (d != LaneDecision::kStay) {
      const int to = vehicle.lane + (d == LaneDecision::kLeft ? 1 : -1);
      next.lane_change =
          LaneChangeManeuver{vehicle.lane, to, vehicle.state.y, world.road.lane_center(to), 0.0};
      next.lane = to;
    }
  }

  advance_longitudinal(next.state, acc.value, world.dt);
  next.accel = acc.value;

  if (next.lane_change) {
    auto& m = *next.lane_change;
    m.elapsed += world.dt;
    next.state.y = m.y_start + (m.y_end - m.y_start) * lane_change_progress(m.elapsed);
    const double vy = lane_change_lateral_speed(m);
    next.state.psi = std::atan2(vy, std::max(next.state.v, 1e-3));
    if (m.elapsed >= kLaneChangeDuration - 1e-9) {
      next.state.y = m.y_end;
      next.state.psi = 0.0;
      next.lane = m.to_lane;
      next.lane_change.reset();
    }
  }
  return next;
}

bool lane_is_free_at(const WorldState& world, int lane, double x, double clearance, int except_id) {
  bool free = true;
  for_each_agent(world, [&](const TrafficVehicle& other) {
    if (other.id == except_id) return;
    if (std::abs(other.state.x - x) < clearance &&
        occupies_lane(world.road, other.state, other.geom, lane)) {
      free = false;
    }
  });
  return free;
}

void recycle_vehicles(WorldState& world) {
  const auto& win = world.recycle;
  const double ego_x = world.ego.state.x;
  for (auto& v : world.vehicles) {
    if (v.stationary) continue;
    const bool behind = v.state.x < ego_x - win.behind;
    const bool ahead = v.state.x > ego_x + win.ahead;
    if (!behind && !ahead) continue;
    const double base = behind ? ego_x + win.ahead - 20.0 : ego_x - win.behind + 20.0;
    const double x = base + world.rng.uniform(-10.0, 10.0);
    const int first = static_cast<int>(world.rng.below(static_cast<std::uint64_t>(world.road.lane_count())));
    for (int k = 0; k < world.road.lane_count(); ++k) {
      const int lane = (first + k) % world.road.lane_count();
      if (!lane_is_free_at(world, lane, x, 30.0, v.id)) continue;
      v.params = sample_driver_params(world.rng, win.ranges);
      v.state = VehicleState{x, world.road.lane_center(lane), 0.0, v.params.v0};
      v.lane = lane;
      v.lane_change.reset();
      v.accel = 0.0;
      break;
    }
  }
}

double clamp_sample(Rng& rng, const Interval& r, const char* name) {
  if (r.hi < r.lo) throw std::invalid_argument(std::string("empty sampling range for ") + name);
  if (r.hi == r.lo) return r.lo;
  return rng.uniform(r.lo, r.hi);
}

}  // namespace

void validate(const DriverParams& p) {
  if (!(p.v0 > 0 && p.T > 0 && p.s0 > 0 && p.a_idm > 0 && p.b_idm > 0 && p.delta > 0 &&
        p.a_threshold > 0 && p.b_safe > 0)) {
    throw std::invalid_argument("DriverParams: fields must be positive");
  }
  if (p.politeness < 0.0 || p.politeness > 1.0) {
    throw std::invalid_argument("DriverParams: politeness outside [0, 1]");
  }
  if (p.b_safe > kMaxBraking) throw std::invalid_argument("DriverParams: b_safe exceeds braking capability");
}

DriverParams DriverParamRanges::nominal() const {
  return DriverParams{v0.mid(),     T.mid(),          s0.mid(),          a_idm.mid(), b_idm.mid(),
                      delta.mid(),  politeness.mid(), a_threshold.mid(), b_safe.mid()};
}

DriverParamRanges DriverParamRanges::fixed(const DriverParams& p) {
  DriverParamRanges r;
  r.v0 = {p.v0, p.v0};
  r.T = {p.T, p.T};
  r.s0 = {p.s0, p.s0};
  r.a_idm = {p.a_idm, p.a_idm};
  r.b_idm = {p.b_idm, p.b_idm};
  r.delta = {p.delta, p.delta};
  r.politeness = {p.politeness, p.politeness};
  r.a_threshold = {p.a_threshold, p.a_threshold};
  r.b_safe = {p.b_safe, p.b_safe};
  return r;
}

DriverParams sample_driver_params(Rng& rng, const DriverParamRanges& r) {
  DriverParams p;
  p.v0 = clamp_sample(rng, r.v0, "v0");
  p.T = clamp_sample(rng, r.T, "T");
  p.s0 = clamp_sample(rng, r.s0, "s0");
  p.a_idm = clamp_sample(rng, r.a_idm, "a_idm");
  p.b_idm = clamp_sample(rng, r.b_idm, "b_idm");
  p.delta = clamp_sample(rng, r.delta, "delta");
  p.politeness = clamp_sample(rng, r.politeness, "politeness");
  p.a_threshold = clamp_sample(rng, r.a_threshold, "a_threshold");
  p.b_safe = clamp_sample(rng, r.b_safe, "b_safe");
  return p;
}

double idm_accel(double v, std::optional<double> lead_speed, std::optional<double> gap,
                 const DriverParams& p) {
  double a = p.a_idm * (1.0 - std::pow(v / p.v0, p.delta));
  if (lead_speed && gap) {
    if (*gap <= 0.0) return -kMaxBraking;
    const double dynamic = v * p.T + v * (v - *lead_speed) / (2.0 * std::sqrt(p.a_idm * p.b_idm));
    const double s_star = p.s0 + std::max(0.0, dynamic);
    const double ratio = s_star / *gap;
    a -= p.a_idm * ratio * ratio;
  }
  return std::clamp(a, -kMaxBraking, p.a_idm);
}

const TrafficVehicle* WorldState::find(int id) const {
  if (id == kEgoId) return &ego;
  for (const auto& v : vehicles) {
    if (v.id == id) return &v;
  }
  return nullptr;
}

bool occupies_lane(const RoadGeometry& road, const VehicleState& state, const VehicleGeometry& geom,
                   int lane) {
  if (!road.has_lane(lane)) return false;
  const Interval li = road.lane_interval(lane);
  const double lo = std::max(li.lo, state.y - 0.5 * geom.width);
  const double hi = std::min(li.hi, state.y + 0.5 * geom.width);
  return hi - lo >= kLaneOccupancyFraction * geom.width;
}

double bumper_gap(const VehicleState& follower, const VehicleGeometry& fg, const VehicleState& leader,
                  const VehicleGeometry& lg) {
  return leader.x - follower.x - 0.5 * (fg.length + lg.length);
}

double current_idm_accel(const WorldState& world, int id) {
  const TrafficVehicle& v = agent(world, id);
  if (v.stationary) return 0.0;
  return idm_with(v, current_leader(world, v)).value;
}

LaneDecision mobil_decide(int id, const WorldState& world) {
  const TrafficVehicle& c = agent(world, id);
  if (c.stationary || c.lane_change) return LaneDecision::kStay;

  const double a_c = idm_with(c, current_leader(world, c)).value;
  const TrafficVehicle* old_follower = follower_in_lane(world, c, c.lane);
  const double a_o = accel_or_zero(old_follower, world);
  double a_o_new = 0.0;
  if (old_follower != nullptr && !old_follower->stationary) {
    // Old follower once c has left: its leader becomes c's leader.
    a_o_new = idm_with(*old_follower, leader_in_lane(world, *old_follower, c.lane, c.id)).value;
  }

  LaneDecision best = LaneDecision::kStay;
  double best_incentive = c.params.a_threshold;
  for (const LaneDecision d : {LaneDecision::kLeft, LaneDecision::kRight}) {
    const int target = c.lane + (d == LaneDecision::kLeft ? 1 : -1);
    if (!world.road.has_lane(target)) continue;

    const auto new_leader = leader_in_lane(world, c, target);
    if (new_leader && new_leader->gap <= 0.0) continue;
    const double a_c_new = idm_with(c, new_leader).value;

    const TrafficVehicle* new_follower = follower_in_lane(world, c, target);
    double a_n = 0.0;
    double a_n_new = 0.0;
    if (new_follower != nullptr) {
      if (bumper_gap(new_follower->state, new_follower->geom, c.state, c.geom) <= 0.0) continue;
      if (!new_follower->stationary) {
        a_n = accel_or_zero(new_follower, world);
        a_n_new = idm_behind(*new_follower, c).value;
        if (a_n_new < -c.params.b_safe) continue;
      }
    }

    const double incentive =
        a_c_new - a_c + c.params.politeness * ((a_n_new - a_n) + (a_o_new - a_o));
    if (incentive > best_incentive) {
      best_incentive = incentive;
      best = d;
    }
  }
  return best;
}

TrafficVehicle rule_based_update(const WorldState& world, const TrafficVehicle& vehicle) {
  int ignored = 0;
  return update_vehicle(world, vehicle, ignored);
}

namespace {

void advance(WorldState& world, bool with_ego) {
  int emergencies = 0;
  std::vector<TrafficVehicle> next;
  next.reserve(world.vehicles.size());
  for (const auto& v : world.vehicles) next.push_back(update_vehicle(world, v, emergencies));
  if (with_ego) world.ego = update_vehicle(world, world.ego, emergencies);
  world.vehicles = std::move(next);
  world.emergency_brakes += emergencies;
  ++world.step;
  if (world.recycle.enabled) recycle_vehicles(world);
}

}  // namespace

void step(WorldState& world) { advance(world, false); }

void step_with_rule_based_ego(WorldState& world) { advance(world, true); }

}  // namespace cooplane
