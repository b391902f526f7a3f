#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cooplane/core.hpp"
#include "cooplane/rng.hpp"

namespace cooplane {

/// IDM car-following and MOBIL lane-change parameters of one driver.
struct DriverParams {
  // IDM
  double v0 = 21.5;     // desired speed, m/s
  double T = 1.4;       // time headway, s
  double s0 = 3.0;      // minimum gap, m
  double a_idm = 1.5;   // maximum acceleration, m/s^2
  double b_idm = 2.0;   // comfortable deceleration, m/s^2
  double delta = 4.0;   // acceleration exponent
  // MOBIL
  double politeness = 0.35;
  double a_threshold = 0.1;  // m/s^2
  double b_safe = 4.0;       // m/s^2

  friend bool operator==(const DriverParams&, const DriverParams&) = default;
};

void validate(const DriverParams& params);

/// Uniform sampling ranges for every DriverParams field.
struct DriverParamRanges {
  Interval v0{18.0, 25.0};
  Interval T{1.0, 1.8};
  Interval s0{2.0, 4.0};
  Interval a_idm{1.0, 2.0};
  Interval b_idm{1.5, 2.5};
  Interval delta{4.0, 4.0};
  Interval politeness{0.2, 0.5};
  Interval a_threshold{0.1, 0.1};
  Interval b_safe{4.0, 4.0};

  /// Every field at the midpoint of its range.
  DriverParams nominal() const;
  static DriverParamRanges fixed(const DriverParams& params);

  friend bool operator==(const DriverParamRanges&, const DriverParamRanges&) = default;
};

/// Each field uniform in its range. Throws on an inverted (empty) range.
DriverParams sample_driver_params(Rng& rng, const DriverParamRanges& ranges);

/// Hard deceleration floor applied to every IDM command.
inline constexpr double kMaxBraking = 9.0;

/// IDM acceleration clipped to [-kMaxBraking, a_idm]. With no leader
/// (lead_speed and gap both empty) the free-road term alone applies. A
/// non-positive gap yields -kMaxBraking.
double idm_accel(double v, std::optional<double> lead_speed, std::optional<double> gap,
                 const DriverParams& params);

/// Duration of the sinusoidal lateral move used by rule-based lane changes.
inline constexpr double kLaneChangeDuration = 3.0;

/// Fraction of a vehicle's width that must overlap a lane before the vehicle
/// counts as occupying it.
inline constexpr double kLaneOccupancyFraction = 0.25;

struct LaneChangeManeuver {
  int from_lane = 0;
  int to_lane = 0;
  double y_start = 0.0;
  double y_end = 0.0;
  double elapsed = 0.0;

  friend bool operator==(const LaneChangeManeuver&, const LaneChangeManeuver&) = default;
};

/// A vehicle driven by IDM + MOBIL (or parked, if stationary).
struct TrafficVehicle {
  int id = 0;
  VehicleState state;
  VehicleGeometry geom;
  DriverParams params;
  bool stationary = false;
  int lane = 0;  // lane it is in, or heading to while changing
  std::optional<LaneChangeManeuver> lane_change;
  double accel = 0.0;  // last applied longitudinal acceleration

  friend bool operator==(const TrafficVehicle&, const TrafficVehicle&) = default;
};

enum class LaneDecision { kStay, kLeft, kRight };

/// Recycling of vehicles that drift out of a window around the ego.
struct RecycleWindow {
  bool enabled = false;
  double behind = 150.0;  // m behind the ego
  double ahead = 250.0;   // m ahead of the ego
  DriverParamRanges ranges;

  friend bool operator==(const RecycleWindow&, const RecycleWindow&) = default;
};

/// Everything the background traffic needs to advance one step. The ego's
/// state is written by whoever controls it; step() only reads it.
struct WorldState {
  std::int64_t step = 0;
  double dt = kDefaultDt;
  RoadGeometry road;
  TrafficVehicle ego;  // ego.params drive it only under a rule-based policy
  std::vector<TrafficVehicle> vehicles;
  Rng rng{0};
  RecycleWindow recycle;
  int emergency_brakes = 0;  // IDM calls with a non-positive gap

  const TrafficVehicle* find(int id) const;

  friend bool operator==(const WorldState&, const WorldState&) = default;
};

inline constexpr int kEgoId = -1;

/// True when the vehicle footprint overlaps the lane laterally by at least
/// kLaneOccupancyFraction of its width.
bool occupies_lane(const RoadGeometry& road, const VehicleState& state,
                   const VehicleGeometry& geom, int lane);

/// Bumper-to-bumper gap from a follower to a leader along x.
double bumper_gap(const VehicleState& follower, const VehicleGeometry& follower_geom,
                  const VehicleState& leader, const VehicleGeometry& leader_geom);

/// Acceleration IDM would command for vehicle `id` (kEgoId for the ego)
/// given the current world, leader taken from every lane it occupies.
double current_idm_accel(const WorldState& world, int id);

/// MOBIL lane choice for vehicle `id` (or kEgoId). Vehicles in the middle
/// of a lane change and stationary vehicles always stay.
LaneDecision mobil_decide(int id, const WorldState& world);

/// Next state of a rule-based vehicle after one step of IDM + MOBIL;
/// updates its maneuver bookkeeping. Pure with respect to `world`.
TrafficVehicle rule_based_update(const WorldState& world, const TrafficVehicle& vehicle);

/// Advances every non-ego vehicle by world.dt. Stationary vehicles never
/// move; the ego is left untouched.
void step(WorldState& world);

/// Runs rule_based_update on the ego as well as everyone else, with all
/// decisions taken against the same pre-step snapshot.
void step_with_rule_based_ego(WorldState& world);

}  // namespace cooplane
