#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cooplane/core.hpp"
#include "cooplane/traffic.hpp"

namespace cooplane {

struct ScenarioVehicle {
  VehicleState state;
  VehicleGeometry geom;
  DriverParamRanges ranges;
  bool stationary = false;
};

struct Scenario {
  std::string name = "custom";
  RoadGeometry road{3};
  VehicleState ego;
  VehicleGeometry ego_geom;
  double v_des = 25.0;  // ego's desired speed (also its IDM v0 when rule-based)
  std::vector<ScenarioVehicle> others;
  std::uint64_t seed = 0;
  double duration = 20.0;  // s
  bool recycle = false;
  DriverParamRanges recycle_ranges;
};

/// Throws std::invalid_argument if any footprint leaves the drivable region,
/// two initial footprints touch (rect_distance == 0), or a field is invalid.
void validate(const Scenario& scenario);

/// Parameters the ego drives with under the rule-based policy.
DriverParams ego_driver_params(const Scenario& scenario);

/// Ground-truth world at step 0. Driver parameters are drawn from each
/// vehicle's ranges with an Rng seeded by `seed`; vehicle ids are 0..N-1.
WorldState make_world(const Scenario& scenario, std::uint64_t seed);

}  // namespace cooplane
