#include "cooplane/scenario.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "cooplane/occupancy.hpp"

namespace cooplane {
namespace {

void check_on_road(const RoadGeometry& road, const VehicleState& s, const VehicleGeometry& g,
                   const std::string& who) {
  const Interval d = road.drivable();
  if (s.y - 0.5 * g.width < d.lo - 1e-9 || s.y + 0.5 * g.width > d.hi + 1e-9) {
    throw std::invalid_argument(who + " is outside the drivable region");
  }
}

}  // namespace

void validate(const Scenario& sc) {
  validate(sc.ego);
  validate(sc.ego_geom);
  if (!(sc.duration > 0.0)) throw std::invalid_argument("scenario duration must be positive");
  if (!(sc.v_des > 0.0)) throw std::invalid_argument("v_des must be positive");
  check_on_road(sc.road, sc.ego, sc.ego_geom, "ego");

  std::vector<OccupancyPolytope> boxes{occupancy_polytope(sc.ego, sc.ego_geom)};
  for (std::size_t i = 0; i < sc.others.size(); ++i) {
    const auto& o = sc.others[i];
    validate(o.state);
    validate(o.geom);
    check_on_road(sc.road, o.state, o.geom, "vehicle " + std::to_string(i));
    boxes.push_back(occupancy_polytope(o.state, o.geom));
  }
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    for (std::size_t j = i + 1; j < boxes.size(); ++j) {
      if (rect_distance(boxes[i], boxes[j]) <= 0.0) {
        throw std::invalid_argument("initial footprints overlap (entries " + std::to_string(i) +
                                    ", " + std::to_string(j) + ")");
      }
    }
  }
}

DriverParams ego_driver_params(const Scenario& sc) {
  DriverParams p;
  p.v0 = sc.v_des;
  return p;
}

WorldState make_world(const Scenario& sc, std::uint64_t seed) {
  validate(sc);
  WorldState w;
  w.road = sc.road;
  w.rng = Rng(seed);
  w.recycle.enabled = sc.recycle;
  w.recycle.ranges = sc.recycle_ranges;

  w.ego.id = kEgoId;
  w.ego.state = sc.ego;
  w.ego.geom = sc.ego_geom;
  w.ego.params = ego_driver_params(sc);
  w.ego.lane = sc.road.lane_of(sc.ego.y);

  for (std::size_t i = 0; i < sc.others.size(); ++i) {
    const auto& o = sc.others[i];
    TrafficVehicle v;
    v.id = static_cast<int>(i);
    v.state = o.state;
    v.geom = o.geom;
    v.params = sample_driver_params(w.rng, o.ranges);
    v.stationary = o.stationary;
    if (v.stationary) v.state.v = 0.0;
    v.lane = sc.road.lane_of(o.state.y);
    w.vehicles.push_back(v);
  }
  return w;
}

}  // namespace cooplane
