#include "cooplane/builtin.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cooplane/occupancy.hpp"
#include "cooplane/rng.hpp"

namespace cooplane {
namespace {

ScenarioVehicle moving(const RoadGeometry& road, int lane, double x, double v, const DriverParamRanges& ranges) {
  ScenarioVehicle o;
  o.state = {x, road.lane_center(lane), 0.0, v};
  o.ranges = ranges;
  return o;
}

DriverParamRanges with_speed(DriverParamRanges r, double lo, double hi) {
  r.v0 = {lo, hi};
  return r;
}

}  // namespace

Scenario case1() {
  Scenario sc;
  sc.name = "case1";
  sc.road = RoadGeometry(2);
  sc.duration = 20.0;
  sc.v_des = 12.0;
  sc.ego = {0.0, sc.road.lane_center(0), 0.0, 5.0};

  ScenarioVehicle parked;
  parked.state = {42.0, sc.road.lane_center(0), 0.0, 0.0};
  parked.stationary = true;
  parked.ranges = DriverParamRanges::fixed(DriverParams{});
  sc.others.push_back(parked);

  // Platoon head cruises at 10 m/s; the followers would like to go faster
  // and sit at their short equilibrium gap behind it.
  DriverParams head;
  head.v0 = 10.0;
  head.T = 0.2;
  head.s0 = 2.0;
  head.politeness = 0.0;
  head.a_threshold = 8.0;  // platoon drivers never leave their lane
  DriverParams follower = head;
  follower.v0 = 20.0;
  const double spacing = sc.ego_geom.length + 4.15;
  const double x_head = 70.0;
  sc.others.push_back(moving(sc.road, 1, x_head, 10.0, DriverParamRanges::fixed(head)));
  for (int i = 1; i <= 29; ++i) {
    sc.others.push_back(moving(sc.road, 1, x_head - i * spacing, 10.0, DriverParamRanges::fixed(follower)));
  }
  return sc;
}

Scenario case2() {
  Scenario sc;
  sc.name = "case2";
  sc.road = RoadGeometry(3);
  sc.duration = 20.0;
  sc.v_des = 25.0;
  sc.ego = {0.0, sc.road.lane_center(1), 0.0, 14.0};

  DriverParams fast;
  fast.v0 = 22.0;
  fast.T = 0.8;
  fast.s0 = 2.0;
  fast.politeness = 0.5;
  // Middle lane: the leader is free to creep slightly faster than the ego
  // so the initial lane-keep candidate sees no closing neighbor.
  DriverParams mid;
  mid.v0 = 14.0;
  mid.politeness = 0.0;
  mid.a_threshold = 8.0;  // holds its lane
  DriverParams mid_lead = mid;
  mid_lead.v0 = 15.0;
  DriverParams slow;
  slow.v0 = 8.0;

  // Fast lane: short headways over a long stretch.
  for (int i = 0; i < 12; ++i) {
    sc.others.push_back(moving(sc.road, 2, 120.0 - 26.0 * i, 22.0, DriverParamRanges::fixed(fast)));
  }
  sc.others.push_back(moving(sc.road, 1, 30.0, 14.0, DriverParamRanges::fixed(mid_lead)));
  sc.others.push_back(moving(sc.road, 1, 90.0, 14.0, DriverParamRanges::fixed(mid_lead)));
  sc.others.push_back(moving(sc.road, 1, -45.0, 14.0, DriverParamRanges::fixed(mid)));
  // Slow lane: wide gaps.
  for (int i = 0; i < 4; ++i) {
    sc.others.push_back(moving(sc.road, 0, 100.0 - 70.0 * i, 8.0, DriverParamRanges::fixed(slow)));
  }
  return sc;
}

Scenario random3lane(std::uint64_t seed, double density) {
  if (!(density > 0.0)) throw std::invalid_argument("density must be positive");
  Scenario sc;
  sc.name = "random3lane";
  sc.road = RoadGeometry(3);
  sc.seed = seed;
  sc.duration = 20.0;
  sc.v_des = 25.0;
  sc.recycle = true;
  sc.recycle_ranges = with_speed(DriverParamRanges{}, 12.0, 25.0);

  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  const int ego_lane = static_cast<int>(rng.below(2));
  sc.ego = {0.0, sc.road.lane_center(ego_lane), 0.0, rng.uniform(13.0, 17.0)};

  const double window = kRandomWindowBehind + kRandomWindowAhead;
  const int per_lane = std::max(1, static_cast<int>(std::lround(density * window / 1000.0)));
  const Interval speeds[3] = {{12.0, 16.0}, {15.0, 20.0}, {19.0, 25.0}};
  for (int lane = 0; lane < 3; ++lane) {
    const double slot = window / per_lane;
    for (int i = 0; i < per_lane; ++i) {
      const double x = -kRandomWindowBehind + (i + rng.uniform(0.2, 0.8)) * slot;
      if (lane == ego_lane && std::abs(x) < 15.0) continue;
      const auto ranges = with_speed(DriverParamRanges{}, speeds[lane].lo, speeds[lane].hi);
      sc.others.push_back(moving(sc.road, lane, x, rng.uniform(speeds[lane].lo, speeds[lane].hi), ranges));
    }
  }
  return sc;
}

Scenario batch_scenario(int episode, std::uint64_t seed) {
  const auto& d = kDefaultDensities;
  return random3lane(seed, d[static_cast<std::size_t>(episode) % d.size()]);
}

Scenario builtin_scenario(const std::string& name, std::uint64_t seed) {
  if (name == "case1") return case1();
  if (name == "case2") return case2();
  if (name == "random3lane") return random3lane(seed, kDefaultDensities[seed % kDefaultDensities.size()]);
  const std::string prefix = "random3lane:";
  if (name.rfind(prefix, 0) == 0) return random3lane(seed, std::stod(name.substr(prefix.size())));
  throw std::invalid_argument("unknown builtin scenario: " + name);
}

std::vector<std::string> builtin_scenario_names() { return {"case1", "case2", "random3lane"}; }

}  // namespace cooplane
