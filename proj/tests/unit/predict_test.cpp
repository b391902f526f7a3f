#include <cmath>

#include <gtest/gtest.h>

#include "cooplane/predict.hpp"
#include "cooplane/refgen.hpp"

namespace cooplane {
namespace {

TrafficVehicle car(int id, const RoadGeometry& road, int lane, double x, double v, DriverParams p = {}) {
  TrafficVehicle t;
  t.id = id;
  t.state = {x, road.lane_center(lane), 0.0, v};
  t.lane = lane;
  t.params = p;
  return t;
}

Trajectory keep_reference(const RoadGeometry& road, const VehicleState& s) {
  const MotionLimits limits = MotionLimits::for_road(road, VehicleGeometry{});
  return build_reference(s, 0, LateralAction::kKeep, LongitudinalOption::kKeepSpeed, road, limits).reference;
}

TEST(ConstantVelocity, UniformMotion) {
  const RoadGeometry road(2);
  WorldState w;
  w.road = road;
  w.ego = car(kEgoId, road, 1, -200, 10);
  TrafficVehicle v = car(3, road, 0, 0.0, 10.0);
  v.state.y = 0.0;
  w.vehicles = {v};
  const PredictionResult p = predict_constant_velocity({keep_reference(road, w.ego.state), w, {}, 10});
  ASSERT_EQ(p.vehicles.size(), 1u);
  const auto& t = p.vehicles[0].trajectory;
  ASSERT_EQ(t.size(), 11u);
  for (std::size_t k = 0; k <= 10; ++k) {
    EXPECT_NEAR(t[k].x, static_cast<double>(k), 1e-12);
    EXPECT_EQ(t[k].y, 0.0);
  }
  EXPECT_EQ(p.find(3), &p.vehicles[0]);
  EXPECT_EQ(p.find(4), nullptr);
}

TEST(ConstantVelocity, StationaryAndCandidateIndependent) {
  const RoadGeometry road(3);
  const MotionLimits limits = MotionLimits::for_road(road, VehicleGeometry{});
  WorldState w;
  w.road = road;
  w.ego = car(kEgoId, road, 1, 0, 15);
  TrafficVehicle parked = car(1, road, 1, 50, 0);
  parked.stationary = true;
  w.vehicles = {parked, car(2, road, 2, 10, 20)};
  const auto set = build_decision_set(w.ego.state, 0, road, limits);
  const auto a = predict_constant_velocity({set.front().reference, w, {}, 60});
  const auto b = predict_constant_velocity({set.back().reference, w, {}, 60});
  for (std::size_t i = 0; i < a.vehicles.size(); ++i) EXPECT_EQ(a.vehicles[i].trajectory, b.vehicles[i].trajectory);
  for (const auto& s : a.vehicles[0].trajectory.states()) EXPECT_EQ(s, parked.state);
}

TEST(Interactive, DecoupledMatchesConstantVelocity) {
  const RoadGeometry road(3);
  WorldState w;
  w.road = road;
  w.ego = car(kEgoId, road, 0, -3000, 15);
  for (int lane = 0; lane < 3; ++lane) {
    DriverParams p;
    p.v0 = 14.0 + 3.0 * lane;
    w.vehicles.push_back(car(lane, road, lane, 100.0 * lane, p.v0, p));
  }
  const PredictionRequest req{keep_reference(road, w.ego.state), w, {}, 60};
  const auto cv = predict_constant_velocity(req);
  const auto ip = predict_interactive(req);
  EXPECT_EQ(ip.kind, PredictorKind::kInteractive);
  for (std::size_t i = 0; i < cv.vehicles.size(); ++i) {
    for (std::size_t k = 0; k < cv.vehicles[i].trajectory.size(); ++k) {
      EXPECT_NEAR(ip.vehicles[i].trajectory[k].x, cv.vehicles[i].trajectory[k].x, 1e-9);
      EXPECT_NEAR(ip.vehicles[i].trajectory[k].y, cv.vehicles[i].trajectory[k].y, 1e-9);
    }
  }
}

TEST(Interactive, FollowerYieldsToCutIn) {
  const RoadGeometry road(2);
  const MotionLimits limits = MotionLimits::for_road(road, VehicleGeometry{});
  WorldState w;
  w.road = road;
  w.ego = car(kEgoId, road, 0, 0.0, 15.0);
  DriverParams p;
  p.v0 = 17.0;
  p.a_threshold = 100.0;
  // Follower in the target lane, 8 m bumper gap behind the ego, 2 m/s faster.
  w.vehicles = {car(7, road, 1, -12.0, 17.0, p)};
  const auto c = build_reference(w.ego.state, 0, LateralAction::kLeft, LongitudinalOption::kKeepSpeed, road, limits);
  const auto pred = predict_interactive({c.reference, w, {}, 60});
  const auto& f = pred.vehicles[0].trajectory;
  // Brakes once the ego claims the lane; may recover after the gap reopens.
  std::size_t enter = 0;
  while (enter < c.reference.size() && !occupies_lane(road, c.reference[enter], VehicleGeometry{}, 1)) ++enter;
  ASSERT_LT(enter + 10, f.size());
  for (std::size_t k = 0; k < f.size(); ++k) EXPECT_LE(f[k].v, 17.0 + 1e-9) << k;
  for (std::size_t k = enter + 1; k <= enter + 10; ++k) EXPECT_LT(f[k].v, f[k - 1].v) << k;
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double gap = c.reference[k].x - f[k].x - 4.0;
    EXPECT_GE(gap, p.s0) << k;
  }
  const auto cv = predict_constant_velocity({c.reference, w, {}, 60});
  EXPECT_GT(cv.vehicles[0].trajectory.back().x, f.back().x);
}

TEST(Interactive, KeepInSteadyTrafficMatchesStepRollout) {
  const RoadGeometry road(2);
  WorldState w;
  w.road = road;
  w.ego = car(kEgoId, road, 0, 0.0, 15.0);
  DriverParams p;
  p.a_threshold = 100.0;
  for (int i = 0; i < 4; ++i) w.vehicles.push_back(car(i, road, i % 2, 30.0 * i - 40.0, 14.0 + i, p));
  const Trajectory ref = keep_reference(road, w.ego.state);
  const auto ip = predict_interactive({ref, w, {}, 60});
  WorldState roll = w;
  for (std::size_t k = 1; k <= 60; ++k) {
    step(roll);
    roll.ego.state = ref[k];
    for (std::size_t i = 0; i < roll.vehicles.size(); ++i) {
      EXPECT_NEAR(ip.vehicles[i].trajectory[k].x, roll.vehicles[i].state.x, 1e-9);
      EXPECT_NEAR(ip.vehicles[i].trajectory[k].v, roll.vehicles[i].state.v, 1e-9);
    }
  }
}

TEST(Interactive, ShortReferenceRejected) {
  const RoadGeometry road(2);
  WorldState w;
  w.road = road;
  const Trajectory ref(0, 0.1, {VehicleState{0, 1.875, 0, 10}});
  EXPECT_THROW(predict_interactive({ref, w, {}, 5}), std::invalid_argument);
  EXPECT_THROW(predict_constant_velocity({ref, w, {}, 0}), std::invalid_argument);
}

TEST(ObservedWorld, ReplacesParamsAndLiftsDesiredSpeed) {
  const RoadGeometry road(2);
  WorldState truth;
  truth.road = road;
  DriverParams secret;
  secret.v0 = 40.0;
  secret.T = 0.3;
  truth.vehicles = {car(0, road, 0, 0, 25.0, secret), car(1, road, 1, 0, 10.0, secret)};
  truth.recycle.enabled = true;
  DriverParams nominal;
  nominal.v0 = 20.0;
  const WorldState obs = observed_world(truth, {{0, nominal}});
  EXPECT_FALSE(obs.recycle.enabled);
  EXPECT_DOUBLE_EQ(obs.vehicles[0].params.v0, 25.0);
  EXPECT_DOUBLE_EQ(obs.vehicles[0].params.T, nominal.T);
  EXPECT_EQ(obs.vehicles[1].params.T, DriverParams{}.T);
  EXPECT_EQ(obs.vehicles[0].state, truth.vehicles[0].state);
}

}  // namespace
}  // namespace cooplane
