#include <cmath>
#include <numbers>
#include <stdexcept>

#include <gtest/gtest.h>

#include "cooplane/core.hpp"

namespace cooplane {
namespace {

Trajectory straight(double v, std::size_t n, double dt) {
  std::vector<VehicleState> s;
  for (std::size_t i = 0; i < n; ++i) s.push_back({v * dt * static_cast<double>(i), 1.875, 0.0, v});
  return Trajectory(0, dt, s);
}

TEST(Core, ValidateRejectsNegativeSpeedAndNan) {
  EXPECT_NO_THROW(validate(VehicleState{0, 0, 0, 0}));
  EXPECT_THROW(validate(VehicleState{0, 0, 0, -1}), std::invalid_argument);
  EXPECT_THROW(validate(VehicleState{NAN, 0, 0, 1}), std::invalid_argument);
  VehicleGeometry g;
  g.length = -1;
  EXPECT_THROW(validate(g), std::invalid_argument);
}

TEST(Core, TrajectoryTimesAndSlice) {
  const Trajectory t = straight(10.0, 11, 0.1);
  EXPECT_DOUBLE_EQ(t.time_at(10), 1.0);
  const Trajectory s = t.slice(3, 4);
  ASSERT_EQ(s.size(), 4u);
  EXPECT_EQ(s.start_step(), 3);
  EXPECT_EQ(s[0], t[3]);
}

TEST(Core, RoadLanes) {
  const RoadGeometry road(3);
  EXPECT_DOUBLE_EQ(road.lane_center(0), 1.875);
  EXPECT_DOUBLE_EQ(road.lane_center(2), 9.375);
  EXPECT_EQ(road.lane_of(5.0), 1);
  EXPECT_EQ(road.lane_of(-30.0), 0);
  EXPECT_EQ(road.lane_of(100.0), 2);
  EXPECT_DOUBLE_EQ(road.drivable().hi, 11.25);
  EXPECT_THROW(RoadGeometry(0), std::invalid_argument);
}

TEST(Core, LimitsForRoadKeepFootprintOnRoad) {
  const RoadGeometry road(2);
  const VehicleGeometry g;
  const MotionLimits l = MotionLimits::for_road(road, g);
  EXPECT_NEAR(l.state_min.y, 0.9, 1e-12);
  EXPECT_NEAR(l.state_max.y, 7.5 - 0.9, 1e-12);
}

TEST(Core, WrapAngle) {
  EXPECT_NEAR(wrap_angle(3 * std::numbers::pi), std::numbers::pi, 1e-12);
  EXPECT_NEAR(wrap_angle(-std::numbers::pi), std::numbers::pi, 1e-12);
  EXPECT_NEAR(wrap_angle(0.5 + 4 * std::numbers::pi), 0.5, 1e-12);
}

TEST(Resample, ConstantSpeedIsExact) {
  const Trajectory t = straight(12.0, 21, 0.1);
  for (double dt_new : {0.05, 0.025, 0.2}) {
    const Trajectory r = resample(t, dt_new);
    EXPECT_EQ(r.front(), t.front());
    EXPECT_NEAR(r.back().x, t.back().x, 1e-12);
    for (std::size_t i = 0; i < r.size(); ++i) EXPECT_NEAR(r[i].x, 12.0 * r.time_at(i), 1e-9);
  }
}

TEST(Resample, SamePeriodIsIdentity) {
  const Trajectory t = straight(7.0, 15, 0.1);
  EXPECT_EQ(resample(t, 0.1), t);
}

TEST(Resample, ParabolaMidpointErrorIsChordError) {
  // x = t^2 sampled at h = 0.1; a chord misses the midpoint by h^2 / 4.
  std::vector<VehicleState> s;
  for (int i = 0; i <= 20; ++i) {
    const double t = 0.1 * i;
    s.push_back({t * t, 0.0, 0.0, 2 * t});
  }
  const Trajectory r = resample(Trajectory(0, 0.1, s), 0.05);
  ASSERT_EQ(r.size(), 41u);
  double worst = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double t = r.time_at(i);
    worst = std::max(worst, std::abs(r[i].x - t * t));
  }
  EXPECT_NEAR(worst, 0.1 * 0.1 / 4.0, 1e-12);
}

TEST(Resample, HeadingUsesShortestArc) {
  const double pi = std::numbers::pi;
  const Trajectory t(0, 0.1, {{0, 0, pi - 0.1, 1}, {0.1, 0, -pi + 0.1, 1}});
  const Trajectory r = resample(t, 0.05);
  EXPECT_NEAR(std::abs(wrap_angle(r[1].psi)), pi, 1e-9);
}

TEST(Resample, RejectsIncompatiblePeriod) {
  EXPECT_THROW(resample(straight(1.0, 10, 0.1), 0.03), std::invalid_argument);
}

TEST(Core, ExtendConstantVelocity) {
  const Trajectory t = straight(10.0, 3, 0.1);
  const Trajectory e = extend_constant_velocity(t, 6);
  ASSERT_EQ(e.size(), 6u);
  EXPECT_NEAR(e[5].x, 5.0, 1e-12);
  EXPECT_DOUBLE_EQ(e[5].v, 10.0);
}

}  // namespace
}  // namespace cooplane
