#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "cooplane/builtin.hpp"
#include "cooplane/harness.hpp"
#include "cooplane/io.hpp"
#include "cooplane/occupancy.hpp"

namespace cooplane {
namespace {

Scenario empty_road() {
  Scenario sc;
  sc.name = "empty";
  sc.road = RoadGeometry(3);
  sc.ego = {0, sc.road.lane_center(1), 0, 20};
  sc.v_des = 25;
  sc.duration = 10;
  return sc;
}

TEST(Policy, NamesRoundTrip) {
  for (auto p : {Policy::kProposed, Policy::kProposedWoIp, Policy::kIdmMobil}) EXPECT_EQ(parse_policy(to_string(p)), p);
  EXPECT_EQ(parse_policy("proposed_wo_ip"), Policy::kProposedWoIp);
  EXPECT_THROW(parse_policy("mpc"), std::invalid_argument);
}

TEST(Episode, EmptyRoadReachesDesiredSpeedWithoutLaneChange) {
  EpisodeConfig cfg;
  cfg.scenario = empty_road();
  cfg.record_trace = true;
  const EpisodeResult r = run_episode(cfg);
  const EpisodeMetrics& m = r.metrics;
  EXPECT_EQ(m.steps, 100);
  EXPECT_EQ(m.lane_changes, 0);
  EXPECT_FALSE(m.collision);
  EXPECT_NEAR(m.final_speed, 25.0, 0.5);
  EXPECT_EQ(m.solver_failures, 0);
  ASSERT_FALSE(m.decisions.empty());
  for (const auto& d : m.decisions) EXPECT_EQ(d.lat, LateralAction::kKeep);
  EXPECT_EQ(r.trace.size(), 101u);
  EXPECT_FALSE(r.plan_log.empty());
}

TEST(Episode, RuleBasedEgoStopsBehindParkedCar) {
  EpisodeConfig cfg;
  cfg.scenario = case1();
  cfg.policy = Policy::kIdmMobil;
  const EpisodeMetrics m = run_episode(cfg).metrics;
  EXPECT_FALSE(m.collision);
  EXPECT_EQ(m.lane_changes, 0);
  EXPECT_LT(m.min_speed, 2.0);
  EXPECT_EQ(m.final_lane, 0);
}

TEST(Episode, ConfigValidation) {
  EpisodeConfig cfg;
  cfg.scenario = empty_road();
  cfg.t_replan = 0;
  EXPECT_THROW(run_episode(cfg), std::invalid_argument);
  EpisodeConfig short_p;
  short_p.scenario = empty_road();
  short_p.prediction_horizon = 100;  // longer than the references
  EXPECT_THROW(short_p.validate(), std::invalid_argument);
}

TEST(Builtin, Case1IsValidAndTight) {
  const Scenario sc = case1();
  EXPECT_NO_THROW(validate(sc));
  std::vector<const ScenarioVehicle*> platoon;
  for (const auto& o : sc.others)
    if (sc.road.lane_of(o.state.y) == 1) platoon.push_back(&o);
  ASSERT_GT(platoon.size(), 5u);
  std::sort(platoon.begin(), platoon.end(), [](auto* a, auto* b) { return a->state.x < b->state.x; });
  for (std::size_t i = 1; i < platoon.size(); ++i) {
    const double gap = platoon[i]->state.x - platoon[i - 1]->state.x - sc.ego_geom.length;
    const double s0 = platoon[i]->ranges.s0.hi;
    EXPECT_LT(gap, sc.ego_geom.length + 2 * s0);
  }
  bool blocked = false;
  for (const auto& o : sc.others) blocked |= o.stationary && sc.road.lane_of(o.state.y) == sc.road.lane_of(sc.ego.y);
  EXPECT_TRUE(blocked);
}

TEST(Builtin, Case2LaneSpeedsOrdered) {
  const Scenario sc = case2();
  EXPECT_NO_THROW(validate(sc));
  std::vector<double> sum(3, 0.0), n(3, 0.0);
  for (const auto& o : sc.others) {
    const int l = sc.road.lane_of(o.state.y);
    sum[l] += o.ranges.v0.mid();
    n[l] += 1;
  }
  EXPECT_GT(sum[2] / n[2], sum[1] / n[1]);
  EXPECT_GT(sum[1] / n[1], sum[0] / n[0]);
}

TEST(Builtin, RandomTrafficValidAndSeeded) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const Scenario sc = batch_scenario(static_cast<int>(seed), seed);
    EXPECT_NO_THROW(validate(sc)) << seed;
    EXPECT_TRUE(sc.recycle);
  }
  EXPECT_EQ(scenario_to_json(random3lane(5, 15)), scenario_to_json(random3lane(5, 15)));
  EXPECT_LT(random3lane(5, 10).others.size(), random3lane(5, 20).others.size());
  EXPECT_THROW(builtin_scenario("nowhere", 1), std::invalid_argument);
  EXPECT_EQ(builtin_scenario("random3lane:12", 3).others.size(), random3lane(3, 12).others.size());
}

BatchConfig small_batch(int episodes) {
  BatchConfig b;
  b.episodes = episodes;
  b.seed_base = 11;
  b.threads = 2;
  b.scenario = [](int, std::uint64_t seed) {
    Scenario sc = random3lane(seed, 10);
    sc.duration = 3.0;
    return sc;
  };
  return b;
}

TEST(Batch, SingleEpisodeSummaryEqualsEpisode) {
  BatchConfig b = small_batch(1);
  b.policies = {Policy::kProposed};
  const BatchReport r = run_batch(b);
  ASSERT_EQ(r.episodes.size(), 1u);
  ASSERT_EQ(r.summary.size(), 1u);
  const auto& e = r.episodes[0];
  const auto& s = r.summary[0];
  EXPECT_EQ(s.episodes, 1);
  EXPECT_DOUBLE_EQ(s.ego_mean_speed, e.ego_mean_speed);
  EXPECT_DOUBLE_EQ(s.others_mean_speed, e.others_mean_speed);
  EXPECT_DOUBLE_EQ(s.min_distance, e.min_distance);
  EXPECT_EQ(e.seed, 11u);

  EpisodeConfig cfg;
  cfg.scenario = b.scenario(0, 11);
  cfg.seed = 11;
  const EpisodeMetrics solo = run_episode(cfg).metrics;
  EXPECT_DOUBLE_EQ(solo.ego_mean_speed, e.ego_mean_speed);
}

TEST(Batch, Deterministic) {
  const BatchConfig b = small_batch(3);
  const BatchReport r1 = run_batch(b);
  const BatchReport r2 = run_batch(b);
  ASSERT_EQ(r1.episodes.size(), 9u);
  for (std::size_t i = 0; i < r1.episodes.size(); ++i) {
    EXPECT_EQ(r1.episodes[i].policy, r2.episodes[i].policy);
    EXPECT_EQ(r1.episodes[i].seed, r2.episodes[i].seed);
    EXPECT_DOUBLE_EQ(r1.episodes[i].ego_mean_speed, r2.episodes[i].ego_mean_speed);
    EXPECT_DOUBLE_EQ(r1.episodes[i].min_distance, r2.episodes[i].min_distance);
  }
}

TEST(Batch, PairedSeedsShareTraffic) {
  const BatchConfig b = small_batch(2);
  const BatchReport r = run_batch(b);
  for (const auto& e : r.episodes) EXPECT_TRUE(e.seed == 11u || e.seed == 12u);
  EXPECT_EQ(r.summary.size(), 3u);
}

}  // namespace
}  // namespace cooplane
