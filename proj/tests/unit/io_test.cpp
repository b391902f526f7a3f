#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "cooplane/builtin.hpp"
#include "cooplane/io.hpp"

namespace cooplane {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("cooplane_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TEST(ScenarioJson, RoundTrip) {
  for (const Scenario& sc : {case1(), case2(), random3lane(9, 15)}) {
    const Scenario back = scenario_from_json(scenario_to_json(sc));
    EXPECT_EQ(back.name, sc.name);
    EXPECT_EQ(back.road, sc.road);
    EXPECT_EQ(back.ego, sc.ego);
    EXPECT_EQ(back.recycle, sc.recycle);
    EXPECT_EQ(back.recycle_ranges, sc.recycle_ranges);
    ASSERT_EQ(back.others.size(), sc.others.size());
    for (std::size_t i = 0; i < sc.others.size(); ++i) {
      EXPECT_EQ(back.others[i].state, sc.others[i].state);
      EXPECT_EQ(back.others[i].ranges, sc.others[i].ranges);
      EXPECT_EQ(back.others[i].stationary, sc.others[i].stationary);
    }
  }
}

TEST(ScenarioJson, DefaultsAndErrors) {
  const Scenario sc = scenario_from_json(R"({"road": {"lane_count": 2}, "ego": {"x": 0, "y": 1.875, "psi": 0, "v": 10}})");
  EXPECT_EQ(sc.road.lane_count(), 2);
  EXPECT_TRUE(sc.others.empty());
  EXPECT_THROW(scenario_from_json("{not json"), std::invalid_argument);
  EXPECT_THROW(scenario_from_json(R"({"road": {"lane_count": 2}, "ego": {"x": 0, "y": 40, "psi": 0, "v": 10}})"),
               std::invalid_argument);
}

TEST(ScenarioJson, FileRoundTrip) {
  const fs::path dir = scratch_dir("scenario");
  save_scenario(dir / "s.json", case2());
  EXPECT_EQ(scenario_to_json(load_scenario(dir / "s.json")), scenario_to_json(case2()));
  EXPECT_THROW(load_scenario(dir / "missing.json"), std::runtime_error);
}

TEST(TraceCsv, HeaderAndRows) {
  std::ostringstream out;
  write_trace_csv(out, {{3, -1, {1, 2, 0.1, 9}, 0.5, 0.01}});
  std::istringstream in(out.str());
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header, "step,vehicle_id,x,y,psi,v,a,delta");
  EXPECT_EQ(row.substr(0, 5), "3,-1,");
}

EpisodeMetrics sample_metrics() {
  EpisodeMetrics m;
  m.scenario = "case2";
  m.policy = Policy::kProposedWoIp;
  m.seed = 77;
  m.steps = 200;
  m.ego_mean_speed = 18.5;
  m.others_mean_speed = 16.25;
  m.min_distance = 1.5;
  m.lane_changes = 2;
  m.first_lane_change_time = 3.4;
  m.min_planned_distance_optimal = std::numeric_limits<double>::infinity();
  DecisionRecord d;
  d.step = 10;
  d.chosen_index = 2;
  d.lat = LateralAction::kLeft;
  d.lon = LongitudinalOption::kAccelerate;
  d.costs.push_back({2, LateralAction::kLeft, LongitudinalOption::kAccelerate, 1, 2, 3, 4, 5, 12});
  m.decisions.push_back(d);
  return m;
}

TEST(MetricsJson, RoundTrip) {
  const EpisodeMetrics m = sample_metrics();
  const EpisodeMetrics back = metrics_from_json(metrics_to_json(m));
  EXPECT_EQ(back.scenario, m.scenario);
  EXPECT_EQ(back.policy, m.policy);
  EXPECT_EQ(back.seed, m.seed);
  EXPECT_DOUBLE_EQ(back.ego_mean_speed, m.ego_mean_speed);
  EXPECT_EQ(back.first_lane_change_time, m.first_lane_change_time);
  EXPECT_TRUE(std::isinf(back.min_planned_distance_optimal));
  ASSERT_EQ(back.decisions.size(), 1u);
  EXPECT_EQ(back.decisions[0].lat, LateralAction::kLeft);
  EXPECT_DOUBLE_EQ(back.decisions[0].costs[0].J_d, 12);
}

TEST(Report, EpisodesAndSummaryFiles) {
  const fs::path dir = scratch_dir("report");
  EpisodeResult r;
  r.metrics = sample_metrics();
  r.trace = {{0, -1, {0, 1.875, 0, 10}, 0, 0}};
  r.plan_log = "step\n";
  write_episode(dir / "run", r);
  for (const char* f : {"trace.csv", "plan.csv", "metrics.json", "decisions.json"}) EXPECT_TRUE(fs::exists(dir / "run" / f)) << f;
  const auto eps = read_episodes(dir);
  ASSERT_EQ(eps.size(), 1u);
  EXPECT_EQ(eps[0].seed, 77u);
  write_report(dir, eps);
  for (const char* f : {"summary.json", "summary.csv", "episodes.csv", "decisions.csv"}) EXPECT_TRUE(fs::exists(dir / f)) << f;
  std::ifstream in(dir / "episodes.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_NE(header.find("ego_mean_speed"), std::string::npos);
}

}  // namespace
}  // namespace cooplane
