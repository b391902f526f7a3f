#include <benchmark/benchmark.h>

#include "cooplane/builtin.hpp"
#include "cooplane/evaluate.hpp"
#include "cooplane/occupancy.hpp"
#include "cooplane/planner.hpp"
#include "cooplane/predict.hpp"
#include "cooplane/refgen.hpp"
#include "cooplane/scenario.hpp"

using namespace cooplane;

namespace {

struct Setup {
  Scenario sc = case2();
  WorldState world = make_world(sc, 1);
  MotionLimits limits = MotionLimits::for_road(sc.road, sc.ego_geom);
  MpcConfig cfg;
  DecisionCandidate left =
      build_reference(sc.ego, 0, LateralAction::kLeft, LongitudinalOption::kAccelerate, sc.road, limits);
};

const Setup& setup() {
  static const Setup s;
  return s;
}

void BM_RectDistance(benchmark::State& state) {
  const VehicleGeometry g;
  const auto a = occupancy_polytope({0, 0, 0.3, 0}, g);
  const auto b = occupancy_polytope({6, 2, -0.4, 0}, g);
  for (auto _ : state) benchmark::DoNotOptimize(rect_distance(a, b));
}
BENCHMARK(BM_RectDistance);

void BM_FindCertificate(benchmark::State& state) {
  const VehicleGeometry g;
  const auto a = occupancy_polytope({0, 0, 0.3, 0}, g);
  const auto b = occupancy_polytope({6, 2, -0.4, 0}, g);
  for (auto _ : state) benchmark::DoNotOptimize(find_certificate(a, b));
}
BENCHMARK(BM_FindCertificate);

void BM_PredictInteractive(benchmark::State& state) {
  const auto& s = setup();
  const PredictionRequest req{s.left.reference, s.world, {}, 60};
  for (auto _ : state) benchmark::DoNotOptimize(predict_interactive(req));
}
BENCHMARK(BM_PredictInteractive)->Unit(benchmark::kMicrosecond);

void BM_SelectDecision(benchmark::State& state) {
  const auto& s = setup();
  const auto cands = build_decision_set(s.sc.ego, 0, s.sc.road, s.limits);
  const InteractivePredictor ip;
  CostWeights w;
  w.v_des = s.sc.v_des;
  for (auto _ : state) benchmark::DoNotOptimize(select_decision(cands, s.world, ip, w, 60));
}
BENCHMARK(BM_SelectDecision)->Unit(benchmark::kMillisecond);

void BM_MpcSolve(benchmark::State& state) {
  const auto& s = setup();
  const auto pred = predict_interactive({s.left.reference, s.world, {}, s.cfg.horizon});
  const auto problem = build_mpc_problem(s.sc.ego, {}, s.left.reference, pred, s.sc.ego_geom, s.limits, s.cfg);
  for (auto _ : state) benchmark::DoNotOptimize(solve(problem.nlp, s.cfg.nlp));
}
BENCHMARK(BM_MpcSolve)->Unit(benchmark::kMillisecond);

void BM_MpcPlannerStep(benchmark::State& state) {
  const auto& s = setup();
  const auto pred = predict_interactive({s.left.reference, s.world, {}, s.cfg.horizon});
  const auto obstacles = obstacles_from(pred, 0, s.cfg.horizon);
  for (auto _ : state) {
    MpcPlanner planner(s.sc.ego_geom, s.limits, s.cfg);
    benchmark::DoNotOptimize(planner.step(s.sc.ego, {}, s.left.reference, obstacles));
  }
}
BENCHMARK(BM_MpcPlannerStep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
