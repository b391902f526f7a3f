#include "cooplane/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "cooplane/occupancy.hpp"
#include "cooplane/predict.hpp"
#include "cooplane/traffic.hpp"

namespace cooplane {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// A vehicle that jumps this far in one step was recycled and has fresh
// driver parameters.
constexpr double kRecycleJump = 50.0;

double ego_distance(const WorldState& w) {
  const auto ego = occupancy_polytope(w.ego.state, w.ego.geom);
  double d = kInf;
  for (const auto& v : w.vehicles) d = std::min(d, rect_distance(ego, occupancy_polytope(v.state, v.geom)));
  return d;
}

void record(std::vector<TraceRow>& trace, std::int64_t step, const WorldState& before, const WorldState& after,
            const ControlInput& ego_u) {
  trace.push_back({step, kEgoId, before.ego.state, ego_u.a, ego_u.delta});
  for (std::size_t i = 0; i < before.vehicles.size(); ++i) {
    const double a = i < after.vehicles.size() ? after.vehicles[i].accel : 0.0;
    trace.push_back({step, before.vehicles[i].id, before.vehicles[i].state, a, 0.0});
  }
}

struct Commitment {
  DecisionCandidate candidate;
  std::int64_t k0 = 0;
};

}  // namespace

std::string_view to_string(Policy p) {
  switch (p) {
    case Policy::kProposed: return "PROPOSED";
    case Policy::kProposedWoIp: return "PROPOSED_WO_IP";
    case Policy::kIdmMobil: return "IDM_MOBIL";
  }
  return "?";
}

Policy parse_policy(std::string_view name) {
  std::string up(name);
  for (auto& c : up) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (up == "PROPOSED") return Policy::kProposed;
  if (up == "PROPOSED_WO_IP") return Policy::kProposedWoIp;
  if (up == "IDM_MOBIL") return Policy::kIdmMobil;
  throw std::invalid_argument("unknown policy: " + std::string(name));
}

void EpisodeConfig::validate() const {
  cooplane::validate(scenario);
  mpc.validate();
  cooplane::validate(weights);
  if (!(t_replan >= mpc.dt - 1e-12)) throw std::invalid_argument("t_replan must be at least one step");
  if (std::abs(refgen.dt - mpc.dt) > 1e-12) throw std::invalid_argument("refgen and MPC must share dt");
  if (prediction_horizon < 1) throw std::invalid_argument("prediction horizon must be positive");
  if (static_cast<double>(prediction_horizon) * mpc.dt > refgen.horizon + 1e-9) {
    throw std::invalid_argument("prediction horizon exceeds the reference length");
  }
}

EpisodeResult run_episode(const EpisodeConfig& cfg) {
  cfg.validate();
  const Scenario& sc = cfg.scenario;
  const double dt = cfg.mpc.dt;
  const int M = cfg.mpc.horizon;
  WorldState world = make_world(sc, cfg.seed);
  world.dt = dt;
  const RoadGeometry& road = sc.road;
  const MotionLimits limits = MotionLimits::for_road(road, sc.ego_geom);

  std::map<int, DriverParams> nominal;
  for (std::size_t i = 0; i < sc.others.size(); ++i) nominal[static_cast<int>(i)] = sc.others[i].ranges.nominal();

  CostWeights weights = cfg.weights;
  weights.v_des = sc.v_des;

  std::unique_ptr<Predictor> predictor;
  if (cfg.policy == Policy::kProposed) predictor = std::make_unique<InteractivePredictor>();
  else predictor = std::make_unique<ConstantVelocityPredictor>();
  MpcPlanner planner(sc.ego_geom, limits, cfg.mpc);

  EpisodeResult out;
  EpisodeMetrics& m = out.metrics;
  m.scenario = sc.name;
  m.policy = cfg.policy;
  m.seed = cfg.seed;
  m.initial_lane = road.lane_of(world.ego.state.y);
  m.min_planned_distance_optimal = kInf;
  std::ostringstream plan_log;
  if (cfg.record_trace) write_plan_log_header(plan_log);

  const auto steps = static_cast<std::int64_t>(std::llround(sc.duration / dt));
  const auto replan_steps = std::max<std::int64_t>(1, std::llround(cfg.t_replan / dt));
  std::optional<Commitment> commit;
  std::int64_t last_decision = 0;
  ControlInput u_prev;
  int lane = m.initial_lane;
  double ego_speed_sum = world.ego.state.v;
  double others_speed_sum = 0.0;
  long others_samples = 0;
  auto add_others = [&] {
    for (const auto& v : world.vehicles) {
      if (v.stationary) continue;
      others_speed_sum += v.state.v;
      ++others_samples;
    }
  };
  add_others();
  m.min_distance = ego_distance(world);
  m.min_speed = world.ego.state.v;
  double solve_time_sum = 0.0;

  double prev_distance = m.min_distance;
  std::vector<VehicleState> last_plan;
  std::int64_t k = 0;
  for (; k < steps && m.min_distance > 0.0; ++k) {
    const WorldState before = world;
    ControlInput u;
    if (cfg.policy == Policy::kIdmMobil) {
      step_with_rule_based_ego(world);
      u.a = world.ego.accel;
    } else {
      const VehicleState ego = world.ego.state;
      const WorldState observed = observed_world(world, nominal);
      bool decide = !commit;
      bool abort = false;
      if (commit) {
        const auto& c = commit->candidate;
        const std::int64_t age = k - commit->k0;
        const bool exhausted = age + M >= static_cast<std::int64_t>(c.reference.size());
        if (c.is_lane_change()) {
          const auto done = static_cast<std::int64_t>(std::ceil(c.lat_ts.duration() / dt - 1e-9));
          // Fires when the distance drops below the threshold, not on every
          // step spent under it, so a re-decided maneuver gets to run.
          const double d = ego_distance(world);
          abort = age < done && d < 2.0 * cfg.mpc.d_min && prev_distance >= 2.0 * cfg.mpc.d_min;
          decide = age >= done || abort || exhausted;
        } else {
          decide = k - last_decision >= replan_steps || exhausted;
        }
      }
      if (decide) {
        const auto cands = build_decision_set(ego, k, road, limits, cfg.refgen);
        const Selection sel = select_decision(cands, observed, *predictor, weights, cfg.prediction_horizon);
        const auto& chosen = cands[sel.chosen];
        m.decisions.push_back({k, chosen.index, chosen.lat, chosen.lon, abort, sel.costs});
        if (abort) ++m.aborts;
        commit = Commitment{chosen, k};
        last_decision = k;
      }
      const Trajectory& ref = commit->candidate.reference;
      const auto age = static_cast<std::size_t>(k - commit->k0);
      const std::size_t avail = std::min<std::size_t>(static_cast<std::size_t>(M) + 1, ref.size() - age);
      const Trajectory window = extend_constant_velocity(ref.slice(age, avail), static_cast<std::size_t>(M) + 1);
      // Others react to where the ego will actually be: the previous plan
      // under the same commitment, re-anchored at the measured state.
      Trajectory ego_path = window;
      if (!decide && last_plan.size() == static_cast<std::size_t>(M) + 1) {
        std::vector<VehicleState> path(last_plan.begin() + 1, last_plan.end());
        path.front() = ego;
        ego_path = extend_constant_velocity(Trajectory(window.start_step(), dt, std::move(path)),
                                            static_cast<std::size_t>(M) + 1);
      }
      const PredictionResult pred = predictor->predict(PredictionRequest{ego_path, observed, {}, M});
      const PlanStepResult r = planner.step(ego, u_prev, window, obstacles_from(pred, 0, M));
      last_plan = r.fallback ? std::vector<VehicleState>{} : r.planned;
      u = r.u;
      ++m.planner_steps;
      solve_time_sum += r.solve_time;
      m.max_solve_time = std::max(m.max_solve_time, r.solve_time);
      if (r.fallback) ++m.solver_failures;
      if (r.status == NlpStatus::kOptimalLocal && !r.fallback) {
        ++m.optimal_steps;
        m.min_planned_distance_optimal = std::min(m.min_planned_distance_optimal, r.min_planned_distance);
        m.max_certificate_residual = std::max(m.max_certificate_residual, r.max_certificate_residual);
      }
      if (cfg.record_trace) write_plan_log_row(plan_log, k, r);

      const VehicleState next = kinematic_step(ego, u, dt, sc.ego_geom);
      step(world);  // background traffic reacts to the ego's current state
      world.ego.state = next;
      world.ego.lane = road.lane_of(next.y);
      world.ego.accel = u.a;
    }
    if (cfg.record_trace) record(out.trace, k, before, world, u);
    u_prev = u;

    for (std::size_t i = 0; i < world.vehicles.size() && i < before.vehicles.size(); ++i) {
      const auto& v = world.vehicles[i];
      if (std::abs(v.state.x - before.vehicles[i].state.x) > kRecycleJump) nominal[v.id] = sc.recycle_ranges.nominal();
    }
    const int now_lane = road.lane_of(world.ego.state.y);
    if (now_lane != lane) {
      ++m.lane_changes;
      if (!m.first_lane_change_time) m.first_lane_change_time = static_cast<double>(k + 1) * dt;
      lane = now_lane;
    }
    ego_speed_sum += world.ego.state.v;
    add_others();
    prev_distance = ego_distance(world);
    m.min_distance = std::min(m.min_distance, prev_distance);
    m.min_speed = std::min(m.min_speed, world.ego.state.v);
  }
  if (cfg.record_trace) record(out.trace, k, world, world, u_prev);

  m.steps = static_cast<int>(k);
  m.collision = m.min_distance <= 0.0;
  m.ego_mean_speed = ego_speed_sum / static_cast<double>(k + 1);
  m.others_mean_speed = others_samples > 0 ? others_speed_sum / static_cast<double>(others_samples) : 0.0;
  m.final_speed = world.ego.state.v;
  m.final_lane = lane;
  m.mean_solve_time = m.planner_steps > 0 ? solve_time_sum / m.planner_steps : 0.0;
  out.plan_log = plan_log.str();
  return out;
}

std::vector<PolicySummary> summarize(const std::vector<EpisodeMetrics>& episodes) {
  std::vector<PolicySummary> out;
  for (Policy p : {Policy::kProposed, Policy::kProposedWoIp, Policy::kIdmMobil}) {
    PolicySummary s;
    s.policy = p;
    s.min_distance = kInf;
    s.min_planned_distance_optimal = kInf;
    double solve_weighted = 0.0;
    for (const auto& e : episodes) {
      if (e.policy != p) continue;
      ++s.episodes;
      s.ego_mean_speed += e.ego_mean_speed;
      s.others_mean_speed += e.others_mean_speed;
      s.min_distance = std::min(s.min_distance, e.min_distance);
      s.collisions += e.collision ? 1 : 0;
      s.lane_changes += e.lane_changes;
      s.solver_failures += e.solver_failures;
      s.planner_steps += e.planner_steps;
      s.min_planned_distance_optimal = std::min(s.min_planned_distance_optimal, e.min_planned_distance_optimal);
      s.max_certificate_residual = std::max(s.max_certificate_residual, e.max_certificate_residual);
      solve_weighted += e.mean_solve_time * e.planner_steps;
    }
    if (s.episodes == 0) continue;
    s.ego_mean_speed /= s.episodes;
    s.others_mean_speed /= s.episodes;
    s.lane_changes /= s.episodes;
    s.mean_solve_time = s.planner_steps > 0 ? solve_weighted / s.planner_steps : 0.0;
    out.push_back(s);
  }
  return out;
}

BatchReport run_batch(const BatchConfig& cfg) {
  if (cfg.episodes < 1) throw std::invalid_argument("batch needs at least one episode");
  if (cfg.policies.empty()) throw std::invalid_argument("batch needs at least one policy");
  struct Job {
    Policy policy;
    int episode;
  };
  std::vector<Job> jobs;
  for (Policy p : cfg.policies)
    for (int i = 0; i < cfg.episodes; ++i) jobs.push_back({p, i});

  BatchReport report;
  report.episodes.resize(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr error;
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      try {
        EpisodeConfig ec = cfg.base;
        const std::uint64_t seed = cfg.seed_base + static_cast<std::uint64_t>(jobs[j].episode);
        ec.scenario = cfg.scenario ? cfg.scenario(jobs[j].episode, seed) : cfg.base.scenario;
        ec.policy = jobs[j].policy;
        ec.seed = seed;
        ec.record_trace = false;
        report.episodes[j] = run_episode(ec).metrics;
        if (cfg.on_episode) {
          std::lock_guard lock(mu);
          cfg.on_episode(report.episodes[j]);
        }
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned n = std::min<unsigned>(cfg.threads > 0 ? static_cast<unsigned>(cfg.threads) : hw,
                                        static_cast<unsigned>(jobs.size()));
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  report.summary = summarize(report.episodes);
  return report;
}

}  // namespace cooplane
