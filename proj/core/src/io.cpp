#include "cooplane/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace cooplane {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json state_json(const VehicleState& s) { return {{"x", s.x}, {"y", s.y}, {"psi", s.psi}, {"v", s.v}}; }

VehicleState state_from(const json& j) {
  return {j.value("x", 0.0), j.value("y", 0.0), j.value("psi", 0.0), j.value("v", 0.0)};
}

json geom_json(const VehicleGeometry& g) {
  return {{"length", g.length}, {"width", g.width}, {"lf", g.lf}, {"lr", g.lr}};
}

VehicleGeometry geom_from(const json& j) {
  VehicleGeometry g;
  g.length = j.value("length", g.length);
  g.width = j.value("width", g.width);
  g.lf = j.value("lf", g.lf);
  g.lr = j.value("lr", g.lr);
  return g;
}

#define COOPLANE_RANGE_FIELDS(X) X(v0) X(T) X(s0) X(a_idm) X(b_idm) X(delta) X(politeness) X(a_threshold) X(b_safe)

json ranges_json(const DriverParamRanges& r) {
  json j;
#define X(f) j[#f] = {r.f.lo, r.f.hi};
  COOPLANE_RANGE_FIELDS(X)
#undef X
  return j;
}

DriverParamRanges ranges_from(const json& j) {
  DriverParamRanges r;
#define X(f)                                                          \
  if (j.contains(#f)) {                                               \
    const auto& v = j.at(#f);                                         \
    r.f = v.is_array() ? Interval{v.at(0).get<double>(), v.at(1).get<double>()} \
                       : Interval{v.get<double>(), v.get<double>()};  \
  }
  COOPLANE_RANGE_FIELDS(X)
#undef X
  return r;
}

// JSON has no infinity; null stands in for it.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double number_from(const json& j, const char* key, double fallback = 0.0) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  return v.is_null() ? std::numeric_limits<double>::infinity() : v.get<double>();
}

json costs_json(const std::vector<CostBreakdown>& costs) { return json::parse(to_json(costs)); }

LateralAction lat_from(const std::string& s) {
  for (auto a : {LateralAction::kLeft, LateralAction::kKeep, LateralAction::kRight})
    if (to_string(a) == s) return a;
  throw std::invalid_argument("unknown lateral action " + s);
}

LongitudinalOption lon_from(const std::string& s) {
  for (auto a : {LongitudinalOption::kDecelerate, LongitudinalOption::kKeepSpeed, LongitudinalOption::kAccelerate})
    if (to_string(a) == s) return a;
  throw std::invalid_argument("unknown longitudinal option " + s);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

}  // namespace

std::string scenario_to_json(const Scenario& sc) {
  json j;
  j["name"] = sc.name;
  j["road"] = {{"lane_count", sc.road.lane_count()},
               {"lane_width", sc.road.lane_width()},
               {"right_edge_y", sc.road.drivable().lo}};
  j["ego"] = state_json(sc.ego);
  j["ego_geom"] = geom_json(sc.ego_geom);
  j["v_des"] = sc.v_des;
  j["seed"] = sc.seed;
  j["duration"] = sc.duration;
  j["recycle"] = sc.recycle;
  j["recycle_ranges"] = ranges_json(sc.recycle_ranges);
  j["others"] = json::array();
  for (const auto& o : sc.others) {
    j["others"].push_back({{"state", state_json(o.state)},
                           {"geom", geom_json(o.geom)},
                           {"ranges", ranges_json(o.ranges)},
                           {"stationary", o.stationary}});
  }
  return j.dump(2);
}

Scenario scenario_from_json(const std::string& text) {
  Scenario sc;
  try {
    const json j = json::parse(text);
    sc.name = j.value("name", sc.name);
    if (j.contains("road")) {
      const auto& r = j.at("road");
      sc.road = RoadGeometry(r.value("lane_count", 3), r.value("lane_width", RoadGeometry::kDefaultLaneWidth),
                             r.value("right_edge_y", 0.0));
    }
    if (j.contains("ego")) sc.ego = state_from(j.at("ego"));
    if (j.contains("ego_geom")) sc.ego_geom = geom_from(j.at("ego_geom"));
    sc.v_des = j.value("v_des", sc.v_des);
    sc.seed = j.value("seed", sc.seed);
    sc.duration = j.value("duration", sc.duration);
    sc.recycle = j.value("recycle", sc.recycle);
    if (j.contains("recycle_ranges")) sc.recycle_ranges = ranges_from(j.at("recycle_ranges"));
    for (const auto& o : j.value("others", json::array())) {
      ScenarioVehicle v;
      v.state = state_from(o.at("state"));
      if (o.contains("geom")) v.geom = geom_from(o.at("geom"));
      if (o.contains("ranges")) v.ranges = ranges_from(o.at("ranges"));
      v.stationary = o.value("stationary", false);
      sc.others.push_back(v);
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed scenario JSON: ") + e.what());
  }
  validate(sc);
  return sc;
}

Scenario load_scenario(const fs::path& path) { return scenario_from_json(read_file(path)); }

void save_scenario(const fs::path& path, const Scenario& sc) { write_file(path, scenario_to_json(sc) + "\n"); }

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace) {
  out << "step,vehicle_id,x,y,psi,v,a,delta\n";
  out.precision(10);
  for (const auto& r : trace) {
    out << r.step << ',' << r.vehicle_id << ',' << r.state.x << ',' << r.state.y << ',' << r.state.psi << ','
        << r.state.v << ',' << r.a << ',' << r.delta << '\n';
  }
}

std::string metrics_to_json(const EpisodeMetrics& m) {
  json j;
  j["scenario"] = m.scenario;
  j["policy"] = std::string(to_string(m.policy));
  j["seed"] = m.seed;
  j["steps"] = m.steps;
  j["ego_mean_speed"] = m.ego_mean_speed;
  j["others_mean_speed"] = m.others_mean_speed;
  j["min_distance"] = number(m.min_distance);
  j["collision"] = m.collision;
  j["lane_changes"] = m.lane_changes;
  j["first_lane_change_time"] = m.first_lane_change_time ? json(*m.first_lane_change_time) : json(nullptr);
  j["initial_lane"] = m.initial_lane;
  j["final_lane"] = m.final_lane;
  j["final_speed"] = m.final_speed;
  j["min_speed"] = m.min_speed;
  j["solver_failures"] = m.solver_failures;
  j["planner_steps"] = m.planner_steps;
  j["optimal_steps"] = m.optimal_steps;
  j["min_planned_distance_optimal"] = number(m.min_planned_distance_optimal);
  j["max_certificate_residual"] = m.max_certificate_residual;
  j["mean_solve_time"] = m.mean_solve_time;
  j["max_solve_time"] = m.max_solve_time;
  j["aborts"] = m.aborts;
  j["decisions"] = json::array();
  for (const auto& d : m.decisions) {
    j["decisions"].push_back({{"step", d.step},
                              {"chosen_index", d.chosen_index},
                              {"lateral", std::string(to_string(d.lat))},
                              {"longitudinal", std::string(to_string(d.lon))},
                              {"abort", d.abort},
                              {"costs", costs_json(d.costs)}});
  }
  return j.dump(2);
}

EpisodeMetrics metrics_from_json(const std::string& text) {
  EpisodeMetrics m;
  try {
    const json j = json::parse(text);
    m.scenario = j.value("scenario", "");
    m.policy = parse_policy(j.at("policy").get<std::string>());
    m.seed = j.value("seed", std::uint64_t{0});
    m.steps = j.value("steps", 0);
    m.ego_mean_speed = j.value("ego_mean_speed", 0.0);
    m.others_mean_speed = j.value("others_mean_speed", 0.0);
    m.min_distance = number_from(j, "min_distance");
    m.collision = j.value("collision", false);
    m.lane_changes = j.value("lane_changes", 0);
    if (j.contains("first_lane_change_time") && !j.at("first_lane_change_time").is_null())
      m.first_lane_change_time = j.at("first_lane_change_time").get<double>();
    m.initial_lane = j.value("initial_lane", 0);
    m.final_lane = j.value("final_lane", 0);
    m.final_speed = j.value("final_speed", 0.0);
    m.min_speed = j.value("min_speed", 0.0);
    m.solver_failures = j.value("solver_failures", 0);
    m.planner_steps = j.value("planner_steps", 0);
    m.optimal_steps = j.value("optimal_steps", 0);
    m.min_planned_distance_optimal = number_from(j, "min_planned_distance_optimal");
    m.max_certificate_residual = j.value("max_certificate_residual", 0.0);
    m.mean_solve_time = j.value("mean_solve_time", 0.0);
    m.max_solve_time = j.value("max_solve_time", 0.0);
    m.aborts = j.value("aborts", 0);
    for (const auto& d : j.value("decisions", json::array())) {
      DecisionRecord r;
      r.step = d.value("step", std::int64_t{0});
      r.chosen_index = d.value("chosen_index", 4);
      r.lat = lat_from(d.value("lateral", "KEEP"));
      r.lon = lon_from(d.value("longitudinal", "KEEP_SPEED"));
      r.abort = d.value("abort", false);
      for (const auto& c : d.value("costs", json::array())) {
        CostBreakdown b;
        b.index = c.value("index", 0);
        b.lat = lat_from(c.value("lateral", "KEEP"));
        b.lon = lon_from(c.value("longitudinal", "KEEP_SPEED"));
        b.J_s_lon = c.value("J_s_lon", 0.0);
        b.J_s_lat = c.value("J_s_lat", 0.0);
        b.J_s = c.value("J_s", 0.0);
        b.J_e = c.value("J_e", 0.0);
        b.J_c = c.value("J_c", 0.0);
        b.J_d = c.value("J_d", 0.0);
        r.costs.push_back(b);
      }
      m.decisions.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed metrics JSON: ") + e.what());
  }
  return m;
}

void write_episode(const fs::path& dir, const EpisodeResult& result) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "trace.csv");
    write_trace_csv(out, result.trace);
  }
  if (!result.plan_log.empty()) write_file(dir / "plan.csv", result.plan_log);
  write_file(dir / "metrics.json", metrics_to_json(result.metrics) + "\n");
  json decisions = json::parse(metrics_to_json(result.metrics)).at("decisions");
  write_file(dir / "decisions.json", decisions.dump(2) + "\n");
}

std::vector<EpisodeMetrics> read_episodes(const fs::path& dir) {
  std::vector<EpisodeMetrics> out;
  if (!fs::exists(dir)) throw std::invalid_argument("no such directory: " + dir.string());
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto& p = entry.path();
    const bool single = p.filename() == "metrics.json";
    const bool batch = p.extension() == ".json" && p.parent_path().filename() == "episodes";
    if (single || batch) out.push_back(metrics_from_json(read_file(p)));
  }
  std::stable_sort(out.begin(), out.end(), [](const EpisodeMetrics& a, const EpisodeMetrics& b) {
    return std::tie(a.policy, a.seed, a.scenario) < std::tie(b.policy, b.seed, b.scenario);
  });
  return out;
}

void write_report(const fs::path& dir, const std::vector<EpisodeMetrics>& episodes) {
  fs::create_directories(dir);
  const auto summary = summarize(episodes);
  json js = json::array();
  std::ostringstream csv;
  csv << "policy,episodes,ego_mean_speed,others_mean_speed,min_distance,collisions,lane_changes_per_episode,"
         "solver_failures,planner_steps,min_planned_distance_optimal,max_certificate_residual,mean_solve_time\n";
  for (const auto& s : summary) {
    js.push_back({{"policy", std::string(to_string(s.policy))},
                  {"episodes", s.episodes},
                  {"ego_mean_speed", s.ego_mean_speed},
                  {"others_mean_speed", s.others_mean_speed},
                  {"min_distance", number(s.min_distance)},
                  {"collisions", s.collisions},
                  {"lane_changes_per_episode", s.lane_changes},
                  {"solver_failures", s.solver_failures},
                  {"planner_steps", s.planner_steps},
                  {"min_planned_distance_optimal", number(s.min_planned_distance_optimal)},
                  {"max_certificate_residual", s.max_certificate_residual},
                  {"mean_solve_time", s.mean_solve_time}});
    csv << to_string(s.policy) << ',' << s.episodes << ',' << s.ego_mean_speed << ',' << s.others_mean_speed << ','
        << s.min_distance << ',' << s.collisions << ',' << s.lane_changes << ',' << s.solver_failures << ','
        << s.planner_steps << ',' << s.min_planned_distance_optimal << ',' << s.max_certificate_residual << ','
        << s.mean_solve_time << '\n';
  }
  write_file(dir / "summary.json", js.dump(2) + "\n");
  write_file(dir / "summary.csv", csv.str());

  std::ostringstream ep;
  ep << "policy,scenario,seed,steps,ego_mean_speed,others_mean_speed,min_distance,collision,lane_changes,"
        "first_lane_change_time,final_speed,solver_failures,min_planned_distance_optimal\n";
  std::ostringstream dec;
  dec << "policy,scenario,seed,step,chosen,index,lateral,longitudinal,J_s_lon,J_s_lat,J_s,J_e,J_c,J_d\n";
  for (const auto& e : episodes) {
    ep << to_string(e.policy) << ',' << e.scenario << ',' << e.seed << ',' << e.steps << ',' << e.ego_mean_speed
       << ',' << e.others_mean_speed << ',' << e.min_distance << ',' << (e.collision ? 1 : 0) << ','
       << e.lane_changes << ',' << (e.first_lane_change_time ? std::to_string(*e.first_lane_change_time) : "")
       << ',' << e.final_speed << ',' << e.solver_failures << ',' << e.min_planned_distance_optimal << '\n';
    for (const auto& d : e.decisions) {
      for (const auto& c : d.costs) {
        dec << to_string(e.policy) << ',' << e.scenario << ',' << e.seed << ',' << d.step << ','
            << (c.index == d.chosen_index ? 1 : 0) << ',' << c.index << ',' << to_string(c.lat) << ','
            << to_string(c.lon) << ',' << c.J_s_lon << ',' << c.J_s_lat << ',' << c.J_s << ',' << c.J_e << ','
            << c.J_c << ',' << c.J_d << '\n';
      }
    }
  }
  write_file(dir / "episodes.csv", ep.str());
  write_file(dir / "decisions.csv", dec.str());
}

}  // namespace cooplane
