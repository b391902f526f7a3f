#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cooplane/builtin.hpp"
#include "cooplane/harness.hpp"
#include "cooplane/io.hpp"

namespace fs = std::filesystem;
using namespace cooplane;

namespace {

Scenario resolve_scenario(const std::string& arg, std::uint64_t seed) {
  if (fs::is_regular_file(arg)) return load_scenario(arg);
  return builtin_scenario(arg, seed);
}

std::vector<Policy> parse_policies(const std::string& csv) {
  std::vector<Policy> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(parse_policy(item));
  }
  if (out.empty()) throw std::invalid_argument("no policies given");
  return out;
}

void print_summary(const std::vector<EpisodeMetrics>& episodes) {
  for (const auto& s : summarize(episodes)) {
    std::cout << to_string(s.policy) << ": episodes=" << s.episodes << " ego_mean=" << s.ego_mean_speed
              << " others_mean=" << s.others_mean_speed << " collisions=" << s.collisions
              << " solver_failures=" << s.solver_failures << "/" << s.planner_steps << '\n';
  }
}

bool proposed_collided(const std::vector<EpisodeMetrics>& episodes) {
  for (const auto& m : episodes)
    if (m.policy == Policy::kProposed && m.collision) return true;
  return false;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lane-change planning simulator"};
  app.require_subcommand(1);

  std::string scenario = "case1", policy = "PROPOSED", out_dir = "out";
  std::uint64_t seed = 1;
  auto* run = app.add_subcommand("run", "Run one episode and write its trace, plan log and metrics");
  run->add_option("--scenario", scenario, "Scenario JSON file or builtin name (case1, case2, random3lane[:density])");
  run->add_option("--policy", policy, "PROPOSED, PROPOSED_WO_IP or IDM_MOBIL");
  run->add_option("--seed", seed, "Background traffic seed");
  run->add_option("--out", out_dir, "Output directory");

  int episodes = 100, threads = 0;
  std::string policies = "PROPOSED,PROPOSED_WO_IP,IDM_MOBIL", batch_scenario_name;
  std::uint64_t seed_base = 1;
  std::string batch_out = "batch";
  auto* batch = app.add_subcommand("batch", "Paired-seed batch over random three-lane traffic");
  batch->add_option("--episodes", episodes, "Episodes per policy")->check(CLI::PositiveNumber);
  batch->add_option("--policies", policies, "Comma-separated policy names");
  batch->add_option("--seed-base", seed_base, "Seed of episode 0");
  batch->add_option("--scenario", batch_scenario_name, "Fixed scenario instead of the density sweep");
  batch->add_option("--threads", threads, "Worker threads, 0 for all cores");
  batch->add_option("--out", batch_out, "Output directory");

  std::string in_dir;
  auto* report = app.add_subcommand("report", "Summarize episode metrics found under a directory");
  report->add_option("--in", in_dir, "Directory written by run or batch")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      EpisodeConfig cfg;
      cfg.scenario = resolve_scenario(scenario, seed);
      cfg.policy = parse_policy(policy);
      cfg.seed = seed;
      cfg.record_trace = true;
      const EpisodeResult r = run_episode(cfg);
      write_episode(out_dir, r);
      const auto& m = r.metrics;
      std::cout << to_string(m.policy) << " on " << m.scenario << " seed " << m.seed << ": ego_mean=" << m.ego_mean_speed
                << " final_lane=" << m.final_lane << " lane_changes=" << m.lane_changes << " collision=" << m.collision
                << " solver_failures=" << m.solver_failures << "/" << m.planner_steps << '\n';
      return m.policy == Policy::kProposed && m.collision ? 1 : 0;
    }
    if (*batch) {
      BatchConfig b;
      b.episodes = episodes;
      b.policies = parse_policies(policies);
      b.seed_base = seed_base;
      b.threads = threads;
      if (batch_scenario_name.empty()) {
        b.scenario = batch_scenario;
      } else {
        b.scenario = [name = batch_scenario_name](int, std::uint64_t s) { return resolve_scenario(name, s); };
      }
      b.on_episode = [](const EpisodeMetrics& m) {
        std::cerr << to_string(m.policy) << " seed " << m.seed << " ego_mean=" << m.ego_mean_speed
                  << (m.collision ? " COLLISION" : "") << '\n';
      };
      const BatchReport r = run_batch(b);
      const fs::path dir = fs::path(batch_out) / "episodes";
      fs::create_directories(dir);
      for (const auto& m : r.episodes) {
        std::ofstream f(dir / (std::string(to_string(m.policy)) + "_" + std::to_string(m.seed) + ".json"));
        f << metrics_to_json(m) << '\n';
      }
      write_report(batch_out, r.episodes);
      print_summary(r.episodes);
      return proposed_collided(r.episodes) ? 1 : 0;
    }
    if (*report) {
      const auto eps = read_episodes(in_dir);
      write_report(in_dir, eps);
      print_summary(eps);
      return proposed_collided(eps) ? 1 : 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
