#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "cooplane/harness.hpp"
#include "cooplane/scenario.hpp"

namespace cooplane {

std::string scenario_to_json(const Scenario& scenario);
/// Missing fields keep their defaults. Throws std::invalid_argument on
/// malformed input or a scenario that fails validation.
Scenario scenario_from_json(const std::string& text);
Scenario load_scenario(const std::filesystem::path& path);
void save_scenario(const std::filesystem::path& path, const Scenario& scenario);

/// Columns: step, vehicle_id, x, y, psi, v, a, delta.
void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace);

std::string metrics_to_json(const EpisodeMetrics& metrics);
EpisodeMetrics metrics_from_json(const std::string& text);

/// trace.csv, plan.csv, metrics.json and decisions.json under `dir`.
void write_episode(const std::filesystem::path& dir, const EpisodeResult& result);

/// Every episode metrics file under `dir` (metrics.json files and the
/// episodes/ folder of a batch), sorted by policy, then seed.
std::vector<EpisodeMetrics> read_episodes(const std::filesystem::path& dir);

/// summary.json, summary.csv, episodes.csv and decisions.csv under `dir`.
void write_report(const std::filesystem::path& dir, const std::vector<EpisodeMetrics>& episodes);

}  // namespace cooplane
