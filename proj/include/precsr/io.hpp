#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "precsr/eprocess.hpp"
#include "precsr/experiments.hpp"
#include "precsr/geometry.hpp"

namespace precsr {

// Shortest decimal form that parses back to the same bits. All numeric text
// this module writes goes through these two, so CSV and JSON round trips are
// exact.
std::string fmt_double(double v);
double parse_double(std::string_view text);  // throws parse_error

// Point files: one "x,y" or "x,y,t" row per line, an optional header row,
// blank lines ignored. Column count must be consistent; errors carry
// "path:line:". times stays empty when no third column is present.
struct PointsFile {
  std::vector<Point> points;
  std::vector<double> times;
};

PointsFile read_points_file(const std::string& path);
std::vector<Point> read_points_csv(const std::string& path);
void write_points_csv(const std::string& path, std::span<const Point> pts);

// Window files: {"format_version":1,"type":"rectangle","xmin":..,"xmax":..,
// "ymin":..,"ymax":..} or {"format_version":1,"type":"polygon",
// "vertices":[[x,y],...]}. Unknown keys are rejected.
nlohmann::json window_to_json(const Window& w);
Window window_from_json(const nlohmann::json& j);
Window read_window_json(const std::string& path);
void write_window_json(const std::string& path, const Window& w);

// Trajectory files: header "n,log_e,crossed", crossed written as 0/1.
// n must be strictly increasing; both readers reject anything else.
void write_trajectory_csv(const std::string& path, std::span<const TrajectoryRecord> records);
std::vector<TrajectoryRecord> read_trajectory_csv(const std::string& path);

// NDJSON alternative: one metadata record first ({"format":"trajectory",
// "format_version":1, plus run details in meta), then one
// {"n":..,"log_e":..,"crossed":..} object per observation record.
struct TrajectoryStream {
  nlohmann::json meta;
  std::vector<TrajectoryRecord> records;
};

void write_trajectory_ndjson(const std::string& path, std::span<const TrajectoryRecord> records,
                             const nlohmann::json& meta);
TrajectoryStream read_trajectory_ndjson(const std::string& path);

// Experiment configs are JSON with optional keys falling back to defaults;
// unknown keys are rejected so typos cannot silently revert to a default.
nlohmann::json experiment_config_to_json(const ExperimentConfig& cfg);
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
ExperimentConfig read_experiment_config(const std::string& path);
void write_experiment_config(const std::string& path, const ExperimentConfig& cfg);

// Report directory layout: summary.json (config + per-replicate summaries),
// trajectories.csv (replicate,n,log_e,crossed), rejection.csv (n,proportion at
// the configured alpha over the retained grid). read_report rebuilds the full
// report, records included, bit for bit.
void write_report(const std::string& dir, const ExperimentReport& report);
ExperimentReport read_report(const std::string& dir);

// Mid-stream snapshot of a sequential test: e-process state, its window, the
// raw-to-unit transform, and the full particle filter. Loading and continuing
// reproduces an unbroken run exactly.
nlohmann::json snapshot_to_json(const EProcessState& st, const UnitTransform& t);

struct Snapshot {
  EProcessState state;
  UnitTransform transform;
};

Snapshot snapshot_from_json(const nlohmann::json& j);
void write_snapshot(const std::string& path, const EProcessState& st, const UnitTransform& t);
Snapshot read_snapshot(const std::string& path);

// JSON file plumbing shared by the formats above; parse failures surface as
// parse_error with the path in the message.
nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace precsr
