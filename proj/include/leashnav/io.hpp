#pragma once

#include <json.hpp>
#include <span>
#include <string>
#include <vector>

#include "leashnav/local_planner.hpp"
#include "leashnav/simulator.hpp"
#include "leashnav/sysid.hpp"

namespace leashnav::io {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

// Locale-independent shortest round-trip formatting.
std::string format_double(double v);
double parse_double(const std::string& s, const std::string& context);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// Rejects keys outside `allowed`, naming the offender.
void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& context);

// --- trajectory logs (CSV: t,x_gt,y_gt,xh_gt,yh_gt,vbx,vby,omega[,force]) ---
// The initial configuration is reconstructed from the first row: the robot
// heading starts along the leash (phi = 0) and integrates the yaw command.
TrajectoryLog parse_trajectory_log_csv(const std::string& text);
std::string trajectory_log_to_csv(const TrajectoryLog& log);

// --- tension samples (CSV: v_proj,force) ---
std::vector<TensionSample> parse_tension_samples_csv(const std::string& text);
std::string tension_samples_to_csv(std::span<const TensionSample> samples);

// --- simulation log (CSV, schema in the README) ---
std::string simlog_to_csv(const SimLog& log);
SimLog parse_simlog_csv(const std::string& text);

// --- JSON documents ---
json scenario_to_json(const ScenarioConfig& scenario);
ScenarioConfig scenario_from_json(const json& j);
json scenario_schema();

json waypoints_to_json(std::span<const Configuration> waypoints);
std::vector<Configuration> waypoints_from_json(const json& j);

json metrics_to_json(const Metrics& metrics);

json solution_to_json(const CollocationSolution& sol);
CollocationSolution solution_from_json(const json& j);

json problem_to_json(const CollocationProblem& problem);
CollocationProblem problem_from_json(const json& j);

json tension_model_to_json(const TensionModel& model);
TensionModel tension_model_from_json(const json& j);

json identification_to_json(const IdentificationResult& result);

// Plain-text occupancy grid ('#' occupied, '.' free) with a resolution
// header; occupied cells become inscribed circles.
std::vector<Circle> parse_occupancy_grid(const std::string& text);

// Obstacle file: JSON circle list or occupancy grid, decided by content.
ObstacleSet load_obstacles(const std::string& path);

}  // namespace leashnav::io
