#pragma once

#include <optional>
#include <span>
#include <string>

#include "leashnav/simulator.hpp"

namespace leashnav {

struct RenderSpec {
  double pixels_per_meter = 80.0;
  double padding = 0.8;  // world-space border [m]
  bool show_obstacles = true;
  bool show_robot_path = true;
  bool show_human_path = true;
  bool show_waypoints = true;
  bool show_slack = true;  // highlight slack portions of the robot path
};

// Deterministic SVG: obstacles, waypoint chain, robot/human polylines with
// slack segments drawn dashed.
std::string render_svg(const ObstacleSet& obstacles, const SimLog* log,
                       std::span<const Configuration> waypoints, const RenderSpec& spec);

}  // namespace leashnav
