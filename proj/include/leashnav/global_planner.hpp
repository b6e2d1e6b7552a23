#pragma once

#include <span>
#include <vector>

#include "leashnav/hybrid_dynamics.hpp"

namespace leashnav {

struct Circle {
  Vec2 center;
  double radius = 0.0;
};

struct ObstacleSet {
  std::vector<Circle> circles;
  double safety_margin = 0.0;  // d, added to every clearance check
};

// Regular (x, y, phi) lattice. dphi must divide the full circle so the phi
// axis wraps onto itself; x and y are clipped to the bounds box.
struct LatticeSpec {
  double dx = 0.5;
  double dy = 0.25;
  double dphi = M_PI / 8.0;
  Vec2 bounds_min{-10.0, -10.0};
  Vec2 bounds_max{10.0, 10.0};
};

struct GoalSpec {
  double x = 0.0;
  double y = 0.0;
  double phi = 0.0;
  double theta = 0.0;
  double lambda = 1.0;  // weight of the heading term in the cost to-go
};

struct LatticePose {
  double x = 0.0;
  double y = 0.0;
  double phi = 0.0;
};

struct PlanOptions {
  bool admissible = false;  // zero the heuristic (Dijkstra mode)
  double step_time = 1.0;   // nominal duration of one lattice transition [s]
  DiscountCoefficients alpha{0.8, 0.8, 0.6, 0.8};
  // Variant of the taut phi-rate used to invert for the heading update. The
  // signed (GeometricConsistent) form keeps waypoint headings aligned with
  // the direction of travel; the unsigned form drifts them monotonically.
  DynamicsVariant theta_variant = DynamicsVariant::GeometricConsistent;
  // When set, waypoints whose robot-to-human segment crosses an obstacle are
  // pruned as well: a leash cannot pass through a wall. Off by default; the
  // plain disc model is the documented collision contract.
  bool prune_leash_crossings = false;
  std::size_t max_expansions = 2'000'000;
};

struct PlanResult {
  std::vector<Configuration> waypoints;
  double cost = 0.0;
  std::size_t expanded = 0;
};

// Per-axis moves from {-d, 0, +d} excluding the all-zero move (26 in the
// interior), filtered to the bounds box; phi wraps.
std::vector<LatticePose> successors(const LatticePose& node, const LatticeSpec& spec);

// Sum of squared step norms along the path, phi differences angle-wrapped.
double path_cost(std::span<const Configuration> path);

// Squared distance to the goal in (x, y, phi) plus lambda * (1 - cos(theta_n
// - theta_goal)). Not admissible in general.
double heuristic(const LatticePose& node, double theta_n, const GoalSpec& goal);

// True iff both the robot disc and the derived human disc clear every
// inflated obstacle (boundary inclusive).
bool collision_free(const Configuration& q, const ObstacleSet& obstacles,
                    const LeashParams& params);

// Heading propagated across one lattice move: the commanded velocity is the
// move displacement over the nominal step time and the yaw rate is chosen to
// realize the commanded phi change under the taut dynamics.
double propagate_theta(double theta, double phi, double dx, double dy, double dphi,
                       const DiscountCoefficients& alpha, const LeashParams& params,
                       double step_time, DynamicsVariant variant);

// A* over the lattice anchored at the start configuration. Returns a
// collision-free waypoint path (l = l0 throughout, theta propagated) from the
// start cell to a cell strictly within one lattice step of the goal per axis.
// Throws NoPath when the open set exhausts and InvalidInput when the start is
// invalid.
PlanResult plan(const Configuration& start, const GoalSpec& goal, const ObstacleSet& obstacles,
                const LatticeSpec& spec, const LeashParams& params, const PlanOptions& options = {});

}  // namespace leashnav
