#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "leashnav/global_planner.hpp"
#include "leashnav/hybrid_dynamics.hpp"
#include "leashnav/local_planner.hpp"

namespace leashnav {

struct NoiseConfig {
  double sigma_f = 0.0;  // tension measurement noise [N]
  double sigma_h = 0.0;  // human position measurement noise per axis [m]
};

struct SimTolerances {
  double waypoint_pos = 0.3;
  double waypoint_ang = M_PI / 8.0;
  double goal_pos = 0.2;
  double goal_ang = M_PI / 8.0;
};

struct ScenarioConfig {
  ObstacleSet obstacles;      // safety_margin here is the planning margin d
  LatticeSpec lattice;
  Configuration start;
  GoalSpec goal;
  LeashParams leash;
  DiscountCoefficients alpha{0.8, 0.8, 0.6, 0.8};
  TensionModel tension{109.8, 15.85, 15.06};
  NoiseConfig noise;
  PlannerWeights weights;
  PlannerBounds planner;
  SimTolerances tolerances;
  double replan_period = 0.5;
  double sim_dt = 0.01;
  double max_time = 120.0;
  std::uint64_t rng_seed = 0;
  double kf_accel_sigma = 0.5;  // process-noise acceleration [m/s^2]
  bool squared_force_rate = false;
};

// Constant-velocity Kalman tracker over (px, py, vx, vy) with position-only
// measurements.
struct KalmanTracker {
  Eigen::Vector4d state = Eigen::Vector4d::Zero();
  Eigen::Matrix4d covariance = Eigen::Matrix4d::Identity();
  double accel_sigma = 0.5;
  double meas_sigma = 0.05;
};

KalmanTracker make_tracker(Vec2 first_measurement, double meas_sigma, double accel_sigma);

// One predict/update cycle; keeps the covariance symmetric and throws NonPSD
// if it leaves the PSD cone beyond 1e-9.
KalmanTracker kf_update(const KalmanTracker& tracker, Vec2 measurement, double dt);

struct PlantOutput {
  HybridState state;
  double tension = 0.0;  // physical leash force: clamped prediction when taut, 0 slack
};

// One plant step: GeometricConsistent hybrid dynamics at sim_dt.
PlantOutput plant_step(const HybridState& state, const ControlInput& u,
                       const ScenarioConfig& config);

// Synthetic sensing: plant tension and human position with Gaussian noise.
std::pair<double, Vec2> sense(const PlantOutput& plant, const ScenarioConfig& config,
                              std::mt19937_64& rng);

struct SimRow {
  double t = 0.0;
  Configuration q;
  int mode = 0;  // 1 taut, 0 slack
  Vec2 human;
  Vec2 human_est;
  ControlInput u;
  double f_pred = 0.0;
  double f_meas = 0.0;
  int waypoint_idx = 0;
};

struct SimLog {
  std::vector<SimRow> rows;
};

enum class SimStatus { Success, Timeout, PlannerInfeasible, GlobalNoPath };

struct Metrics {
  SimStatus status = SimStatus::Timeout;
  double time_to_goal = 0.0;
  double min_clearance = 0.0;
  std::vector<std::pair<double, double>> slack_intervals;
  double max_human_speed_during_slack = 0.0;
  int collision_count = 0;
};

const char* to_string(SimStatus status);

// Closed-loop run: one global plan, local replans every replan_period toward
// the active waypoint, plant stepping with sensing and the Kalman tracker in
// the loop. Metrics are computed from the true states with zero margin.
std::pair<SimLog, Metrics> run(const ScenarioConfig& scenario);

}  // namespace leashnav
