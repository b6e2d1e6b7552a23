#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "leashnav/sysid.hpp"

namespace leashnav::testutil {

// Smooth pseudo-random command series: sums of sinusoids with seeded phases,
// rich enough to excite every discount coefficient.
inline std::vector<ControlInput> excitation_inputs(std::size_t n, double dt, unsigned seed,
                                                   double v_scale = 0.4, double w_scale = 0.6) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
  std::uniform_real_distribution<double> freq(0.15, 0.8);
  const double p1 = phase(rng), p2 = phase(rng), p3 = phase(rng), p4 = phase(rng);
  const double f1 = freq(rng), f2 = freq(rng), f3 = freq(rng), f4 = freq(rng);
  std::vector<ControlInput> inputs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * dt;
    ControlInput u;
    u.v_body.x = v_scale * (0.9 + 0.4 * std::sin(2.0 * M_PI * f1 * t + p1));
    u.v_body.y = 0.5 * v_scale * std::sin(2.0 * M_PI * f2 * t + p2);
    u.omega = w_scale * std::sin(2.0 * M_PI * f3 * t + p3) * std::cos(2.0 * M_PI * f4 * t + p4);
    inputs[i] = u;
  }
  return inputs;
}

// Taut guiding trail rolled with the same integrator the identifier uses.
inline TrajectoryLog make_taut_log(const DiscountCoefficients& alpha, const LeashParams& params,
                                   std::size_t n, double dt, unsigned seed,
                                   double position_noise = 0.0) {
  TrajectoryLog log;
  log.timestamps.resize(n);
  for (std::size_t i = 0; i < n; ++i) log.timestamps[i] = static_cast<double>(i) * dt;
  log.inputs = excitation_inputs(n, dt, seed);
  log.initial_config = Configuration{0.0, 0.0, 0.0, 0.0, params.l0};
  log.robot_gt.assign(n, Vec2{});
  log.human_gt.assign(n, Vec2{});
  const auto truth = predict_trajectory(log, alpha, params);
  std::mt19937_64 rng(seed + 1u);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 robot{truth[i].x, truth[i].y};
    const Vec2 human = human_position(truth[i]);
    log.robot_gt[i] = {robot.x + position_noise * gauss(rng), robot.y + position_noise * gauss(rng)};
    log.human_gt[i] = {human.x + position_noise * gauss(rng), human.y + position_noise * gauss(rng)};
  }
  return log;
}

// Mixed-walk trail with a measured tension channel. The heading follows the
// integrated yaw command from an initial heading along the leash, matching
// the log-format convention the fitter assumes.
inline TrajectoryLog make_tension_log(const TensionModel& truth, std::size_t n, double dt,
                                      unsigned seed, double force_noise) {
  TrajectoryLog log;
  log.timestamps.resize(n);
  for (std::size_t i = 0; i < n; ++i) log.timestamps[i] = static_cast<double>(i) * dt;
  log.inputs = excitation_inputs(n, dt, seed, 0.5, 0.4);
  log.robot_gt.assign(n, Vec2{});
  log.human_gt.assign(n, Vec2{});
  log.force.assign(n, 0.0);

  std::mt19937_64 rng(seed + 7u);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double theta = 0.0;
  Vec2 robot{0.0, 0.0};
  Vec2 human{-1.2, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    log.robot_gt[i] = robot;
    log.human_gt[i] = human;
    const Vec2 rel = robot - human;
    const double psi = std::atan2(rel.y, rel.x);
    const double phi = wrap_angle(theta - psi);
    const double v_proj = dot(log.inputs[i].v_body, leash_direction_body(phi));
    log.force[i] = truth.beta1 * v_proj + truth.beta2 + force_noise * gauss(rng);
    // advance: robot follows commands (undiscounted), human trails loosely
    const Vec2 v_world = rotate(theta, log.inputs[i].v_body);
    robot = robot + dt * v_world;
    theta += dt * log.inputs[i].omega;
    const Vec2 new_rel = robot - human;
    const double d = new_rel.norm();
    if (d > 1.2) human = robot - new_rel * (1.2 / d);
  }
  log.initial_config = Configuration{0.0, 0.0, 0.0, 0.0, 1.2};
  return log;
}

}  // namespace leashnav::testutil
