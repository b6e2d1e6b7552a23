#pragma once

#include <cmath>

#include "leashnav/errors.hpp"

namespace leashnav {

// Commanded speeds at or below this are treated as "no motion": every term
// that would require normalizing the velocity direction evaluates to zero.
inline constexpr double kZeroSpeedEps = 1e-9;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator-() const { return {-x, -y}; }
  double norm() const { return std::hypot(x, y); }
  double squared_norm() const { return x * x + y * y; }
};

inline Vec2 operator*(double s, Vec2 v) { return v * s; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
// z-component of the 3-D cross product of two planar vectors.
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

// Generalized coordinates q = (x, y, theta, phi, l):
//   x, y   robot position in the world frame [m]
//   theta  robot heading in the world frame [rad]
//   phi    human bearing in the robot body frame [rad]
//   l      human-robot distance, 0 < l <= l0 [m]
struct Configuration {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  double phi = 0.0;
  double l = 1.0;
};

// Robot command u = (v_body, omega): body-frame velocity plus yaw rate.
struct ControlInput {
  Vec2 v_body;
  double omega = 0.0;

  double speed() const { return v_body.norm(); }
};

struct LeashParams {
  double l0 = 1.3;           // leash length [m]
  double f_bar = 12.0;       // slack/taut tension threshold [N]
  double robot_radius = 0.15;
  double human_radius = 0.15;
};

// Maps any finite angle into (-pi, pi].
double wrap_angle(double a);

Vec2 rotate(double angle, Vec2 v);

// Unit vector from the human to the robot, world frame:
// e_l = (cos(theta - phi), sin(theta - phi)).
Vec2 leash_direction_world(const Configuration& q);

// The same direction expressed in the robot body frame: (cos phi, -sin phi).
// Dot products against body-frame velocities match the world-frame form.
Vec2 leash_direction_body(double phi);

// Human position x_h = x - l * e_l. Valid in both taut and slack modes.
Vec2 human_position(const Configuration& q);

// World-frame unit direction of the commanded velocity. Throws ZeroSpeed when
// the command is below kZeroSpeedEps; callers must treat all direction
// dependent terms as zero in that case.
Vec2 body_direction_world(const Configuration& q, const ControlInput& u);

// Returns q with theta and phi wrapped into (-pi, pi].
Configuration wrap_configuration_angles(Configuration q);

bool is_finite(const Configuration& q);

}  // namespace leashnav
