#include "leashnav/geometry.hpp"

namespace leashnav {

double wrap_angle(double a) {
  double r = std::fmod(a + M_PI, 2.0 * M_PI);
  if (r <= 0.0) r += 2.0 * M_PI;
  return r - M_PI;
}

Vec2 rotate(double angle, Vec2 v) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

Vec2 leash_direction_world(const Configuration& q) {
  const double psi = q.theta - q.phi;
  return {std::cos(psi), std::sin(psi)};
}

Vec2 leash_direction_body(double phi) { return {std::cos(phi), -std::sin(phi)}; }

Vec2 human_position(const Configuration& q) {
  const Vec2 e_l = leash_direction_world(q);
  return {q.x - q.l * e_l.x, q.y - q.l * e_l.y};
}

Vec2 body_direction_world(const Configuration& q, const ControlInput& u) {
  const double speed = u.speed();
  if (speed <= kZeroSpeedEps) {
    throw ZeroSpeed("body_direction_world: commanded speed is zero");
  }
  const Vec2 world = rotate(q.theta, u.v_body);
  return world * (1.0 / speed);
}

Configuration wrap_configuration_angles(Configuration q) {
  q.theta = wrap_angle(q.theta);
  q.phi = wrap_angle(q.phi);
  return q;
}

bool is_finite(const Configuration& q) {
  return std::isfinite(q.x) && std::isfinite(q.y) && std::isfinite(q.theta) &&
         std::isfinite(q.phi) && std::isfinite(q.l);
}

}  // namespace leashnav
