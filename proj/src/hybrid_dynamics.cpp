#include "leashnav/hybrid_dynamics.hpp"

#include <cmath>

namespace leashnav {
namespace {

constexpr double kEventTol = 1e-6;   // [m] bisection tolerance on l - l0
constexpr int kMaxBisection = 60;
constexpr double kTautTol = 1e-9;    // taut precondition |l - l0|

// Body-frame cross/dot of the leash direction with the commanded velocity.
// cross(e_l, R(theta) v_body) and dot(e_l, R(theta) v_body) are invariant
// under the shared rotation, so they reduce to functions of phi alone.
double leash_cross(const Configuration& q, const ControlInput& u) {
  return u.v_body.x * std::sin(q.phi) + u.v_body.y * std::cos(q.phi);
}

double leash_dot(const Configuration& q, const ControlInput& u) {
  return u.v_body.x * std::cos(q.phi) - u.v_body.y * std::sin(q.phi);
}

Configuration advance(const Configuration& q, const ConfigurationRate& r, double h) {
  Configuration out = q;
  out.x += h * r.dx;
  out.y += h * r.dy;
  out.theta += h * r.dtheta;
  out.phi += h * r.dphi;
  out.l += h * r.dl;
  return out;
}

template <typename Field>
Configuration rk4_step(const Configuration& q, double h, const Field& f) {
  const ConfigurationRate k1 = f(q);
  const ConfigurationRate k2 = f(advance(q, k1, 0.5 * h));
  const ConfigurationRate k3 = f(advance(q, k2, 0.5 * h));
  const ConfigurationRate k4 = f(advance(q, k3, h));
  Configuration out = q;
  out.x += h / 6.0 * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
  out.y += h / 6.0 * (k1.dy + 2.0 * k2.dy + 2.0 * k3.dy + k4.dy);
  out.theta += h / 6.0 * (k1.dtheta + 2.0 * k2.dtheta + 2.0 * k3.dtheta + k4.dtheta);
  out.phi += h / 6.0 * (k1.dphi + 2.0 * k2.dphi + 2.0 * k3.dphi + k4.dphi);
  out.l += h / 6.0 * (k1.dl + 2.0 * k2.dl + 2.0 * k3.dl + k4.dl);
  return out;
}

Configuration integrate_mode(const Configuration& q, const ControlInput& u, double h, Mode mode,
                             const DiscountCoefficients& alpha, const LeashParams& params,
                             DynamicsVariant variant) {
  if (mode == Mode::Taut) {
    Configuration out = rk4_step(
        q, h, [&](const Configuration& s) { return taut_derivative(s, u, alpha, params, variant); });
    out.l = params.l0;  // l is never integrated in taut mode
    return out;
  }
  return rk4_step(q, h,
                  [&](const Configuration& s) { return slack_derivative(s, u, params, variant); });
}

}  // namespace

ConfigurationRate taut_derivative(const Configuration& q, const ControlInput& u,
                                  const DiscountCoefficients& alpha, const LeashParams& params,
                                  DynamicsVariant variant) {
  const Vec2 v_w = rotate(q.theta, u.v_body);
  const double cr = leash_cross(q, u);

  ConfigurationRate r;
  r.dx = alpha.x * v_w.x;
  r.dy = alpha.y * v_w.y;
  r.dtheta = alpha.theta * u.omega;
  if (variant == DynamicsVariant::PaperFaithful) {
    r.dphi = -alpha.theta * u.omega - alpha.phi * std::abs(cr) / params.l0;
  } else {
    r.dphi = alpha.theta * u.omega - alpha.phi * cr / params.l0;
  }
  r.dl = 0.0;
  return r;
}

ConfigurationRate slack_derivative(const Configuration& q, const ControlInput& u,
                                   const LeashParams& params, DynamicsVariant variant) {
  const Vec2 v_w = rotate(q.theta, u.v_body);
  const double cr = leash_cross(q, u);
  const double dd = leash_dot(q, u);

  ConfigurationRate r;
  r.dx = v_w.x;
  r.dy = v_w.y;
  r.dtheta = u.omega;
  if (variant == DynamicsVariant::PaperFaithful) {
    r.dphi = -std::abs(cr) / params.l0;
  } else {
    r.dphi = u.omega - cr / q.l;
  }
  r.dl = dd;
  return r;
}

bool guard_to_taut(const Configuration& q, const ControlInput& u, double force,
                   const LeashParams& params) {
  if (u.speed() <= kZeroSpeedEps) return false;
  return leash_dot(q, u) >= 0.0 && force >= params.f_bar;
}

bool guard_to_slack(const Configuration& q, const ControlInput& u, double force,
                    const LeashParams& params) {
  const double dd = u.speed() <= kZeroSpeedEps ? 0.0 : leash_dot(q, u);
  return dd <= 0.0 || force <= params.f_bar;
}

Configuration reset_slack_to_taut(const Configuration& q, const LeashParams& params) {
  if (std::abs(q.l - params.l0) > kEventTol) {
    throw GuardViolation("reset_slack_to_taut: leash is not at full length");
  }
  Configuration out = q;
  out.l = params.l0;
  return out;
}

HybridState step(const HybridState& state, const ControlInput& u, double dt,
                 const DiscountCoefficients& alpha, const LeashParams& params,
                 const TensionModel& tension, DynamicsVariant variant) {
  if (!(dt > 0.0 && dt <= 0.1)) {
    throw InvalidInput("step: dt must lie in (0, 0.1] s");
  }
  if (!is_finite(state.q)) {
    throw NonFinite("step: non-finite state");
  }

  HybridState s = state;

  if (s.mode == Mode::Taut) {
    // Taut -> slack only on strict guard violation; on the guard boundary
    // (dd = 0 or F = f_bar) the current mode is kept to avoid chattering.
    const double f_pred = predict(tension, s.q, u);
    const bool receding = u.speed() > kZeroSpeedEps && leash_dot(s.q, u) < 0.0;
    if (receding || f_pred < params.f_bar) {
      s.mode = Mode::Slack;
    }
  }

  if (s.mode == Mode::Taut) {
    Configuration q = integrate_mode(s.q, u, dt, Mode::Taut, alpha, params, variant);
    q = wrap_configuration_angles(q);
    if (!is_finite(q)) throw NonFinite("step: taut integration diverged");
    return {q, Mode::Taut};
  }

  // Slack mode: detect the l = l0 crossing within the step.
  s.q.l = std::min(s.q.l, params.l0);
  const Configuration q_end = integrate_mode(s.q, u, dt, Mode::Slack, alpha, params, variant);
  if (q_end.l <= params.l0) {
    Configuration q = wrap_configuration_angles(q_end);
    if (!is_finite(q)) throw NonFinite("step: slack integration diverged");
    return {q, Mode::Slack};
  }

  // Bisection on g(tau) = l(tau) - l0 over [0, dt]; the left endpoint always
  // satisfies g <= 0, so the returned event state never overshoots by more
  // than the tolerance.
  double lo = 0.0;
  double hi = dt;
  Configuration q_event = s.q;
  double g_event = s.q.l - params.l0;
  for (int it = 0; it < kMaxBisection && std::abs(g_event) > kEventTol; ++it) {
    const double mid = 0.5 * (lo + hi);
    const Configuration q_mid = integrate_mode(s.q, u, mid, Mode::Slack, alpha, params, variant);
    const double g_mid = q_mid.l - params.l0;
    if (g_mid > 0.0) {
      hi = mid;
    } else {
      lo = mid;
      q_event = q_mid;
      g_event = g_mid;
    }
    if (std::abs(g_mid) <= kEventTol) {
      q_event = q_mid;
      g_event = g_mid;
      lo = mid;
      break;
    }
  }

  const double remaining = dt - lo;
  const double f_event = predict(tension, q_event, u);
  if (guard_to_taut(q_event, u, f_event, params)) {
    Configuration q = reset_slack_to_taut(q_event, params);
    if (remaining > 0.0) {
      q = integrate_mode(q, u, remaining, Mode::Taut, alpha, params, variant);
    }
    q = wrap_configuration_angles(q);
    if (!is_finite(q)) throw NonFinite("step: post-event integration diverged");
    return {q, Mode::Taut};
  }

  // The leash reached full length but the taut guard does not hold (an
  // inextensible leash cannot stretch, so l is capped while the mode stays
  // slack).
  Configuration q = q_event;
  if (remaining > 0.0) {
    q = integrate_mode(q_event, u, remaining, Mode::Slack, alpha, params, variant);
  }
  q.l = std::min(q.l, params.l0);
  q = wrap_configuration_angles(q);
  if (!is_finite(q)) throw NonFinite("step: slack integration diverged");
  return {q, Mode::Slack};
}

std::vector<HybridState> rollout(const Configuration& q0, Mode mode0,
                                 std::span<const ControlInput> inputs, double dt,
                                 const DiscountCoefficients& alpha, const LeashParams& params,
                                 const TensionModel& tension, DynamicsVariant variant) {
  if (inputs.empty()) {
    throw EmptyData("rollout: empty input sequence");
  }
  std::vector<HybridState> states;
  states.reserve(inputs.size() + 1);
  states.push_back({q0, mode0});
  for (const ControlInput& u : inputs) {
    states.push_back(step(states.back(), u, dt, alpha, params, tension, variant));
  }
  return states;
}

}  // namespace leashnav
