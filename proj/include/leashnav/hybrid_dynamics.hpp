#pragma once

#include <span>
#include <vector>

#include "leashnav/geometry.hpp"
#include "leashnav/tension_model.hpp"

namespace leashnav {

enum class Mode { Taut, Slack };

// Two readings of the continuous dynamics. PaperFaithful integrates the
// published equations verbatim (unsigned cross term, l0 divisor, no yaw-rate
// feedthrough into phi while slack). GeometricConsistent differentiates the
// leash geometry directly: a slack leash leaves the human exactly stationary
// and a taut leash moves the human along the leash direction.
enum class DynamicsVariant { PaperFaithful, GeometricConsistent };

// Per-axis attenuation of commanded motion in taut mode, each in [0, 1].
struct DiscountCoefficients {
  double x = 1.0;
  double y = 1.0;
  double theta = 1.0;
  double phi = 1.0;
};

struct ConfigurationRate {
  double dx = 0.0;
  double dy = 0.0;
  double dtheta = 0.0;
  double dphi = 0.0;
  double dl = 0.0;
};

struct HybridState {
  Configuration q;
  Mode mode = Mode::Slack;
};

// Continuous taut-mode dynamics. Requires |q.l - l0| < 1e-9.
ConfigurationRate taut_derivative(const Configuration& q, const ControlInput& u,
                                  const DiscountCoefficients& alpha, const LeashParams& params,
                                  DynamicsVariant variant);

// Continuous slack-mode dynamics, valid for l < l0 (and on the boundary).
ConfigurationRate slack_derivative(const Configuration& q, const ControlInput& u,
                                   const LeashParams& params, DynamicsVariant variant);

// Taut region membership: e_l . e_B >= 0 and F >= f_bar. A zero-speed
// command has no velocity direction and evaluates to false.
bool guard_to_taut(const Configuration& q, const ControlInput& u, double force,
                   const LeashParams& params);

// Slack region membership: e_l . e_B <= 0 or F <= f_bar. Zero-speed commands
// contribute a zero dot product and therefore evaluate to true.
bool guard_to_slack(const Configuration& q, const ControlInput& u, double force,
                    const LeashParams& params);

// Reset map applied at the slack->taut event: snaps l to exactly l0.
// Throws GuardViolation unless l is already within 1e-6 of l0. The
// directional/tension half of the guard is the integrator's responsibility.
Configuration reset_slack_to_taut(const Configuration& q, const LeashParams& params);

// One hybrid step of length dt in (0, 0.1]: RK4 on the active mode, bisection
// localization of the slack->taut crossing of l = l0 to 1e-6 m, reset map at
// the event, and boundary evaluation of the taut->slack guard using the
// model-predicted tension. Angles are wrapped after the step.
HybridState step(const HybridState& state, const ControlInput& u, double dt,
                 const DiscountCoefficients& alpha, const LeashParams& params,
                 const TensionModel& tension, DynamicsVariant variant);

// Applies step over an input sequence; result[0] is the initial state and the
// result has inputs.size() + 1 entries.
std::vector<HybridState> rollout(const Configuration& q0, Mode mode0,
                                 std::span<const ControlInput> inputs, double dt,
                                 const DiscountCoefficients& alpha, const LeashParams& params,
                                 const TensionModel& tension, DynamicsVariant variant);

}  // namespace leashnav
