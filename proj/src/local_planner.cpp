#include "leashnav/local_planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace leashnav {
namespace {

constexpr double kSlackForceGap = 1e-9;  // keeps slack forces strictly below f_bar

double wrap_diff(double a, double b, int component) {
  const double d = a - b;
  return (component == 2 || component == 3) ? wrap_angle(d) : d;
}

double get_q(const Configuration& q, int c) {
  switch (c) {
    case 0: return q.x;
    case 1: return q.y;
    case 2: return q.theta;
    case 3: return q.phi;
    default: return q.l;
  }
}

void set_q(Configuration& q, int c, double v) {
  switch (c) {
    case 0: q.x = v; break;
    case 1: q.y = v; break;
    case 2: q.theta = v; break;
    case 3: q.phi = v; break;
    default: q.l = v; break;
  }
}

double get_u(const ControlInput& u, int c) {
  switch (c) {
    case 0: return u.v_body.x;
    case 1: return u.v_body.y;
    default: return u.omega;
  }
}

}  // namespace

double evaluate_cost(const CollocationSolution& sol, const PlannerWeights& weights,
                     const Configuration& q_target, const LeashParams& leash,
                     bool squared_force_rate) {
  const std::size_t n = sol.inputs.size();
  double cost = 0.0;
  for (int c = 0; c < 5; ++c) {
    const double e = wrap_diff(get_q(sol.states.back(), c), get_q(q_target, c), c);
    cost += weights.q_target[c] * e * e;
  }
  cost += weights.s_t * sol.t_final;
  for (std::size_t k = 0; k < n; ++k) {
    for (int c = 0; c < 3; ++c) {
      const double uc = get_u(sol.inputs[k], c);
      cost += weights.q_input[c] * uc * uc;
    }
    cost += weights.s_f * sol.forces[k];
    cost += weights.s_l * (leash.l0 - sol.states[k].l);
    const double df = sol.forces[k + 1] - sol.forces[k];
    cost += squared_force_rate ? weights.s_df * df * df : weights.s_df * df;
  }
  return cost;
}

Configuration discrete_step(const Configuration& q, const ControlInput& u, int mode, double dt,
                            const DiscountCoefficients& alpha, const LeashParams& leash,
                            DynamicsVariant variant) {
  const double ct = std::cos(q.theta), st = std::sin(q.theta);
  const double cp = std::cos(q.phi), sp = std::sin(q.phi);
  const double vwx = ct * u.v_body.x - st * u.v_body.y;
  const double vwy = st * u.v_body.x + ct * u.v_body.y;
  const double cr = u.v_body.x * sp + u.v_body.y * cp;
  const double dd = u.v_body.x * cp - u.v_body.y * sp;
  const bool paper = variant == DynamicsVariant::PaperFaithful;

  Configuration out = q;
  if (mode == 1) {
    out.x += dt * alpha.x * vwx;
    out.y += dt * alpha.y * vwy;
    out.theta += dt * alpha.theta * u.omega;
    out.phi += dt * (paper ? -alpha.theta * u.omega - alpha.phi * std::abs(cr) / leash.l0
                           : alpha.theta * u.omega - alpha.phi * cr / leash.l0);
    out.l = leash.l0;
  } else {
    out.x += dt * vwx;
    out.y += dt * vwy;
    out.theta += dt * u.omega;
    out.phi += dt * (paper ? -std::abs(cr) / leash.l0 : u.omega - cr / q.l);
    out.l = std::min(q.l + dt * dd, leash.l0);
  }
  return out;
}

int mode_from_guards(const Configuration& q, const ControlInput& u, double force,
                     const LeashParams& leash) {
  return guard_to_taut(q, u, force, leash) ? 1 : 0;
}

double ResidualReport::max_violation() const {
  return std::max({initial, dynamics, state_box, input_box, time_box, force, clearance});
}

bool ResidualReport::feasible() const {
  return initial <= kDynamicsTol && dynamics <= kDynamicsTol && state_box <= kBoxTol &&
         input_box <= kBoxTol && time_box <= kBoxTol && force <= kForceTol &&
         clearance <= kClearanceTol;
}

ResidualReport constraint_residuals(const CollocationSolution& sol,
                                    const CollocationProblem& problem) {
  const int n = static_cast<int>(sol.inputs.size());
  const double dt = sol.t_final / std::max(1, n);
  ResidualReport rep;

  for (int c = 0; c < 5; ++c) {
    rep.initial = std::max(rep.initial,
                           std::abs(get_q(sol.states[0], c) - get_q(problem.q_curr, c)));
  }
  rep.stacked.push_back(rep.initial);

  for (int k = 0; k < n; ++k) {
    const Configuration next = discrete_step(sol.states[k], sol.inputs[k], sol.modes[k], dt,
                                             problem.alpha, problem.leash, problem.variant);
    for (int c = 0; c < 5; ++c) {
      const double d = std::abs(get_q(sol.states[k + 1], c) - get_q(next, c));
      rep.dynamics = std::max(rep.dynamics, d);
      rep.stacked.push_back(d);
    }
  }

  for (int k = 0; k <= n; ++k) {
    for (int c = 0; c < 5; ++c) {
      const double v = get_q(sol.states[k], c);
      const double hi = c == 4 ? std::min(problem.bounds.q_upper[4], problem.leash.l0)
                               : problem.bounds.q_upper[c];
      const double viol = std::max(problem.bounds.q_lower[c] - v, v - hi);
      if (k > 0) rep.state_box = std::max(rep.state_box, viol);
      rep.stacked.push_back(std::max(0.0, viol));
    }
  }
  for (int k = 0; k < n; ++k) {
    for (int c = 0; c < 3; ++c) {
      const double v = get_u(sol.inputs[k], c);
      const double viol = std::max(problem.bounds.u_lower[c] - v, v - problem.bounds.u_upper[c]);
      rep.input_box = std::max(rep.input_box, viol);
      rep.stacked.push_back(std::max(0.0, viol));
    }
  }
  rep.time_box = std::max(problem.bounds.t_min - sol.t_final, sol.t_final - problem.bounds.t_max);
  rep.time_box = std::max(0.0, rep.time_box);
  rep.stacked.push_back(rep.time_box);

  for (int k = 0; k <= n; ++k) {
    const int mode = sol.modes[std::min(k, n - 1)];
    const ControlInput& u = sol.inputs[std::min(k, n - 1)];
    double viol = 0.0;
    if (mode == 1) {
      const auto [lo, hi] = force_bounds(problem.tension, sol.states[k], u);
      viol = std::max(lo - sol.forces[k], sol.forces[k] - hi);
    } else {
      viol = std::max(-sol.forces[k], sol.forces[k] - problem.leash.f_bar);
    }
    rep.force = std::max(rep.force, viol);
    rep.stacked.push_back(std::max(0.0, viol));
  }

  for (int k = 0; k <= n; ++k) {
    const Vec2 robot{sol.states[k].x, sol.states[k].y};
    const Vec2 human = human_position(sol.states[k]);
    for (const Circle& c : problem.obstacles.circles) {
      const double mr = problem.obstacles.safety_margin + problem.leash.robot_radius + c.radius;
      const double mh = problem.obstacles.safety_margin + problem.leash.human_radius + c.radius;
      const double pr = mr - (robot - c.center).norm();
      const double ph = mh - (human - c.center).norm();
      rep.clearance = std::max({rep.clearance, pr, ph});
      rep.stacked.push_back(std::max(0.0, pr));
      rep.stacked.push_back(std::max(0.0, ph));
    }
  }
  return rep;
}

std::vector<Configuration> resimulate_inputs(const CollocationProblem& problem,
                                             const CollocationSolution& sol) {
  const int n = static_cast<int>(sol.inputs.size());
  const double dt = sol.t_final / std::max(1, n);
  std::vector<Configuration> states;
  states.reserve(n + 1);
  states.push_back(problem.q_curr);
  for (int k = 0; k < n; ++k) {
    const int mode = mode_from_guards(states.back(), sol.inputs[k], sol.forces[k], problem.leash);
    states.push_back(discrete_step(states.back(), sol.inputs[k], mode, dt, problem.alpha,
                                   problem.leash, problem.variant));
  }
  return states;
}

// ---------------------------------------------------------------------------
// FixedModeNlp

FixedModeNlp::FixedModeNlp(const CollocationProblem& problem, std::vector<int> modes)
    : problem_(&problem), modes_(std::move(modes)) {
  n_ = static_cast<int>(modes_.size());
  if (n_ < 1) throw InvalidInput("FixedModeNlp: empty mode sequence");
  n_vars_ = 5 * (n_ + 1) + 3 * n_ + (n_ + 1) + 1;
  n_eq_ = 5 * n_;
  n_ineq_ = 0;
  for (int k = 0; k <= n_; ++k) {
    const int mode = modes_[std::min(k, n_ - 1)];
    if (mode == 1) n_ineq_ += (k < n_) ? 4 : 2;  // band + (f_bar, direction)
  }
  n_ineq_ += 2 * (n_ + 1) * static_cast<int>(problem.obstacles.circles.size());
  lambda_eq = Eigen::VectorXd::Zero(n_eq_);
  mu_ineq = Eigen::VectorXd::Zero(n_ineq_);
  force_scale_ = std::max(1.0, std::abs(problem.tension.beta1));
  build_boxes();
  var_scale_ = Eigen::VectorXd::Ones(n_vars_);
  const int f0 = 5 * (n_ + 1) + 3 * n_;
  for (int k = 0; k <= n_; ++k) var_scale_[f0 + k] = force_scale_;
}

void FixedModeNlp::build_boxes() {
  const auto& b = problem_->bounds;
  const auto& leash = problem_->leash;
  lower_.resize(n_vars_);
  upper_.resize(n_vars_);
  const double l_hi = std::min(b.q_upper[4], leash.l0);

  for (int c = 0; c < 5; ++c) {
    lower_[c] = upper_[c] = get_q(problem_->q_curr, c);  // pinned initial state
  }
  for (int k = 1; k <= n_; ++k) {
    for (int c = 0; c < 5; ++c) {
      lower_[5 * k + c] = b.q_lower[c];
      upper_[5 * k + c] = (c == 4) ? l_hi : b.q_upper[c];
    }
  }
  const int u0 = 5 * (n_ + 1);
  for (int k = 0; k < n_; ++k) {
    for (int c = 0; c < 3; ++c) {
      lower_[u0 + 3 * k + c] = b.u_lower[c];
      upper_[u0 + 3 * k + c] = b.u_upper[c];
    }
  }
  const int f0 = u0 + 3 * n_;
  const double v_cap = std::hypot(std::max(std::abs(b.u_lower[0]), std::abs(b.u_upper[0])),
                                  std::max(std::abs(b.u_lower[1]), std::abs(b.u_upper[1])));
  const double f_cap =
      std::abs(problem_->tension.beta1) * v_cap + std::abs(problem_->tension.beta2) +
      problem_->tension.sigma + 1.0;
  for (int k = 0; k <= n_; ++k) {
    const int mode = modes_[std::min(k, n_ - 1)];
    lower_[f0 + k] = 0.0;
    upper_[f0 + k] = mode == 1 ? f_cap : std::max(0.0, leash.f_bar - kSlackForceGap);
  }
  lower_[n_vars_ - 1] = b.t_min;
  upper_[n_vars_ - 1] = b.t_max;
}

Eigen::VectorXd FixedModeNlp::pack(const CollocationSolution& sol) const {
  Eigen::VectorXd z(n_vars_);
  for (int k = 0; k <= n_; ++k) {
    for (int c = 0; c < 5; ++c) z[5 * k + c] = get_q(sol.states[k], c);
  }
  const int u0 = 5 * (n_ + 1);
  for (int k = 0; k < n_; ++k) {
    z[u0 + 3 * k] = sol.inputs[k].v_body.x;
    z[u0 + 3 * k + 1] = sol.inputs[k].v_body.y;
    z[u0 + 3 * k + 2] = sol.inputs[k].omega;
  }
  const int f0 = u0 + 3 * n_;
  for (int k = 0; k <= n_; ++k) z[f0 + k] = sol.forces[k];
  z[n_vars_ - 1] = sol.t_final;
  return z;
}

CollocationSolution FixedModeNlp::unpack(const Eigen::VectorXd& z) const {
  CollocationSolution sol;
  sol.states.resize(n_ + 1);
  sol.inputs.resize(n_);
  sol.forces.resize(n_ + 1);
  sol.modes = modes_;
  for (int k = 0; k <= n_; ++k) {
    for (int c = 0; c < 5; ++c) set_q(sol.states[k], c, z[5 * k + c]);
  }
  const int u0 = 5 * (n_ + 1);
  for (int k = 0; k < n_; ++k) {
    sol.inputs[k].v_body.x = z[u0 + 3 * k];
    sol.inputs[k].v_body.y = z[u0 + 3 * k + 1];
    sol.inputs[k].omega = z[u0 + 3 * k + 2];
  }
  const int f0 = u0 + 3 * n_;
  for (int k = 0; k <= n_; ++k) sol.forces[k] = z[f0 + k];
  sol.t_final = z[n_vars_ - 1];
  return sol;
}

Eigen::VectorXd FixedModeNlp::project(Eigen::VectorXd z) const {
  for (int i = 0; i < n_vars_; ++i) z[i] = std::clamp(z[i], lower_[i], upper_[i]);
  return z;
}

double FixedModeNlp::cost(const Eigen::VectorXd& z) const {
  CollocationSolution sol = unpack(z);
  return evaluate_cost(sol, problem_->weights, problem_->q_target, problem_->leash,
                       problem_->squared_force_rate);
}

void FixedModeNlp::constraints(const Eigen::VectorXd& z, Eigen::VectorXd& eq,
                               Eigen::VectorXd& ineq) const {
  eq.resize(n_eq_);
  ineq.resize(n_ineq_);
  const auto& pb = *problem_;
  const double T = z[n_vars_ - 1];
  const double dt = T / n_;
  const int u0 = 5 * (n_ + 1);
  const int f0 = u0 + 3 * n_;

  for (int k = 0; k < n_; ++k) {
    Configuration qk;
    for (int c = 0; c < 5; ++c) set_q(qk, c, z[5 * k + c]);
    ControlInput uk{{z[u0 + 3 * k], z[u0 + 3 * k + 1]}, z[u0 + 3 * k + 2]};
    const Configuration next = discrete_step(qk, uk, modes_[k], dt, pb.alpha, pb.leash,
                                             pb.variant);
    for (int c = 0; c < 5; ++c) {
      eq[5 * k + c] = z[5 * (k + 1) + c] - get_q(next, c);
    }
  }

  int gi = 0;
  for (int k = 0; k <= n_; ++k) {
    const int mode = modes_[std::min(k, n_ - 1)];
    if (mode != 1) continue;
    const int ku = std::min(k, n_ - 1);
    const double phi = z[5 * k + 3];
    const double vx = z[u0 + 3 * ku], vy = z[u0 + 3 * ku + 1];
    const double dd = vx * std::cos(phi) - vy * std::sin(phi);
    const double pred = pb.tension.beta1 * dd + pb.tension.beta2;
    const double F = z[f0 + k];
    ineq[gi++] = ((pred - pb.tension.sigma) - F) / force_scale_;
    ineq[gi++] = (F - (pred + pb.tension.sigma)) / force_scale_;
    if (k < n_) {
      ineq[gi++] = (pb.leash.f_bar - F) / force_scale_;
      ineq[gi++] = -dd;
    }
  }
  for (int k = 0; k <= n_; ++k) {
    Configuration qk;
    for (int c = 0; c < 5; ++c) set_q(qk, c, z[5 * k + c]);
    const Vec2 robot{qk.x, qk.y};
    const Vec2 human = human_position(qk);
    for (const Circle& c : pb.obstacles.circles) {
      const double mr = pb.obstacles.safety_margin + pb.leash.robot_radius + c.radius;
      const double mh = pb.obstacles.safety_margin + pb.leash.human_radius + c.radius;
      ineq[gi++] = mr - (robot - c.center).norm();
      ineq[gi++] = mh - (human - c.center).norm();
    }
  }
}

double FixedModeNlp::evaluate(const Eigen::VectorXd& z, Eigen::VectorXd* grad,
                              bool lagrangian_only) const {
  const auto& pb = *problem_;
  const auto& w = pb.weights;
  const double l0 = pb.leash.l0;
  const double T = z[n_vars_ - 1];
  const double dt = T / n_;
  const int u0 = 5 * (n_ + 1);
  const int f0 = u0 + 3 * n_;
  const int it = n_vars_ - 1;

  if (grad) grad->setZero(n_vars_);
  double value = 0.0;

  // --- cost -----------------------------------------------------------------
  for (int c = 0; c < 5; ++c) {
    const double e = wrap_diff(z[5 * n_ + c], get_q(pb.q_target, c), c);
    value += w.q_target[c] * e * e;
    if (grad) (*grad)[5 * n_ + c] += 2.0 * w.q_target[c] * e;
  }
  value += w.s_t * T;
  if (grad) (*grad)[it] += w.s_t;
  for (int k = 0; k < n_; ++k) {
    for (int c = 0; c < 3; ++c) {
      const double uc = z[u0 + 3 * k + c];
      value += w.q_input[c] * uc * uc;
      if (grad) (*grad)[u0 + 3 * k + c] += 2.0 * w.q_input[c] * uc;
    }
    value += w.s_f * z[f0 + k];
    if (grad) (*grad)[f0 + k] += w.s_f;
    value += w.s_l * (l0 - z[5 * k + 4]);
    if (grad) (*grad)[5 * k + 4] -= w.s_l;
    const double df = z[f0 + k + 1] - z[f0 + k];
    if (pb.squared_force_rate) {
      value += w.s_df * df * df;
      if (grad) {
        (*grad)[f0 + k + 1] += 2.0 * w.s_df * df;
        (*grad)[f0 + k] -= 2.0 * w.s_df * df;
      }
    } else {
      value += w.s_df * df;
      if (grad) {
        (*grad)[f0 + k + 1] += w.s_df;
        (*grad)[f0 + k] -= w.s_df;
      }
    }
  }

  // --- equality terms (dynamics defects) ------------------------------------
  int ei = 0;
  for (int k = 0; k < n_; ++k) {
    const double x = z[5 * k], y = z[5 * k + 1], th = z[5 * k + 2], ph = z[5 * k + 3],
                 l = z[5 * k + 4];
    const double vx = z[u0 + 3 * k], vy = z[u0 + 3 * k + 1], om = z[u0 + 3 * k + 2];
    const double ct = std::cos(th), st = std::sin(th);
    const double cp = std::cos(ph), sp = std::sin(ph);
    const double vwx = ct * vx - st * vy;
    const double vwy = st * vx + ct * vy;
    const double cr = vx * sp + vy * cp;
    const double dd = vx * cp - vy * sp;
    const double sgn = cr > 0.0 ? 1.0 : (cr < 0.0 ? -1.0 : 0.0);
    const bool taut = modes_[k] == 1;
    const bool paper = pb.variant == DynamicsVariant::PaperFaithful;
    const double ax = taut ? pb.alpha.x : 1.0;
    const double ay = taut ? pb.alpha.y : 1.0;
    const double at = taut ? pb.alpha.theta : 1.0;
    const double apl = paper ? (taut ? pb.alpha.phi : 1.0) / l0
                             : (taut ? pb.alpha.phi / l0 : 1.0 / l);

    // residuals per component and their defect weights
    double hval[5];
    hval[0] = z[5 * (k + 1)] - (x + dt * ax * vwx);
    hval[1] = z[5 * (k + 1) + 1] - (y + dt * ay * vwy);
    hval[2] = z[5 * (k + 1) + 2] - (th + dt * at * om);
    double phidot;
    if (paper) {
      phidot = taut ? (-at * om - apl * std::abs(cr)) : (-apl * std::abs(cr));
    } else {
      phidot = taut ? (at * om - apl * cr) : (om - apl * cr);
    }
    hval[3] = z[5 * (k + 1) + 3] - (ph + dt * phidot);
    const double lraw = l + dt * dd;
    const bool clamped = taut || lraw >= l0;
    hval[4] = z[5 * (k + 1) + 4] - (taut ? l0 : std::min(lraw, l0));

    double wgt[5];
    for (int c = 0; c < 5; ++c) {
      const double h = hval[c];
      const double lam = lambda_eq[ei + c];
      if (lagrangian_only) {
        value += lam * h;
        wgt[c] = lam;
      } else {
        value += lam * h + 0.5 * rho * h * h;
        wgt[c] = lam + rho * h;
      }
    }
    if (grad) {
      auto& g = *grad;
      for (int c = 0; c < 5; ++c) g[5 * (k + 1) + c] += wgt[c];
      // x' row
      g[5 * k] -= wgt[0];
      g[5 * k + 2] -= wgt[0] * dt * ax * (-vwy);
      g[u0 + 3 * k] -= wgt[0] * dt * ax * ct;
      g[u0 + 3 * k + 1] -= wgt[0] * dt * ax * (-st);
      g[it] -= wgt[0] * ax * vwx / n_;
      // y' row
      g[5 * k + 1] -= wgt[1];
      g[5 * k + 2] -= wgt[1] * dt * ay * vwx;
      g[u0 + 3 * k] -= wgt[1] * dt * ay * st;
      g[u0 + 3 * k + 1] -= wgt[1] * dt * ay * ct;
      g[it] -= wgt[1] * ay * vwy / n_;
      // theta' row
      g[5 * k + 2] -= wgt[2];
      g[u0 + 3 * k + 2] -= wgt[2] * dt * at;
      g[it] -= wgt[2] * at * om / n_;
      // phi' row
      if (paper) {
        g[5 * k + 3] -= wgt[3] * (1.0 - dt * apl * sgn * dd);
        g[u0 + 3 * k] -= wgt[3] * (-dt * apl * sgn * sp);
        g[u0 + 3 * k + 1] -= wgt[3] * (-dt * apl * sgn * cp);
        if (taut) g[u0 + 3 * k + 2] -= wgt[3] * (-dt * at);
      } else {
        g[5 * k + 3] -= wgt[3] * (1.0 - dt * apl * dd);
        g[u0 + 3 * k] -= wgt[3] * (-dt * apl * sp);
        g[u0 + 3 * k + 1] -= wgt[3] * (-dt * apl * cp);
        g[u0 + 3 * k + 2] -= wgt[3] * (dt * (taut ? at : 1.0));
        if (!taut) g[5 * k + 4] -= wgt[3] * (dt * cr / (l * l));
      }
      g[it] -= wgt[3] * phidot / n_;
      // l' row
      if (!clamped) {
        g[5 * k + 4] -= wgt[4];
        g[5 * k + 3] -= wgt[4] * dt * (-cr);
        g[u0 + 3 * k] -= wgt[4] * dt * cp;
        g[u0 + 3 * k + 1] -= wgt[4] * dt * (-sp);
        g[it] -= wgt[4] * dd / n_;
      }
    }
    ei += 5;
  }

  // --- inequality terms -------------------------------------------------------
  int gi = 0;
  auto ineq_weight = [&](double gval) {
    const double mu = mu_ineq[gi];
    double wq;
    if (lagrangian_only) {
      value += mu * gval;
      wq = mu;
    } else {
      const double m = mu + rho * gval;
      if (m > 0.0) {
        value += (m * m - mu * mu) / (2.0 * rho);
        wq = m;
      } else {
        value += -mu * mu / (2.0 * rho);
        wq = 0.0;
      }
    }
    return wq;
  };

  for (int k = 0; k <= n_; ++k) {
    const int mode = modes_[std::min(k, n_ - 1)];
    if (mode != 1) continue;
    const int ku = std::min(k, n_ - 1);
    const double ph = z[5 * k + 3];
    const double cp = std::cos(ph), sp = std::sin(ph);
    const double vx = z[u0 + 3 * ku], vy = z[u0 + 3 * ku + 1];
    const double dd = vx * cp - vy * sp;
    const double cr = vx * sp + vy * cp;
    const double pred = pb.tension.beta1 * dd + pb.tension.beta2;
    const double F = z[f0 + k];
    const double fs = 1.0 / force_scale_;
    const double b1s = pb.tension.beta1 * fs;

    {  // ((pred - sigma) - F) / force_scale <= 0
      const double wq = ineq_weight((pred - pb.tension.sigma - F) * fs);
      if (grad && wq != 0.0) {
        (*grad)[5 * k + 3] += wq * (-b1s * cr);
        (*grad)[u0 + 3 * ku] += wq * b1s * cp;
        (*grad)[u0 + 3 * ku + 1] += wq * (-b1s * sp);
        (*grad)[f0 + k] += wq * (-fs);
      }
      ++gi;
    }
    {  // (F - (pred + sigma)) / force_scale <= 0
      const double wq = ineq_weight((F - pred - pb.tension.sigma) * fs);
      if (grad && wq != 0.0) {
        (*grad)[5 * k + 3] += wq * b1s * cr;
        (*grad)[u0 + 3 * ku] += wq * (-b1s * cp);
        (*grad)[u0 + 3 * ku + 1] += wq * b1s * sp;
        (*grad)[f0 + k] += wq * fs;
      }
      ++gi;
    }
    if (k < n_) {
      {  // (f_bar - F) / force_scale <= 0
        const double wq = ineq_weight((pb.leash.f_bar - F) * fs);
        if (grad && wq != 0.0) (*grad)[f0 + k] += wq * (-fs);
        ++gi;
      }
      {  // -dd <= 0
        const double wq = ineq_weight(-dd);
        if (grad && wq != 0.0) {
          (*grad)[5 * k + 3] += wq * cr;
          (*grad)[u0 + 3 * ku] += wq * (-cp);
          (*grad)[u0 + 3 * ku + 1] += wq * sp;
        }
        ++gi;
      }
    }
  }

  for (int k = 0; k <= n_; ++k) {
    const double x = z[5 * k], y = z[5 * k + 1], th = z[5 * k + 2], ph = z[5 * k + 3],
                 l = z[5 * k + 4];
    const double psi = th - ph;
    const double cpsi = std::cos(psi), spsi = std::sin(psi);
    const double hx = x - l * cpsi;
    const double hy = y - l * spsi;
    for (const Circle& c : pb.obstacles.circles) {
      const double mr = pb.obstacles.safety_margin + pb.leash.robot_radius + c.radius;
      const double mh = pb.obstacles.safety_margin + pb.leash.human_radius + c.radius;
      {
        const double dx = x - c.center.x, dy = y - c.center.y;
        const double dist = std::max(std::hypot(dx, dy), 1e-12);
        const double wq = ineq_weight(mr - dist);
        if (grad && wq != 0.0) {
          (*grad)[5 * k] += wq * (-dx / dist);
          (*grad)[5 * k + 1] += wq * (-dy / dist);
        }
        ++gi;
      }
      {
        const double dx = hx - c.center.x, dy = hy - c.center.y;
        const double dist = std::max(std::hypot(dx, dy), 1e-12);
        const double wq = ineq_weight(mh - dist);
        if (grad && wq != 0.0) {
          const double gx = -dx / dist, gy = -dy / dist;
          (*grad)[5 * k] += wq * gx;
          (*grad)[5 * k + 1] += wq * gy;
          (*grad)[5 * k + 2] += wq * (gx * l * spsi - gy * l * cpsi);
          (*grad)[5 * k + 3] += wq * (-gx * l * spsi + gy * l * cpsi);
          (*grad)[5 * k + 4] += wq * (-gx * cpsi - gy * spsi);
        }
        ++gi;
      }
    }
  }

  return value;
}

double FixedModeNlp::merit(const Eigen::VectorXd& z) const { return evaluate(z, nullptr, false); }

Eigen::VectorXd FixedModeNlp::merit_gradient(const Eigen::VectorXd& z) const {
  Eigen::VectorXd grad(n_vars_);
  evaluate(z, &grad, false);
  return grad;
}

double FixedModeNlp::stationarity(const Eigen::VectorXd& z) const {
  Eigen::VectorXd grad(n_vars_);
  evaluate(z, &grad, true);
  double pg = 0.0;
  for (int i = 0; i < n_vars_; ++i) {
    const double d = var_scale_[i];
    const double zs = z[i] / d;
    const double stepped = std::clamp(zs - d * grad[i], lower_[i] / d, upper_[i] / d);
    pg = std::max(pg, std::abs(zs - stepped));
  }
  return pg;
}

double merit_value(const FixedModeNlp& nlp, const Eigen::VectorXd& z) { return nlp.merit(z); }

Eigen::VectorXd merit_gradient(const FixedModeNlp& nlp, const Eigen::VectorXd& z) {
  return nlp.merit_gradient(z);
}

// ---------------------------------------------------------------------------
// Solver

namespace {

struct InnerResult {
  Eigen::VectorXd z;
  double merit = 0.0;
  double pg = 0.0;
  int iterations = 0;
  bool line_search_failed = false;
};

// Projected gradient descent in the preconditioned space (zs = z / scale)
// with a Barzilai-Borwein initial step and a monotone Armijo backtracking
// line search.
InnerResult minimize_merit(const FixedModeNlp& nlp, Eigen::VectorXd z0, double tol, int max_iter) {
  const Eigen::VectorXd& d = nlp.variable_scale();
  const Eigen::VectorXd lo = nlp.lower().cwiseQuotient(d);
  const Eigen::VectorXd hi = nlp.upper().cwiseQuotient(d);
  auto project = [&](Eigen::VectorXd v) {
    for (int i = 0; i < v.size(); ++i) v[i] = std::clamp(v[i], lo[i], hi[i]);
    return v;
  };
  auto pg_norm = [&](const Eigen::VectorXd& zs, const Eigen::VectorXd& gs) {
    double pg = 0.0;
    for (int i = 0; i < zs.size(); ++i) {
      const double stepped = std::clamp(zs[i] - gs[i], lo[i], hi[i]);
      pg = std::max(pg, std::abs(zs[i] - stepped));
    }
    return pg;
  };

  Eigen::VectorXd zs = project(z0.cwiseQuotient(d));
  double f = nlp.merit(zs.cwiseProduct(d));
  Eigen::VectorXd g = nlp.merit_gradient(zs.cwiseProduct(d)).cwiseProduct(d);
  double step = 1.0 / std::max(1.0, g.lpNorm<Eigen::Infinity>());

  InnerResult out;
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    const double pg = pg_norm(zs, g);
    if (pg <= tol) break;

    double a = step;
    Eigen::VectorXd zs_new;
    double f_new = f;
    bool accepted = false;
    for (int ls = 0; ls < 45; ++ls) {
      zs_new = project(zs - a * g);
      const double decrease = g.dot(zs_new - zs);
      f_new = nlp.merit(zs_new.cwiseProduct(d));
      if (f_new <= f + 1e-4 * decrease && (zs_new - zs).lpNorm<Eigen::Infinity>() > 0.0) {
        accepted = true;
        break;
      }
      a *= 0.5;
    }
    if (!accepted) {
      out.line_search_failed = true;
      break;
    }

    Eigen::VectorXd g_new = nlp.merit_gradient(zs_new.cwiseProduct(d)).cwiseProduct(d);
    const Eigen::VectorXd s = zs_new - zs;
    const Eigen::VectorXd yv = g_new - g;
    const double sy = s.dot(yv);
    step = sy > 1e-14 ? std::clamp(s.dot(s) / sy, 1e-9, 1e5) : std::min(a * 10.0, 1e5);
    zs = std::move(zs_new);
    f = f_new;
    g = std::move(g_new);
  }
  out.z = zs.cwiseProduct(d);
  out.merit = f;
  out.pg = pg_norm(zs, g);
  out.iterations = iter;
  return out;
}

struct FixedSolveResult {
  CollocationSolution sol;
  ResidualReport residuals;
  bool mode_consistent = false;
  bool feasible = false;
  bool certified = false;
};

std::vector<int> modes_of_solution(const CollocationSolution& sol, const LeashParams& leash) {
  std::vector<int> modes(sol.inputs.size());
  for (std::size_t k = 0; k < sol.inputs.size(); ++k) {
    modes[k] = mode_from_guards(sol.states[k], sol.inputs[k], sol.forces[k], leash);
  }
  return modes;
}

FixedSolveResult solve_fixed(const CollocationProblem& pruned, const CollocationProblem& full,
                             const std::vector<int>& modes, const Eigen::VectorXd& z0,
                             SolveDiagnostics* diag, int max_outer, int max_inner) {
  constexpr double kFeasTarget = 1e-8;
  constexpr double kStatTarget = 5e-5;

  FixedModeNlp nlp(pruned, modes);
  Eigen::VectorXd z = nlp.project(z0);

  double inner_tol = 1e-2;
  double prev_viol = std::numeric_limits<double>::infinity();
  bool converged = false;
  Eigen::VectorXd eq, ineq;

  Eigen::VectorXd best_z = z;
  double best_score = std::numeric_limits<double>::infinity();
  double best_pg = std::numeric_limits<double>::infinity();

  for (int outer = 0; outer < max_outer; ++outer) {
    if (diag) {
      diag->outer_merit_start.push_back(nlp.merit(z));
      ++diag->outer_iterations;
    }
    InnerResult inner = minimize_merit(nlp, std::move(z), inner_tol, max_inner);
    z = std::move(inner.z);
    if (diag) {
      diag->outer_merit_end.push_back(inner.merit);
      diag->outer_pg.push_back(inner.pg);
      diag->inner_iterations += inner.iterations;
      if (inner.line_search_failed) ++diag->line_search_failures;
    }

    nlp.constraints(z, eq, ineq);
    double viol = eq.size() ? eq.lpNorm<Eigen::Infinity>() : 0.0;
    for (int i = 0; i < ineq.size(); ++i) viol = std::max(viol, ineq[i]);
    if (diag) diag->outer_violation.push_back(viol);

    const double score = std::max(100.0 * viol, inner.pg);
    if (score < best_score) {
      best_score = score;
      best_z = z;
      best_pg = inner.pg;
    }

    if (viol <= kFeasTarget && inner.pg <= kStatTarget) {
      converged = true;
      break;
    }
    // Safeguarded update: multipliers move only when feasibility improved
    // enough; otherwise the penalty grows and the multipliers stay put.
    if (viol <= std::max(kFeasTarget, 0.25 * prev_viol)) {
      nlp.lambda_eq += nlp.rho * eq;
      for (int i = 0; i < ineq.size(); ++i) {
        nlp.mu_ineq[i] = std::max(0.0, nlp.mu_ineq[i] + nlp.rho * ineq[i]);
      }
      inner_tol = std::max(inner_tol * 0.2, 1e-6);
      prev_viol = viol;
    } else {
      nlp.rho = std::min(nlp.rho * 5.0, 1e6);
    }
  }
  z = best_z;
  const double last_pg = best_pg;

  // Polish: states become the exact Euler rollout of the final inputs under
  // the fixed modes, and forces are clamped back into their mode ranges at
  // the polished states. Open-loop re-simulation then reproduces the states
  // to arithmetic precision.
  FixedSolveResult out;
  out.sol = nlp.unpack(z);
  const int n = static_cast<int>(modes.size());
  const double dt = out.sol.t_final / n;
  out.sol.states[0] = full.q_curr;
  for (int k = 0; k < n; ++k) {
    out.sol.states[k + 1] = discrete_step(out.sol.states[k], out.sol.inputs[k], modes[k], dt,
                                          full.alpha, full.leash, full.variant);
  }
  for (int k = 0; k <= n; ++k) {
    const int mode = modes[std::min(k, n - 1)];
    const ControlInput& u = out.sol.inputs[std::min(k, n - 1)];
    if (mode == 1) {
      const auto [lo, hi] = force_bounds(full.tension, out.sol.states[k], u);
      const double flo = std::max(full.leash.f_bar, lo);
      if (flo <= hi) out.sol.forces[k] = std::clamp(out.sol.forces[k], flo, hi);
    } else {
      out.sol.forces[k] =
          std::clamp(out.sol.forces[k], 0.0, std::max(0.0, full.leash.f_bar - kSlackForceGap));
    }
  }
  out.sol.cost = evaluate_cost(out.sol, full.weights, full.q_target, full.leash,
                               full.squared_force_rate);
  out.residuals = constraint_residuals(out.sol, full);
  out.mode_consistent = modes_of_solution(out.sol, full.leash) == modes;
  out.feasible = out.residuals.feasible() && out.mode_consistent;
  out.sol.kkt_residual = std::max(last_pg, out.residuals.max_violation());
  out.certified = converged && out.sol.kkt_residual <= kKktTol;
  out.sol.status = out.certified ? SolveStatus::Converged : SolveStatus::MaxIterations;
  return out;
}

CollocationSolution initial_guess(const CollocationProblem& pb) {
  const int n = pb.bounds.horizon;
  CollocationSolution sol;
  sol.states.resize(n + 1);
  sol.inputs.resize(n);
  sol.forces.resize(n + 1);
  sol.modes.assign(n, 0);
  sol.t_final = 0.5 * (pb.bounds.t_min + pb.bounds.t_max);

  const double dth = wrap_angle(pb.q_target.theta - pb.q_curr.theta);
  const double dph = wrap_angle(pb.q_target.phi - pb.q_curr.phi);
  for (int k = 0; k <= n; ++k) {
    const double a = static_cast<double>(k) / n;
    Configuration q;
    q.x = pb.q_curr.x + a * (pb.q_target.x - pb.q_curr.x);
    q.y = pb.q_curr.y + a * (pb.q_target.y - pb.q_curr.y);
    q.theta = pb.q_curr.theta + a * dth;
    q.phi = pb.q_curr.phi + a * dph;
    q.l = pb.q_curr.l + a * (pb.q_target.l - pb.q_curr.l);
    sol.states[k] = q;
  }
  const Vec2 v_world{(pb.q_target.x - pb.q_curr.x) / sol.t_final,
                     (pb.q_target.y - pb.q_curr.y) / sol.t_final};
  for (int k = 0; k < n; ++k) {
    sol.inputs[k].v_body = rotate(-sol.states[k].theta, v_world);
    sol.inputs[k].omega = dth / sol.t_final;
  }
  for (int k = 0; k <= n; ++k) {
    sol.forces[k] = predict(pb.tension, sol.states[k], sol.inputs[std::min(k, n - 1)]);
  }
  return sol;
}

std::vector<int> roll_guard_modes(const CollocationProblem& pb, const CollocationSolution& init) {
  const int n = static_cast<int>(init.inputs.size());
  const double dt = init.t_final / n;
  std::vector<int> modes(n);
  Configuration q = pb.q_curr;
  for (int k = 0; k < n; ++k) {
    const double f = predict(pb.tension, q, init.inputs[k]);
    modes[k] = mode_from_guards(q, init.inputs[k], f, pb.leash);
    q = discrete_step(q, init.inputs[k], modes[k], dt, pb.alpha, pb.leash, pb.variant);
  }
  return modes;
}

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squared_norm();
  if (len2 <= 1e-18) return (p - a).norm();
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

std::vector<std::vector<int>> enumerate_mode_sequences(int n) {
  std::vector<std::vector<int>> out;
  for (int m0 : {1, 0}) {
    out.emplace_back(n, m0);  // no switch
    for (int i = 1; i < n; ++i) {
      std::vector<int> s(n, m0);
      for (int k = i; k < n; ++k) s[k] = 1 - m0;
      out.push_back(std::move(s));  // one switch at i
    }
    for (int i = 1; i + 1 < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        std::vector<int> s(n, m0);
        for (int k = i; k < j; ++k) s[k] = 1 - m0;
        out.push_back(std::move(s));  // switch at i, back at j
      }
    }
  }
  return out;
}

}  // namespace

CollocationSolution solve(const CollocationProblem& problem, SolveDiagnostics* diag) {
  if (problem.bounds.horizon < 2) throw InvalidInput("solve: horizon must be at least 2");
  if (!(problem.bounds.t_min > 0.0 && problem.bounds.t_min <= problem.bounds.t_max)) {
    throw InvalidInput("solve: invalid time bounds");
  }
  if (!collision_free(problem.q_curr, problem.obstacles, problem.leash)) {
    throw InvalidInput("solve: current configuration is in collision");
  }

  // The NLP only sees obstacles within reach of the current segment; the
  // final feasibility check runs against the full set.
  CollocationProblem pruned = problem;
  {
    const double u_cap = std::hypot(
        std::max(std::abs(problem.bounds.u_lower[0]), std::abs(problem.bounds.u_upper[0])),
        std::max(std::abs(problem.bounds.u_lower[1]), std::abs(problem.bounds.u_upper[1])));
    const Vec2 seg{problem.q_target.x - problem.q_curr.x, problem.q_target.y - problem.q_curr.y};
    const double reach = std::min(0.75 * u_cap * problem.bounds.t_max,
                                  seg.norm() + 1.2 * problem.leash.l0 + 0.8) +
                         problem.obstacles.safety_margin;
    const Vec2 a{problem.q_curr.x, problem.q_curr.y};
    const Vec2 b{problem.q_target.x, problem.q_target.y};
    pruned.obstacles.circles.clear();
    for (const Circle& c : problem.obstacles.circles) {
      if (point_segment_distance(c.center, a, b) <= reach + c.radius) {
        pruned.obstacles.circles.push_back(c);
      }
    }
  }

  const CollocationSolution init = initial_guess(problem);
  std::vector<int> modes = roll_guard_modes(problem, init);

  std::set<std::vector<int>> seen;
  seen.insert(modes);
  for (int iter = 0; iter < 5; ++iter) {
    FixedModeNlp packer(pruned, modes);
    if (diag) ++diag->nlp_solves;
    const FixedSolveResult attempt =
        solve_fixed(pruned, problem, modes, packer.pack(init), diag, 30, 400);
    if (attempt.feasible) {
      return attempt.sol;
    }
    std::vector<int> next = modes_of_solution(attempt.sol, problem.leash);
    if (next == modes || seen.count(next)) break;
    seen.insert(next);
    modes = std::move(next);
  }

  // Fallback: exhaustive enumeration of mode sequences with at most two
  // switches, keeping the feasible minimum-cost candidate.
  if (diag) diag->used_enumeration = true;
  bool have_best = false;
  FixedSolveResult best;
  for (const std::vector<int>& seq : enumerate_mode_sequences(problem.bounds.horizon)) {
    FixedModeNlp packer(pruned, seq);
    if (diag) ++diag->nlp_solves;
    FixedSolveResult attempt =
        solve_fixed(pruned, problem, seq, packer.pack(init), diag, 12, 150);
    if (!attempt.feasible) continue;
    if (!have_best || attempt.sol.cost < best.sol.cost) {
      best = std::move(attempt);
      have_best = true;
    }
  }
  if (have_best) return best.sol;
  throw Infeasible("solve: no mode sequence satisfied the constraints within tolerance");
}

}  // namespace leashnav
