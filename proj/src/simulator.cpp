#include "leashnav/simulator.hpp"

#include <algorithm>
#include <cmath>

namespace leashnav {

const char* to_string(SimStatus status) {
  switch (status) {
    case SimStatus::Success: return "success";
    case SimStatus::Timeout: return "timeout";
    case SimStatus::PlannerInfeasible: return "planner_infeasible";
    case SimStatus::GlobalNoPath: return "global_no_path";
  }
  return "unknown";
}

KalmanTracker make_tracker(Vec2 first_measurement, double meas_sigma, double accel_sigma) {
  KalmanTracker t;
  t.state << first_measurement.x, first_measurement.y, 0.0, 0.0;
  const double p0 = meas_sigma * meas_sigma + 1e-4;
  t.covariance = Eigen::Matrix4d::Zero();
  t.covariance(0, 0) = t.covariance(1, 1) = p0;
  t.covariance(2, 2) = t.covariance(3, 3) = 0.25;
  t.accel_sigma = accel_sigma;
  t.meas_sigma = meas_sigma;
  return t;
}

KalmanTracker kf_update(const KalmanTracker& tracker, Vec2 measurement, double dt) {
  if (!(dt > 0.0)) throw InvalidInput("kf_update: dt must be positive");

  Eigen::Matrix4d F = Eigen::Matrix4d::Identity();
  F(0, 2) = F(1, 3) = dt;

  const double s2 = tracker.accel_sigma * tracker.accel_sigma;
  const double d2 = dt * dt;
  Eigen::Matrix4d Q = Eigen::Matrix4d::Zero();
  Q(0, 0) = Q(1, 1) = 0.25 * d2 * d2 * s2;
  Q(0, 2) = Q(2, 0) = Q(1, 3) = Q(3, 1) = 0.5 * dt * d2 * s2;
  Q(2, 2) = Q(3, 3) = d2 * s2;

  KalmanTracker out = tracker;
  out.state = F * tracker.state;
  Eigen::Matrix4d P = F * tracker.covariance * F.transpose() + Q;

  Eigen::Matrix<double, 2, 4> H = Eigen::Matrix<double, 2, 4>::Zero();
  H(0, 0) = H(1, 1) = 1.0;
  const double r = std::max(tracker.meas_sigma * tracker.meas_sigma, 1e-12);
  const Eigen::Matrix2d R = r * Eigen::Matrix2d::Identity();

  const Eigen::Vector2d innovation(measurement.x - out.state[0], measurement.y - out.state[1]);
  const Eigen::Matrix2d S = H * P * H.transpose() + R;
  const Eigen::Matrix<double, 4, 2> K = P * H.transpose() * S.inverse();
  out.state += K * innovation;
  P = (Eigen::Matrix4d::Identity() - K * H) * P;
  P = 0.5 * (P + P.transpose()).eval();

  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(P);
  if (es.eigenvalues().minCoeff() < -1e-9) {
    throw NonPSD("kf_update: covariance left the PSD cone");
  }
  out.covariance = P;
  return out;
}

PlantOutput plant_step(const HybridState& state, const ControlInput& u,
                       const ScenarioConfig& config) {
  PlantOutput out;
  out.state = step(state, u, config.sim_dt, config.alpha, config.leash, config.tension,
                   DynamicsVariant::GeometricConsistent);
  out.tension = out.state.mode == Mode::Taut
                    ? std::max(0.0, predict(config.tension, out.state.q, u))
                    : 0.0;
  return out;
}

std::pair<double, Vec2> sense(const PlantOutput& plant, const ScenarioConfig& config,
                              std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double f = plant.tension + config.noise.sigma_f * gauss(rng);
  const Vec2 human = human_position(plant.state.q);
  const Vec2 meas{human.x + config.noise.sigma_h * gauss(rng),
                  human.y + config.noise.sigma_h * gauss(rng)};
  return {f, meas};
}

namespace {

// Minimum signed distance (margin-free) over robot and human discs.
double true_clearance(const Configuration& q, const ObstacleSet& obstacles,
                      const LeashParams& leash) {
  double best = std::numeric_limits<double>::infinity();
  const Vec2 robot{q.x, q.y};
  const Vec2 human = human_position(q);
  for (const Circle& c : obstacles.circles) {
    best = std::min(best, (robot - c.center).norm() - (leash.robot_radius + c.radius));
    best = std::min(best, (human - c.center).norm() - (leash.human_radius + c.radius));
  }
  return best;
}

Configuration planner_current_config(const Configuration& true_q, Vec2 human_est,
                                     const LeashParams& leash) {
  Configuration q = true_q;
  const Vec2 rel = Vec2{true_q.x, true_q.y} - human_est;
  const double dist = rel.norm();
  if (dist > 1e-6) {
    const double psi = std::atan2(rel.y, rel.x);
    q.phi = wrap_angle(true_q.theta - psi);
    q.l = std::clamp(dist, 0.05, leash.l0);
  }
  return q;
}

}  // namespace

std::pair<SimLog, Metrics> run(const ScenarioConfig& scenario) {
  if (!(scenario.sim_dt > 0.0 && scenario.sim_dt <= scenario.replan_period)) {
    throw InvalidInput("run: require 0 < sim_dt <= replan_period");
  }
  if (!(scenario.max_time > 0.0)) throw InvalidInput("run: max_time must be positive");
  if (!collision_free(scenario.start, scenario.obstacles, scenario.leash)) {
    throw InvalidInput("run: start configuration is in collision");
  }

  SimLog log;
  Metrics metrics;
  metrics.min_clearance = std::numeric_limits<double>::infinity();

  // Global plan once; the exact goal configuration is appended so the goal
  // tolerance (tighter than a lattice step) stays reachable.
  std::vector<Configuration> waypoints;
  try {
    PlanOptions options;
    options.alpha = scenario.alpha;
    options.prune_leash_crossings = true;
    // Waypoints keep an extra margin beyond the local planner's so the
    // executed path does not hug obstacle boundaries.
    ObstacleSet inflated = scenario.obstacles;
    inflated.safety_margin += 0.05;
    waypoints =
        plan(scenario.start, scenario.goal, inflated, scenario.lattice, scenario.leash, options)
            .waypoints;
  } catch (const NoPath&) {
    metrics.status = SimStatus::GlobalNoPath;
    return {log, metrics};
  }
  waypoints.push_back(Configuration{scenario.goal.x, scenario.goal.y, scenario.goal.theta,
                                    scenario.goal.phi, scenario.leash.l0});

  std::mt19937_64 rng(scenario.rng_seed);

  HybridState state;
  state.q = scenario.start;
  state.mode = std::abs(scenario.start.l - scenario.leash.l0) <= 1e-9 ? Mode::Taut : Mode::Slack;

  PlantOutput plant{state, state.mode == Mode::Taut
                               ? std::max(0.0, predict(scenario.tension, state.q, ControlInput{}))
                               : 0.0};
  auto [f_meas0, human_meas0] = sense(plant, scenario, rng);
  KalmanTracker tracker =
      make_tracker(human_meas0, std::max(scenario.noise.sigma_h, 1e-3), scenario.kf_accel_sigma);

  const int steps_per_replan =
      std::max(1, static_cast<int>(std::llround(scenario.replan_period / scenario.sim_dt)));
  const int max_steps = static_cast<int>(std::ceil(scenario.max_time / scenario.sim_dt));

  std::size_t waypoint_idx = 0;
  CollocationSolution solution;
  bool have_solution = false;
  double replan_t0 = 0.0;

  auto log_row = [&](double t, const ControlInput& u) {
    SimRow row;
    row.t = t;
    row.q = state.q;
    row.mode = state.mode == Mode::Taut ? 1 : 0;
    row.human = human_position(state.q);
    row.human_est = Vec2{tracker.state[0], tracker.state[1]};
    row.u = u;
    row.f_pred = predict(scenario.tension, state.q, u);
    row.f_meas = plant.tension;
    row.waypoint_idx = static_cast<int>(waypoint_idx);
    log.rows.push_back(row);
  };
  log_row(0.0, ControlInput{});

  auto update_metrics = [&](double /*t*/) {
    const double clearance = true_clearance(state.q, scenario.obstacles, scenario.leash);
    metrics.min_clearance = std::min(metrics.min_clearance, clearance);
    if (clearance < 0.0) ++metrics.collision_count;
  };
  update_metrics(0.0);

  auto at_goal = [&](const Configuration& q) {
    const double dx = q.x - scenario.goal.x;
    const double dy = q.y - scenario.goal.y;
    return std::hypot(dx, dy) <= scenario.tolerances.goal_pos &&
           std::abs(wrap_angle(q.phi - scenario.goal.phi)) <= scenario.tolerances.goal_ang;
  };

  metrics.status = SimStatus::Timeout;
  if (at_goal(state.q)) {
    metrics.status = SimStatus::Success;
    metrics.time_to_goal = 0.0;
  } else {
    for (int i = 0; i < max_steps; ++i) {
      const double t = i * scenario.sim_dt;
      if (i % steps_per_replan == 0) {
        // Advance the active waypoint, then replan toward it.
        while (waypoint_idx + 1 < waypoints.size()) {
          const Configuration& wp = waypoints[waypoint_idx];
          const double d = std::hypot(state.q.x - wp.x, state.q.y - wp.y);
          const double a = std::abs(wrap_angle(state.q.phi - wp.phi));
          if (d <= scenario.tolerances.waypoint_pos && a <= scenario.tolerances.waypoint_ang) {
            ++waypoint_idx;
          } else {
            break;
          }
        }
        CollocationProblem problem;
        problem.q_curr = planner_current_config(
            state.q, Vec2{tracker.state[0], tracker.state[1]}, scenario.leash);
        problem.q_target = waypoints[waypoint_idx];
        problem.obstacles = scenario.obstacles;
        // Tracking drift may eat into the planning margin; shrink it to the
        // clearance that is actually left so the replan can steer back out
        // instead of aborting. True collisions still abort below.
        {
          double clear_now = std::numeric_limits<double>::infinity();
          const Vec2 robot{problem.q_curr.x, problem.q_curr.y};
          const Vec2 human = human_position(problem.q_curr);
          for (const Circle& c : scenario.obstacles.circles) {
            clear_now = std::min(clear_now, (robot - c.center).norm() -
                                                (scenario.leash.robot_radius + c.radius));
            clear_now = std::min(clear_now, (human - c.center).norm() -
                                                (scenario.leash.human_radius + c.radius));
          }
          if (clear_now < scenario.obstacles.safety_margin) {
            problem.obstacles.safety_margin = std::clamp(clear_now - 1e-3, 0.0,
                                                         scenario.obstacles.safety_margin);
          }
        }
        problem.weights = scenario.weights;
        problem.bounds = scenario.planner;
        problem.tension = scenario.tension;
        problem.alpha = scenario.alpha;
        problem.leash = scenario.leash;
        problem.squared_force_rate = scenario.squared_force_rate;
        // Sign-consistent prediction: the verbatim phi-rate would fight the
        // plant's heading response (see CollocationProblem::variant).
        problem.variant = DynamicsVariant::GeometricConsistent;
        try {
          solution = solve(problem);
          have_solution = true;
          replan_t0 = t;
        } catch (const Infeasible&) {
          metrics.status = SimStatus::PlannerInfeasible;
          break;
        } catch (const InvalidInput&) {
          // Current configuration drifted into the inflated margin; a margin
          // violation is not yet a collision, but there is no plan to follow.
          metrics.status = SimStatus::PlannerInfeasible;
          break;
        }
      }

      const double dt_sol = solution.t_final / static_cast<double>(solution.inputs.size());
      const int idx = std::min(static_cast<int>((t - replan_t0) / dt_sol),
                               static_cast<int>(solution.inputs.size()) - 1);
      const ControlInput u = have_solution ? solution.inputs[idx] : ControlInput{};

      plant = plant_step(state, u, scenario);
      state = plant.state;
      auto [f_meas, human_meas] = sense(plant, scenario, rng);
      tracker = kf_update(tracker, human_meas, scenario.sim_dt);

      const double t_next = (i + 1) * scenario.sim_dt;
      log_row(t_next, u);
      log.rows.back().f_meas = f_meas;
      update_metrics(t_next);

      if (at_goal(state.q)) {
        metrics.status = SimStatus::Success;
        metrics.time_to_goal = t_next;
        break;
      }
      metrics.time_to_goal = t_next;
    }
  }

  // Slack intervals and the true human speed inside them.
  double slack_start = 0.0;
  bool in_slack = false;
  for (std::size_t i = 0; i < log.rows.size(); ++i) {
    const bool slack = log.rows[i].mode == 0;
    if (slack && !in_slack) {
      in_slack = true;
      slack_start = log.rows[i].t;
    }
    if (in_slack && i > 0 && slack) {
      const double speed =
          (log.rows[i].human - log.rows[i - 1].human).norm() / scenario.sim_dt;
      metrics.max_human_speed_during_slack =
          std::max(metrics.max_human_speed_during_slack, speed);
    }
    if (!slack && in_slack) {
      in_slack = false;
      metrics.slack_intervals.emplace_back(slack_start, log.rows[i].t);
    }
  }
  if (in_slack) {
    metrics.slack_intervals.emplace_back(slack_start, log.rows.back().t);
  }
  if (!std::isfinite(metrics.min_clearance)) metrics.min_clearance = 0.0;
  return {log, metrics};
}

}  // namespace leashnav
