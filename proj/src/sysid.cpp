#include "leashnav/sysid.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <tuple>

namespace leashnav {
namespace {

struct LogArrays {
  int steps = 0;
  std::vector<double> h, vx, vy, om;          // per step
  std::vector<double> gx, gy, ghx, ghy;       // per sample
  double x0 = 0, y0 = 0, theta0 = 0, phi0 = 0, l = 0;
};

LogArrays unpack(const TrajectoryLog& log) {
  LogArrays a;
  const int n = static_cast<int>(log.timestamps.size());
  a.steps = n - 1;
  a.h.resize(a.steps);
  a.vx.resize(a.steps);
  a.vy.resize(a.steps);
  a.om.resize(a.steps);
  for (int i = 0; i < a.steps; ++i) {
    a.h[i] = log.timestamps[i + 1] - log.timestamps[i];
    a.vx[i] = log.inputs[i].v_body.x;
    a.vy[i] = log.inputs[i].v_body.y;
    a.om[i] = log.inputs[i].omega;
  }
  a.gx.resize(n);
  a.gy.resize(n);
  a.ghx.resize(n);
  a.ghy.resize(n);
  for (int i = 0; i < n; ++i) {
    a.gx[i] = log.robot_gt[i].x;
    a.gy[i] = log.robot_gt[i].y;
    a.ghx[i] = log.human_gt[i].x;
    a.ghy[i] = log.human_gt[i].y;
  }
  a.x0 = log.initial_config.x;
  a.y0 = log.initial_config.y;
  a.theta0 = log.initial_config.theta;
  a.phi0 = log.initial_config.phi;
  a.l = log.initial_config.l;
  return a;
}

}  // namespace

void validate_log(const TrajectoryLog& log) {
  const std::size_t n = log.timestamps.size();
  if (n < 2) throw InvalidInput("trajectory log needs at least 2 samples");
  if (log.robot_gt.size() != n || log.human_gt.size() != n || log.inputs.size() != n) {
    throw InvalidInput("trajectory log channel lengths differ");
  }
  if (!log.force.empty() && log.force.size() != n) {
    throw InvalidInput("trajectory log force channel length differs");
  }
  for (std::size_t i = 1; i < n; ++i) {
    if (!(log.timestamps[i] > log.timestamps[i - 1])) {
      throw InvalidInput("trajectory log timestamps must strictly increase");
    }
  }
}

std::vector<Configuration> predict_trajectory(const TrajectoryLog& log,
                                              const DiscountCoefficients& alpha,
                                              const LeashParams& params) {
  validate_log(log);
  std::vector<Configuration> out;
  out.reserve(log.timestamps.size());
  Configuration q = log.initial_config;
  out.push_back(q);
  for (std::size_t i = 0; i + 1 < log.timestamps.size(); ++i) {
    const double h = log.timestamps[i + 1] - log.timestamps[i];
    const ControlInput& u = log.inputs[i];
    // One RK4 step per sample interval on the taut (PaperFaithful) field.
    auto f = [&](const Configuration& s) {
      return taut_derivative(s, u, alpha, params, DynamicsVariant::PaperFaithful);
    };
    const ConfigurationRate k1 = f(q);
    Configuration s2 = q;
    s2.x += 0.5 * h * k1.dx; s2.y += 0.5 * h * k1.dy; s2.theta += 0.5 * h * k1.dtheta;
    s2.phi += 0.5 * h * k1.dphi;
    const ConfigurationRate k2 = f(s2);
    Configuration s3 = q;
    s3.x += 0.5 * h * k2.dx; s3.y += 0.5 * h * k2.dy; s3.theta += 0.5 * h * k2.dtheta;
    s3.phi += 0.5 * h * k2.dphi;
    const ConfigurationRate k3 = f(s3);
    Configuration s4 = q;
    s4.x += h * k3.dx; s4.y += h * k3.dy; s4.theta += h * k3.dtheta; s4.phi += h * k3.dphi;
    const ConfigurationRate k4 = f(s4);
    q.x += h / 6.0 * (k1.dx + 2 * k2.dx + 2 * k3.dx + k4.dx);
    q.y += h / 6.0 * (k1.dy + 2 * k2.dy + 2 * k3.dy + k4.dy);
    q.theta += h / 6.0 * (k1.dtheta + 2 * k2.dtheta + 2 * k3.dtheta + k4.dtheta);
    q.phi += h / 6.0 * (k1.dphi + 2 * k2.dphi + 2 * k3.dphi + k4.dphi);
    out.push_back(q);
  }
  return out;
}

double alpha_objective(std::span<const TrajectoryLog> logs, const DiscountCoefficients& alpha,
                       const LeashParams& params) {
  double total = 0.0;
  std::size_t samples = 0;
  for (const TrajectoryLog& log : logs) {
    const std::vector<Configuration> pred = predict_trajectory(log, alpha, params);
    for (std::size_t i = 0; i < pred.size(); ++i) {
      total += (Vec2{pred[i].x, pred[i].y} - log.robot_gt[i]).squared_norm();
      total += (human_position(pred[i]) - log.human_gt[i]).squared_norm();
    }
    samples += pred.size();
  }
  return total / (2.0 * static_cast<double>(samples));
}

IdentificationResult identify_alpha(std::span<const TrajectoryLog> logs, double grid_step,
                                    const LeashParams& params, bool refine) {
  if (logs.empty()) throw EmptyData("identify_alpha: no logs");
  if (!(grid_step > 0.0 && grid_step <= 0.5)) {
    throw InvalidInput("identify_alpha: grid_step must lie in (0, 0.5]");
  }
  for (const auto& log : logs) validate_log(log);

  const int m = static_cast<int>(std::floor(1.0 / grid_step + 1e-9)) + 1;
  std::vector<double> grid(m);
  for (int i = 0; i < m; ++i) grid[i] = std::min(1.0, i * grid_step);

  // The taut-mode prediction decomposes over the grid axes: theta depends on
  // alpha_theta alone, the robot displacement is linear in alpha_x/alpha_y
  // given theta, and phi depends on (alpha_theta, alpha_phi) alone. The
  // objective therefore reduces to quadratics in alpha_x and alpha_y whose
  // coefficients are accumulated once per (alpha_theta, alpha_phi) pair,
  // instead of rolling out all m^4 candidates.
  std::vector<double> sa_x(m, 0.0), sa_y(m, 0.0), sbr_x(m, 0.0), sbr_y(m, 0.0);
  std::vector<double> sbh_x(m * m, 0.0), sbh_y(m * m, 0.0), sch(m * m, 0.0);
  double const_robot = 0.0;
  std::size_t total_samples = 0;

  std::vector<double> theta_path, v_x, v_y, phi_path;
  for (const TrajectoryLog& log : logs) {
    const LogArrays a = unpack(log);
    const int n = a.steps + 1;
    total_samples += static_cast<std::size_t>(n);
    for (int i = 0; i < n; ++i) {
      const double wx = a.x0 - a.gx[i];
      const double wy = a.y0 - a.gy[i];
      const_robot += wx * wx + wy * wy;
    }
    theta_path.assign(n, 0.0);
    v_x.assign(n, 0.0);
    v_y.assign(n, 0.0);
    phi_path.assign(n, 0.0);

    for (int mt = 0; mt < m; ++mt) {
      const double at = grid[mt];
      theta_path[0] = a.theta0;
      v_x[0] = 0.0;
      v_y[0] = 0.0;
      for (int i = 0; i < a.steps; ++i) {
        const double th0 = theta_path[i];
        const double dth = a.h[i] * at * a.om[i];
        const double thm = th0 + 0.5 * dth;
        const double the = th0 + dth;
        const double c0 = std::cos(th0), s0 = std::sin(th0);
        const double cm = std::cos(thm), sm = std::sin(thm);
        const double ce = std::cos(the), se = std::sin(the);
        const double f0x = c0 * a.vx[i] - s0 * a.vy[i];
        const double fmx = cm * a.vx[i] - sm * a.vy[i];
        const double fex = ce * a.vx[i] - se * a.vy[i];
        const double f0y = s0 * a.vx[i] + c0 * a.vy[i];
        const double fmy = sm * a.vx[i] + cm * a.vy[i];
        const double fey = se * a.vx[i] + ce * a.vy[i];
        v_x[i + 1] = v_x[i] + a.h[i] / 6.0 * (f0x + 4.0 * fmx + fex);
        v_y[i + 1] = v_y[i] + a.h[i] / 6.0 * (f0y + 4.0 * fmy + fey);
        theta_path[i + 1] = the;
      }
      double ax_acc = 0.0, ay_acc = 0.0, brx = 0.0, bry = 0.0;
      for (int i = 0; i < n; ++i) {
        ax_acc += v_x[i] * v_x[i];
        ay_acc += v_y[i] * v_y[i];
        brx += v_x[i] * (a.x0 - a.gx[i]);
        bry += v_y[i] * (a.y0 - a.gy[i]);
      }
      sa_x[mt] += ax_acc;
      sa_y[mt] += ay_acc;
      sbr_x[mt] += brx;
      sbr_y[mt] += bry;

      for (int mp = 0; mp < m; ++mp) {
        const double ap = grid[mp];
        phi_path[0] = a.phi0;
        for (int i = 0; i < a.steps; ++i) {
          const double drift = -at * a.om[i];
          auto f = [&](double phi) {
            return drift - ap * std::abs(a.vx[i] * std::sin(phi) + a.vy[i] * std::cos(phi)) /
                               params.l0;
          };
          const double p = phi_path[i];
          const double k1 = f(p);
          const double k2 = f(p + 0.5 * a.h[i] * k1);
          const double k3 = f(p + 0.5 * a.h[i] * k2);
          const double k4 = f(p + a.h[i] * k3);
          phi_path[i + 1] = p + a.h[i] / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        }
        double bhx = 0.0, bhy = 0.0, ch = 0.0;
        for (int i = 0; i < n; ++i) {
          const double psi = theta_path[i] - phi_path[i];
          const double whx = a.x0 - a.l * std::cos(psi) - a.ghx[i];
          const double why = a.y0 - a.l * std::sin(psi) - a.ghy[i];
          bhx += v_x[i] * whx;
          bhy += v_y[i] * why;
          ch += whx * whx + why * why;
        }
        sbh_x[mt * m + mp] += bhx;
        sbh_y[mt * m + mp] += bhy;
        sch[mt * m + mp] += ch;
      }
    }
  }

  double best = std::numeric_limits<double>::infinity();
  std::array<int, 4> best_idx{0, 0, 0, 0};
  for (int mx = 0; mx < m; ++mx) {
    const double ax = grid[mx];
    for (int my = 0; my < m; ++my) {
      const double ay = grid[my];
      for (int mt = 0; mt < m; ++mt) {
        const double qx = ax * ax * 2.0 * sa_x[mt] + 2.0 * ax * sbr_x[mt];
        const double qy = ay * ay * 2.0 * sa_y[mt] + 2.0 * ay * sbr_y[mt];
        for (int mp = 0; mp < m; ++mp) {
          const int k = mt * m + mp;
          const double obj =
              qx + qy + 2.0 * (ax * sbh_x[k] + ay * sbh_y[k]) + sch[k] + const_robot;
          if (obj < best) {
            best = obj;
            best_idx = {mx, my, mt, mp};
          }
        }
      }
    }
  }

  DiscountCoefficients alpha{grid[best_idx[0]], grid[best_idx[1]], grid[best_idx[2]],
                             grid[best_idx[3]]};

  if (refine) {
    // One coordinate-descent pass at a fifth of the grid step; keeps the grid
    // optimum unless a candidate strictly improves the direct objective.
    double cur = alpha_objective(logs, alpha, params);
    const double fine = grid_step / 5.0;
    double* coords[4] = {&alpha.x, &alpha.y, &alpha.theta, &alpha.phi};
    for (double* c : coords) {
      const double center = *c;
      double best_c = center;
      for (int j = -4; j <= 4; ++j) {
        if (j == 0) continue;
        const double cand = std::clamp(center + j * fine, 0.0, 1.0);
        *c = cand;
        const double obj = alpha_objective(logs, alpha, params);
        if (obj < cur) {
          cur = obj;
          best_c = cand;
        }
      }
      *c = best_c;
    }
  }

  IdentificationResult result;
  result.alpha = alpha;
  double robot_sq = 0.0, human_sq = 0.0;
  std::size_t count = 0;
  for (const TrajectoryLog& log : logs) {
    const auto pred = predict_trajectory(log, alpha, params);
    for (std::size_t i = 0; i < pred.size(); ++i) {
      robot_sq += (Vec2{pred[i].x, pred[i].y} - log.robot_gt[i]).squared_norm();
      human_sq += (human_position(pred[i]) - log.human_gt[i]).squared_norm();
    }
    count += pred.size();
  }
  result.robot_rmse = std::sqrt(robot_sq / static_cast<double>(count));
  result.human_rmse = std::sqrt(human_sq / static_cast<double>(count));
  return result;
}

std::vector<TensionSample> tension_samples_from_log(const TrajectoryLog& log) {
  validate_log(log);
  if (log.force.empty()) {
    throw MissingChannel("tension fit: log has no force channel");
  }
  std::vector<TensionSample> samples;
  samples.reserve(log.timestamps.size());
  // Heading is reconstructed by integrating the yaw command from the initial
  // heading; the leash bearing then follows from the ground-truth positions.
  double theta = log.initial_config.theta;
  for (std::size_t i = 0; i < log.timestamps.size(); ++i) {
    const Vec2 rel = log.robot_gt[i] - log.human_gt[i];
    const double psi = std::atan2(rel.y, rel.x);
    const double phi = wrap_angle(theta - psi);
    const double v_proj = dot(log.inputs[i].v_body, leash_direction_body(phi));
    samples.push_back({v_proj, log.force[i]});
    if (i + 1 < log.timestamps.size()) {
      theta += (log.timestamps[i + 1] - log.timestamps[i]) * log.inputs[i].omega;
    }
  }
  return samples;
}

TensionModel fit_tension_from_logs(std::span<const TrajectoryLog> logs) {
  if (logs.empty()) throw EmptyData("tension fit: no logs");
  std::vector<TensionSample> samples;
  for (const TrajectoryLog& log : logs) {
    const auto s = tension_samples_from_log(log);
    samples.insert(samples.end(), s.begin(), s.end());
  }
  return fit(samples);
}

}  // namespace leashnav
