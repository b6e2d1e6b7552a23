#include "leashnav/global_planner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <unordered_map>

namespace leashnav {
namespace {

struct Move {
  int di, dj, dk;
  double cost;
};

std::vector<Move> lattice_moves(const LatticeSpec& spec) {
  std::vector<Move> moves;
  moves.reserve(26);
  for (int di = -1; di <= 1; ++di) {
    for (int dj = -1; dj <= 1; ++dj) {
      for (int dk = -1; dk <= 1; ++dk) {
        if (di == 0 && dj == 0 && dk == 0) continue;
        const double dx = di * spec.dx;
        const double dy = dj * spec.dy;
        const double dp = dk * spec.dphi;
        moves.push_back({di, dj, dk, dx * dx + dy * dy + dp * dp});
      }
    }
  }
  return moves;
}

std::int64_t node_key(int i, int j, int k) {
  return (static_cast<std::int64_t>(i + 1'000'000) << 40) ^
         (static_cast<std::int64_t>(j + 1'000'000) << 8) ^ static_cast<std::int64_t>(k);
}

double segment_point_distance(Vec2 a, Vec2 b, Vec2 p) {
  const Vec2 ab = b - a;
  const double len2 = ab.squared_norm();
  if (len2 <= 1e-18) return (p - a).norm();
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

bool leash_segment_clear(const Configuration& q, const ObstacleSet& obstacles) {
  const Vec2 robot{q.x, q.y};
  const Vec2 human = human_position(q);
  const double buffer = 0.02 + 0.5 * obstacles.safety_margin;
  for (const Circle& c : obstacles.circles) {
    if (segment_point_distance(robot, human, c.center) < c.radius + buffer) return false;
  }
  return true;
}

int phi_bins(const LatticeSpec& spec) {
  const int n = static_cast<int>(std::llround(2.0 * M_PI / spec.dphi));
  if (n < 1 || std::abs(n * spec.dphi - 2.0 * M_PI) > 1e-6) {
    throw InvalidInput("lattice dphi must evenly divide the full circle");
  }
  return n;
}

}  // namespace

std::vector<LatticePose> successors(const LatticePose& node, const LatticeSpec& spec) {
  std::vector<LatticePose> out;
  out.reserve(26);
  for (int di = -1; di <= 1; ++di) {
    for (int dj = -1; dj <= 1; ++dj) {
      for (int dk = -1; dk <= 1; ++dk) {
        if (di == 0 && dj == 0 && dk == 0) continue;
        LatticePose next{node.x + di * spec.dx, node.y + dj * spec.dy,
                         wrap_angle(node.phi + dk * spec.dphi)};
        if (next.x < spec.bounds_min.x - 1e-12 || next.x > spec.bounds_max.x + 1e-12 ||
            next.y < spec.bounds_min.y - 1e-12 || next.y > spec.bounds_max.y + 1e-12) {
          continue;
        }
        out.push_back(next);
      }
    }
  }
  return out;
}

double path_cost(std::span<const Configuration> path) {
  if (path.empty()) throw EmptyData("path_cost: empty path");
  double cost = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) {
    const double dx = path[i].x - path[i - 1].x;
    const double dy = path[i].y - path[i - 1].y;
    const double dp = wrap_angle(path[i].phi - path[i - 1].phi);
    cost += dx * dx + dy * dy + dp * dp;
  }
  return cost;
}

double heuristic(const LatticePose& node, double theta_n, const GoalSpec& goal) {
  const double dx = node.x - goal.x;
  const double dy = node.y - goal.y;
  const double dp = wrap_angle(node.phi - goal.phi);
  return dx * dx + dy * dy + dp * dp + goal.lambda * (1.0 - std::cos(theta_n - goal.theta));
}

bool collision_free(const Configuration& q, const ObstacleSet& obstacles,
                    const LeashParams& params) {
  const Vec2 robot{q.x, q.y};
  const Vec2 human = human_position(q);
  for (const Circle& c : obstacles.circles) {
    const double margin = obstacles.safety_margin + c.radius;
    if ((robot - c.center).norm() < margin + params.robot_radius) return false;
    if ((human - c.center).norm() < margin + params.human_radius) return false;
  }
  return true;
}

double propagate_theta(double theta, double phi, double dx, double dy, double dphi,
                       const DiscountCoefficients& alpha, const LeashParams& params,
                       double step_time, DynamicsVariant variant) {
  const double psi = theta - phi;
  const Vec2 e_l{std::cos(psi), std::sin(psi)};
  const Vec2 v_w{dx / step_time, dy / step_time};
  const double cr = v_w.norm() > kZeroSpeedEps ? cross(e_l, v_w) : 0.0;
  // Solve the taut phi-rate for the yaw command realizing dphi, then apply
  // the matching heading change.
  const double dtheta = variant == DynamicsVariant::PaperFaithful
                            ? -dphi - alpha.phi * std::abs(cr) * step_time / params.l0
                            : dphi + alpha.phi * cr * step_time / params.l0;
  return wrap_angle(theta + dtheta);
}

PlanResult plan(const Configuration& start, const GoalSpec& goal, const ObstacleSet& obstacles,
                const LatticeSpec& spec, const LeashParams& params, const PlanOptions& options) {
  if (!(spec.dx > 0 && spec.dy > 0 && spec.dphi > 0)) {
    throw InvalidInput("lattice steps must be positive");
  }
  if (!collision_free(start, obstacles, params)) {
    throw InvalidInput("plan: start configuration is in collision");
  }
  const int n_phi = phi_bins(spec);
  const auto moves = lattice_moves(spec);

  struct Rec {
    double g = 0.0;
    double theta = 0.0;
    int i = 0, j = 0, k = 0;
    std::int64_t parent = -1;
    bool closed = false;
  };
  std::unordered_map<std::int64_t, Rec> table;

  struct OpenItem {
    double f;
    std::uint64_t seq;
    std::int64_t key;
  };
  auto cmp = [](const OpenItem& a, const OpenItem& b) {
    if (a.f != b.f) return a.f > b.f;
    return a.seq > b.seq;  // FIFO among equal f
  };
  std::priority_queue<OpenItem, std::vector<OpenItem>, decltype(cmp)> open(cmp);
  std::uint64_t seq = 0;

  auto node_pose = [&](int i, int j, int k) {
    return LatticePose{start.x + i * spec.dx, start.y + j * spec.dy,
                       wrap_angle(start.phi + k * spec.dphi)};
  };
  auto node_config = [&](const LatticePose& p, double theta) {
    return Configuration{p.x, p.y, theta, p.phi, params.l0};
  };
  auto at_goal = [&](const LatticePose& p) {
    return std::abs(p.x - goal.x) < spec.dx && std::abs(p.y - goal.y) < spec.dy &&
           std::abs(wrap_angle(p.phi - goal.phi)) < spec.dphi;
  };

  const std::int64_t start_key = node_key(0, 0, 0);
  {
    const LatticePose p0 = node_pose(0, 0, 0);
    if (!collision_free(node_config(p0, start.theta), obstacles, params)) {
      throw NoPath("plan: start lattice cell is not taut-feasible");
    }
    Rec r;
    r.g = 0.0;
    r.theta = start.theta;
    table[start_key] = r;
    const double h = options.admissible ? 0.0 : heuristic(p0, start.theta, goal);
    open.push({h, seq++, start_key});
  }

  std::size_t expanded = 0;
  std::int64_t goal_key = -1;
  while (!open.empty()) {
    const OpenItem item = open.top();
    open.pop();
    auto it_cur = table.find(item.key);
    if (it_cur == table.end() || it_cur->second.closed) continue;  // stale entry
    it_cur->second.closed = true;
    const Rec rec = it_cur->second;  // copy: later insertions may rehash the table
    const LatticePose pose = node_pose(rec.i, rec.j, rec.k);

    if (at_goal(pose)) {
      goal_key = item.key;
      break;
    }
    if (++expanded > options.max_expansions) {
      throw NoPath("plan: expansion budget exhausted");
    }

    for (const Move& mv : moves) {
      const int ni = rec.i + mv.di;
      const int nj = rec.j + mv.dj;
      const int nk = ((rec.k + mv.dk) % n_phi + n_phi) % n_phi;
      const LatticePose np = node_pose(ni, nj, nk);
      if (np.x < spec.bounds_min.x - 1e-12 || np.x > spec.bounds_max.x + 1e-12 ||
          np.y < spec.bounds_min.y - 1e-12 || np.y > spec.bounds_max.y + 1e-12) {
        continue;
      }
      const double theta_next =
          propagate_theta(rec.theta, pose.phi, mv.di * spec.dx, mv.dj * spec.dy,
                          mv.dk * spec.dphi, options.alpha, params, options.step_time,
                          options.theta_variant);
      const Configuration nq = node_config(np, theta_next);
      if (!collision_free(nq, obstacles, params)) continue;
      if (options.prune_leash_crossings && !leash_segment_clear(nq, obstacles)) continue;

      const double g_next = rec.g + mv.cost;
      const std::int64_t key = node_key(ni, nj, nk);
      auto it = table.find(key);
      if (it == table.end() || g_next < it->second.g - 1e-15) {
        Rec nr;
        nr.g = g_next;
        nr.theta = theta_next;
        nr.i = ni;
        nr.j = nj;
        nr.k = nk;
        nr.parent = item.key;
        nr.closed = false;
        table[key] = nr;
        const double h = options.admissible ? 0.0 : heuristic(np, theta_next, goal);
        open.push({g_next + h, seq++, key});
      }
    }
  }

  if (goal_key < 0) {
    throw NoPath("plan: open set exhausted before reaching the goal region");
  }

  PlanResult result;
  result.expanded = expanded;
  result.cost = table[goal_key].g;
  std::vector<Configuration> reversed;
  for (std::int64_t key = goal_key; key >= 0;) {
    const Rec& r = table[key];
    const LatticePose p = node_pose(r.i, r.j, r.k);
    reversed.push_back(node_config(p, r.theta));
    key = r.parent;
  }
  result.waypoints.assign(reversed.rbegin(), reversed.rend());
  return result;
}

}  // namespace leashnav
