#include "leashnav/io.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace leashnav::io {
namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = line.find(sep, pos);
    if (next == std::string::npos) {
      out.push_back(line.substr(pos));
      break;
    }
    out.push_back(line.substr(pos, next - pos));
    pos = next + 1;
  }
  return out;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  return out;
}

double require_number(const json& j, const char* key, const std::string& context) {
  if (!j.contains(key)) throw ParseError(context + ": missing key '" + key + "'");
  if (!j[key].is_number()) throw ParseError(context + ": key '" + key + "' must be a number");
  return j[key].get<double>();
}

double number_or(const json& j, const char* key, double fallback) {
  return j.contains(key) ? j[key].get<double>() : fallback;
}

json config_to_json(const Configuration& q) {
  return json{{"x", q.x}, {"y", q.y}, {"theta", q.theta}, {"phi", q.phi}, {"l", q.l}};
}

Configuration config_from_json(const json& j, const std::string& context) {
  check_keys(j, {"x", "y", "theta", "phi", "l"}, context);
  Configuration q;
  q.x = require_number(j, "x", context);
  q.y = require_number(j, "y", context);
  q.theta = require_number(j, "theta", context);
  q.phi = require_number(j, "phi", context);
  q.l = require_number(j, "l", context);
  return q;
}

json obstacles_to_json(const ObstacleSet& obstacles) {
  json circles = json::array();
  for (const Circle& c : obstacles.circles) {
    circles.push_back(json{{"x", c.center.x}, {"y", c.center.y}, {"r", c.radius}});
  }
  return json{{"circles", circles}, {"safety_margin", obstacles.safety_margin}};
}

ObstacleSet obstacles_from_json(const json& j, const std::string& context) {
  check_keys(j, {"circles", "safety_margin"}, context);
  ObstacleSet out;
  out.safety_margin = number_or(j, "safety_margin", 0.0);
  if (j.contains("circles")) {
    if (!j["circles"].is_array()) throw ParseError(context + ": 'circles' must be an array");
    for (const auto& c : j["circles"]) {
      check_keys(c, {"x", "y", "r"}, context + ".circles");
      out.circles.push_back(
          {{require_number(c, "x", context), require_number(c, "y", context)},
           require_number(c, "r", context)});
    }
  }
  return out;
}

template <std::size_t N>
std::array<double, N> array_from_json(const json& j, const char* key, const std::string& context,
                                      const std::array<double, N>& fallback) {
  if (!j.contains(key)) return fallback;
  const auto& a = j[key];
  if (!a.is_array() || a.size() != N) {
    throw ParseError(context + ": '" + key + "' must be an array of " + std::to_string(N));
  }
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = a[i].get<double>();
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, const std::string& context) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first != last && (*first == ' ' || *first == '\t')) ++first;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last) {
    throw ParseError(context + ": cannot parse number '" + s + "'");
  }
  return v;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file '" + path + "'");
  out << content;
}

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& context) {
  if (!j.is_object()) throw ParseError(context + ": expected an object");
  std::set<std::string> ok;
  for (const char* k : allowed) ok.insert(k);
  for (const auto& item : j.items()) {
    if (!ok.count(item.key())) {
      throw ParseError(context + ": unknown key '" + item.key() + "'");
    }
  }
}

// --- trajectory logs --------------------------------------------------------

TrajectoryLog parse_trajectory_log_csv(const std::string& text) {
  const auto rows = lines_of(text);
  if (rows.empty()) throw ParseError("trajectory log: empty file");
  const std::string header = rows[0];
  bool with_force = false;
  if (header == "t,x_gt,y_gt,xh_gt,yh_gt,vbx,vby,omega") {
    with_force = false;
  } else if (header == "t,x_gt,y_gt,xh_gt,yh_gt,vbx,vby,omega,force") {
    with_force = true;
  } else {
    throw ParseError("trajectory log: unexpected header '" + header + "'");
  }

  TrajectoryLog log;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].empty()) continue;
    const auto cols = split(rows[i], ',');
    const std::size_t expect = with_force ? 9 : 8;
    const std::string context = "trajectory log line " + std::to_string(i + 1);
    if (cols.size() != expect) {
      throw ParseError(context + ": expected " + std::to_string(expect) + " columns");
    }
    log.timestamps.push_back(parse_double(cols[0], context));
    log.robot_gt.push_back({parse_double(cols[1], context), parse_double(cols[2], context)});
    log.human_gt.push_back({parse_double(cols[3], context), parse_double(cols[4], context)});
    ControlInput u;
    u.v_body = {parse_double(cols[5], context), parse_double(cols[6], context)};
    u.omega = parse_double(cols[7], context);
    log.inputs.push_back(u);
    if (with_force) log.force.push_back(parse_double(cols[8], context));
  }
  if (log.timestamps.size() < 2) throw ParseError("trajectory log: needs at least 2 rows");

  // Initial configuration convention: the heading starts along the leash
  // direction (phi = 0) with the logged human-robot separation.
  const Vec2 rel = log.robot_gt[0] - log.human_gt[0];
  log.initial_config.x = log.robot_gt[0].x;
  log.initial_config.y = log.robot_gt[0].y;
  log.initial_config.theta = std::atan2(rel.y, rel.x);
  log.initial_config.phi = 0.0;
  log.initial_config.l = rel.norm();
  validate_log(log);
  return log;
}

std::string trajectory_log_to_csv(const TrajectoryLog& log) {
  std::string out = log.force.empty() ? "t,x_gt,y_gt,xh_gt,yh_gt,vbx,vby,omega\n"
                                      : "t,x_gt,y_gt,xh_gt,yh_gt,vbx,vby,omega,force\n";
  for (std::size_t i = 0; i < log.timestamps.size(); ++i) {
    out += format_double(log.timestamps[i]);
    out += ',' + format_double(log.robot_gt[i].x) + ',' + format_double(log.robot_gt[i].y);
    out += ',' + format_double(log.human_gt[i].x) + ',' + format_double(log.human_gt[i].y);
    out += ',' + format_double(log.inputs[i].v_body.x) + ',' +
           format_double(log.inputs[i].v_body.y) + ',' + format_double(log.inputs[i].omega);
    if (!log.force.empty()) out += ',' + format_double(log.force[i]);
    out += '\n';
  }
  return out;
}

// --- tension samples ---------------------------------------------------------

std::vector<TensionSample> parse_tension_samples_csv(const std::string& text) {
  const auto rows = lines_of(text);
  if (rows.empty() || rows[0] != "v_proj,force") {
    throw ParseError("tension samples: expected header 'v_proj,force'");
  }
  std::vector<TensionSample> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].empty()) continue;
    const auto cols = split(rows[i], ',');
    const std::string context = "tension samples line " + std::to_string(i + 1);
    if (cols.size() != 2) throw ParseError(context + ": expected 2 columns");
    out.push_back({parse_double(cols[0], context), parse_double(cols[1], context)});
  }
  return out;
}

std::string tension_samples_to_csv(std::span<const TensionSample> samples) {
  std::string out = "v_proj,force\n";
  for (const auto& s : samples) {
    out += format_double(s.v_proj) + ',' + format_double(s.force) + '\n';
  }
  return out;
}

// --- simulation log ----------------------------------------------------------

namespace {
constexpr const char* kSimLogHeader =
    "t,x,y,theta,phi,l,mode,xh,yh,xh_est,yh_est,vbx,vby,omega,F_pred,F_meas,waypoint_idx";
}

std::string simlog_to_csv(const SimLog& log) {
  std::string out = std::string(kSimLogHeader) + "\n";
  for (const SimRow& r : log.rows) {
    out += format_double(r.t);
    out += ',' + format_double(r.q.x) + ',' + format_double(r.q.y) + ',' +
           format_double(r.q.theta) + ',' + format_double(r.q.phi) + ',' + format_double(r.q.l);
    out += ',' + std::to_string(r.mode);
    out += ',' + format_double(r.human.x) + ',' + format_double(r.human.y);
    out += ',' + format_double(r.human_est.x) + ',' + format_double(r.human_est.y);
    out += ',' + format_double(r.u.v_body.x) + ',' + format_double(r.u.v_body.y) + ',' +
           format_double(r.u.omega);
    out += ',' + format_double(r.f_pred) + ',' + format_double(r.f_meas);
    out += ',' + std::to_string(r.waypoint_idx);
    out += '\n';
  }
  return out;
}

SimLog parse_simlog_csv(const std::string& text) {
  const auto rows = lines_of(text);
  if (rows.empty() || rows[0] != kSimLogHeader) {
    throw ParseError("simulation log: unexpected header");
  }
  SimLog log;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].empty()) continue;
    const auto cols = split(rows[i], ',');
    const std::string context = "simulation log line " + std::to_string(i + 1);
    if (cols.size() != 17) throw ParseError(context + ": expected 17 columns");
    SimRow r;
    r.t = parse_double(cols[0], context);
    r.q.x = parse_double(cols[1], context);
    r.q.y = parse_double(cols[2], context);
    r.q.theta = parse_double(cols[3], context);
    r.q.phi = parse_double(cols[4], context);
    r.q.l = parse_double(cols[5], context);
    r.mode = static_cast<int>(parse_double(cols[6], context));
    r.human = {parse_double(cols[7], context), parse_double(cols[8], context)};
    r.human_est = {parse_double(cols[9], context), parse_double(cols[10], context)};
    r.u.v_body = {parse_double(cols[11], context), parse_double(cols[12], context)};
    r.u.omega = parse_double(cols[13], context);
    r.f_pred = parse_double(cols[14], context);
    r.f_meas = parse_double(cols[15], context);
    r.waypoint_idx = static_cast<int>(parse_double(cols[16], context));
    log.rows.push_back(r);
  }
  return log;
}

// --- scenario ------------------------------------------------------------------

json scenario_to_json(const ScenarioConfig& s) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["obstacles"] = obstacles_to_json(s.obstacles);
  j["start"] = config_to_json(s.start);
  j["goal"] = json{{"x", s.goal.x},         {"y", s.goal.y},     {"phi", s.goal.phi},
                   {"theta", s.goal.theta}, {"lambda", s.goal.lambda}};
  j["leash"] = json{{"l0", s.leash.l0},
                    {"f_bar", s.leash.f_bar},
                    {"robot_radius", s.leash.robot_radius},
                    {"human_radius", s.leash.human_radius}};
  j["alpha"] = json::array({s.alpha.x, s.alpha.y, s.alpha.theta, s.alpha.phi});
  j["tension"] = tension_model_to_json(s.tension);
  j["noise"] = json{{"sigma_f", s.noise.sigma_f}, {"sigma_h", s.noise.sigma_h}};
  j["lattice"] = json{{"dx", s.lattice.dx},
                      {"dy", s.lattice.dy},
                      {"dphi", s.lattice.dphi},
                      {"bounds", json::array({s.lattice.bounds_min.x, s.lattice.bounds_min.y,
                                              s.lattice.bounds_max.x, s.lattice.bounds_max.y})}};
  j["weights"] = json{{"q_target", s.weights.q_target}, {"q_input", s.weights.q_input},
                      {"s_t", s.weights.s_t},           {"s_f", s.weights.s_f},
                      {"s_l", s.weights.s_l},           {"s_df", s.weights.s_df}};
  j["planner"] = json{{"q_lower", s.planner.q_lower}, {"q_upper", s.planner.q_upper},
                      {"u_lower", s.planner.u_lower}, {"u_upper", s.planner.u_upper},
                      {"t_min", s.planner.t_min},     {"t_max", s.planner.t_max},
                      {"horizon", s.planner.horizon},
                      {"squared_force_rate", s.squared_force_rate}};
  j["sim"] = json{{"replan_period", s.replan_period},
                  {"sim_dt", s.sim_dt},
                  {"max_time", s.max_time},
                  {"rng_seed", s.rng_seed},
                  {"waypoint_pos_tol", s.tolerances.waypoint_pos},
                  {"waypoint_ang_tol", s.tolerances.waypoint_ang},
                  {"goal_pos_tol", s.tolerances.goal_pos},
                  {"goal_ang_tol", s.tolerances.goal_ang},
                  {"kf_accel_sigma", s.kf_accel_sigma}};
  return j;
}

ScenarioConfig scenario_from_json(const json& j) {
  check_keys(j,
             {"schema_version", "obstacles", "grid", "start", "goal", "leash", "alpha", "tension",
              "noise", "lattice", "weights", "planner", "sim"},
             "scenario");
  if (!j.contains("schema_version") || j["schema_version"].get<int>() != kSchemaVersion) {
    throw ParseError("scenario: missing or unsupported schema_version");
  }
  ScenarioConfig s;
  if (j.contains("obstacles")) s.obstacles = obstacles_from_json(j["obstacles"], "scenario.obstacles");
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    check_keys(g, {"resolution", "origin", "rows"}, "scenario.grid");
    std::string text = "resolution " + format_double(require_number(g, "resolution", "grid"));
    if (g.contains("origin")) {
      text += "\norigin " + format_double(g["origin"][0].get<double>()) + " " +
              format_double(g["origin"][1].get<double>());
    }
    for (const auto& row : g["rows"]) text += "\n" + row.get<std::string>();
    const auto circles = parse_occupancy_grid(text);
    s.obstacles.circles.insert(s.obstacles.circles.end(), circles.begin(), circles.end());
  }
  if (!j.contains("start")) throw ParseError("scenario: missing key 'start'");
  s.start = config_from_json(j["start"], "scenario.start");
  if (!j.contains("goal")) throw ParseError("scenario: missing key 'goal'");
  check_keys(j["goal"], {"x", "y", "phi", "theta", "lambda"}, "scenario.goal");
  s.goal.x = require_number(j["goal"], "x", "scenario.goal");
  s.goal.y = require_number(j["goal"], "y", "scenario.goal");
  s.goal.phi = number_or(j["goal"], "phi", 0.0);
  s.goal.theta = number_or(j["goal"], "theta", 0.0);
  s.goal.lambda = number_or(j["goal"], "lambda", 1.0);
  if (j.contains("leash")) {
    check_keys(j["leash"], {"l0", "f_bar", "robot_radius", "human_radius"}, "scenario.leash");
    s.leash.l0 = number_or(j["leash"], "l0", s.leash.l0);
    s.leash.f_bar = number_or(j["leash"], "f_bar", s.leash.f_bar);
    s.leash.robot_radius = number_or(j["leash"], "robot_radius", s.leash.robot_radius);
    s.leash.human_radius = number_or(j["leash"], "human_radius", s.leash.human_radius);
  }
  if (j.contains("alpha")) {
    const auto a = array_from_json<4>(j, "alpha", "scenario", {0.8, 0.8, 0.6, 0.8});
    s.alpha = {a[0], a[1], a[2], a[3]};
  }
  if (j.contains("tension")) s.tension = tension_model_from_json(j["tension"]);
  if (j.contains("noise")) {
    check_keys(j["noise"], {"sigma_f", "sigma_h"}, "scenario.noise");
    s.noise.sigma_f = number_or(j["noise"], "sigma_f", 0.0);
    s.noise.sigma_h = number_or(j["noise"], "sigma_h", 0.0);
  }
  if (j.contains("lattice")) {
    check_keys(j["lattice"], {"dx", "dy", "dphi", "bounds"}, "scenario.lattice");
    s.lattice.dx = number_or(j["lattice"], "dx", s.lattice.dx);
    s.lattice.dy = number_or(j["lattice"], "dy", s.lattice.dy);
    s.lattice.dphi = number_or(j["lattice"], "dphi", s.lattice.dphi);
    if (j["lattice"].contains("bounds")) {
      const auto& b = j["lattice"]["bounds"];
      if (!b.is_array() || b.size() != 4) {
        throw ParseError("scenario.lattice: 'bounds' must be [xmin, ymin, xmax, ymax]");
      }
      s.lattice.bounds_min = {b[0].get<double>(), b[1].get<double>()};
      s.lattice.bounds_max = {b[2].get<double>(), b[3].get<double>()};
    }
  }
  if (j.contains("weights")) {
    const auto& w = j["weights"];
    check_keys(w, {"q_target", "q_input", "s_t", "s_f", "s_l", "s_df"}, "scenario.weights");
    s.weights.q_target = array_from_json<5>(w, "q_target", "scenario.weights", s.weights.q_target);
    s.weights.q_input = array_from_json<3>(w, "q_input", "scenario.weights", s.weights.q_input);
    s.weights.s_t = number_or(w, "s_t", s.weights.s_t);
    s.weights.s_f = number_or(w, "s_f", s.weights.s_f);
    s.weights.s_l = number_or(w, "s_l", s.weights.s_l);
    s.weights.s_df = number_or(w, "s_df", s.weights.s_df);
  }
  if (j.contains("planner")) {
    const auto& p = j["planner"];
    check_keys(p,
               {"q_lower", "q_upper", "u_lower", "u_upper", "t_min", "t_max", "horizon",
                "squared_force_rate"},
               "scenario.planner");
    s.planner.q_lower = array_from_json<5>(p, "q_lower", "scenario.planner", s.planner.q_lower);
    s.planner.q_upper = array_from_json<5>(p, "q_upper", "scenario.planner", s.planner.q_upper);
    s.planner.u_lower = array_from_json<3>(p, "u_lower", "scenario.planner", s.planner.u_lower);
    s.planner.u_upper = array_from_json<3>(p, "u_upper", "scenario.planner", s.planner.u_upper);
    s.planner.t_min = number_or(p, "t_min", s.planner.t_min);
    s.planner.t_max = number_or(p, "t_max", s.planner.t_max);
    s.planner.horizon = static_cast<int>(number_or(p, "horizon", s.planner.horizon));
    if (p.contains("squared_force_rate")) {
      s.squared_force_rate = p["squared_force_rate"].get<bool>();
    }
  }
  if (j.contains("sim")) {
    const auto& m = j["sim"];
    check_keys(m,
               {"replan_period", "sim_dt", "max_time", "rng_seed", "waypoint_pos_tol",
                "waypoint_ang_tol", "goal_pos_tol", "goal_ang_tol", "kf_accel_sigma"},
               "scenario.sim");
    s.replan_period = number_or(m, "replan_period", s.replan_period);
    s.sim_dt = number_or(m, "sim_dt", s.sim_dt);
    s.max_time = number_or(m, "max_time", s.max_time);
    s.rng_seed = static_cast<std::uint64_t>(number_or(m, "rng_seed", 0.0));
    s.tolerances.waypoint_pos = number_or(m, "waypoint_pos_tol", s.tolerances.waypoint_pos);
    s.tolerances.waypoint_ang = number_or(m, "waypoint_ang_tol", s.tolerances.waypoint_ang);
    s.tolerances.goal_pos = number_or(m, "goal_pos_tol", s.tolerances.goal_pos);
    s.tolerances.goal_ang = number_or(m, "goal_ang_tol", s.tolerances.goal_ang);
    s.kf_accel_sigma = number_or(m, "kf_accel_sigma", s.kf_accel_sigma);
  }
  return s;
}

json scenario_schema() {
  json j;
  j["schema_version"] = "int, required, = 1";
  j["obstacles"] = {{"circles", "[{x, y, r}] in meters"}, {"safety_margin", "meters (planning margin d)"}};
  j["grid"] = {{"resolution", "meters per cell"},
               {"origin", "[x, y] of the lower-left corner, optional"},
               {"rows", "['##..', ...] top row first; '#' occupied"}};
  j["start"] = "{x, y, theta, phi, l}";
  j["goal"] = "{x, y, phi, theta, lambda}";
  j["leash"] = "{l0, f_bar, robot_radius, human_radius}";
  j["alpha"] = "[alpha_x, alpha_y, alpha_theta, alpha_phi]";
  j["tension"] = "{beta1, beta2, sigma}";
  j["noise"] = "{sigma_f, sigma_h}";
  j["lattice"] = "{dx, dy, dphi, bounds: [xmin, ymin, xmax, ymax]}";
  j["weights"] = "{q_target[5], q_input[3], s_t, s_f, s_l, s_df}";
  j["planner"] =
      "{q_lower[5], q_upper[5], u_lower[3], u_upper[3], t_min, t_max, horizon, squared_force_rate}";
  j["sim"] =
      "{replan_period, sim_dt, max_time, rng_seed, waypoint_pos_tol, waypoint_ang_tol, "
      "goal_pos_tol, goal_ang_tol, kf_accel_sigma}";
  return j;
}

// --- waypoints, metrics, solutions ------------------------------------------

json waypoints_to_json(std::span<const Configuration> waypoints) {
  json arr = json::array();
  for (const Configuration& q : waypoints) arr.push_back(config_to_json(q));
  return json{{"schema_version", kSchemaVersion}, {"waypoints", arr}};
}

std::vector<Configuration> waypoints_from_json(const json& j) {
  check_keys(j, {"schema_version", "waypoints", "cost"}, "waypoints");
  if (!j.contains("waypoints") || !j["waypoints"].is_array()) {
    throw ParseError("waypoints: missing 'waypoints' array");
  }
  std::vector<Configuration> out;
  for (const auto& w : j["waypoints"]) out.push_back(config_from_json(w, "waypoints"));
  return out;
}

json metrics_to_json(const Metrics& m) {
  json intervals = json::array();
  for (const auto& [a, b] : m.slack_intervals) intervals.push_back(json::array({a, b}));
  return json{{"schema_version", kSchemaVersion},
              {"status", to_string(m.status)},
              {"time_to_goal", m.time_to_goal},
              {"min_clearance", m.min_clearance},
              {"slack_intervals", intervals},
              {"max_human_speed_during_slack", m.max_human_speed_during_slack},
              {"collision_count", m.collision_count}};
}

json solution_to_json(const CollocationSolution& sol) {
  json states = json::array();
  for (const auto& q : sol.states) {
    states.push_back(json::array({q.x, q.y, q.theta, q.phi, q.l}));
  }
  json inputs = json::array();
  for (const auto& u : sol.inputs) {
    inputs.push_back(json::array({u.v_body.x, u.v_body.y, u.omega}));
  }
  return json{{"schema_version", kSchemaVersion},
              {"states", states},
              {"inputs", inputs},
              {"forces", sol.forces},
              {"modes", sol.modes},
              {"t_final", sol.t_final},
              {"cost", sol.cost},
              {"kkt_residual", sol.kkt_residual},
              {"status", sol.status == SolveStatus::Converged ? "converged" : "max_iterations"}};
}

CollocationSolution solution_from_json(const json& j) {
  check_keys(j,
             {"schema_version", "states", "inputs", "forces", "modes", "t_final", "cost",
              "kkt_residual", "status"},
             "solution");
  CollocationSolution sol;
  for (const auto& s : j.at("states")) {
    sol.states.push_back({s[0].get<double>(), s[1].get<double>(), s[2].get<double>(),
                          s[3].get<double>(), s[4].get<double>()});
  }
  for (const auto& u : j.at("inputs")) {
    sol.inputs.push_back({{u[0].get<double>(), u[1].get<double>()}, u[2].get<double>()});
  }
  sol.forces = j.at("forces").get<std::vector<double>>();
  sol.modes = j.at("modes").get<std::vector<int>>();
  sol.t_final = j.at("t_final").get<double>();
  sol.cost = j.at("cost").get<double>();
  sol.kkt_residual = j.at("kkt_residual").get<double>();
  sol.status = j.at("status").get<std::string>() == "converged" ? SolveStatus::Converged
                                                                : SolveStatus::MaxIterations;
  return sol;
}

json problem_to_json(const CollocationProblem& p) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["q_curr"] = config_to_json(p.q_curr);
  j["q_target"] = config_to_json(p.q_target);
  j["obstacles"] = obstacles_to_json(p.obstacles);
  j["weights"] = json{{"q_target", p.weights.q_target}, {"q_input", p.weights.q_input},
                      {"s_t", p.weights.s_t},           {"s_f", p.weights.s_f},
                      {"s_l", p.weights.s_l},           {"s_df", p.weights.s_df}};
  j["bounds"] = json{{"q_lower", p.bounds.q_lower}, {"q_upper", p.bounds.q_upper},
                     {"u_lower", p.bounds.u_lower}, {"u_upper", p.bounds.u_upper},
                     {"t_min", p.bounds.t_min},     {"t_max", p.bounds.t_max},
                     {"horizon", p.bounds.horizon}};
  j["tension"] = tension_model_to_json(p.tension);
  j["alpha"] = json::array({p.alpha.x, p.alpha.y, p.alpha.theta, p.alpha.phi});
  j["leash"] = json{{"l0", p.leash.l0},
                    {"f_bar", p.leash.f_bar},
                    {"robot_radius", p.leash.robot_radius},
                    {"human_radius", p.leash.human_radius}};
  j["squared_force_rate"] = p.squared_force_rate;
  j["variant"] = p.variant == DynamicsVariant::PaperFaithful ? "paper_faithful"
                                                             : "geometric_consistent";
  return j;
}

CollocationProblem problem_from_json(const json& j) {
  check_keys(j,
             {"schema_version", "q_curr", "q_target", "obstacles", "weights", "bounds", "tension",
              "alpha", "leash", "squared_force_rate", "variant"},
             "problem");
  CollocationProblem p;
  p.q_curr = config_from_json(j.at("q_curr"), "problem.q_curr");
  p.q_target = config_from_json(j.at("q_target"), "problem.q_target");
  if (j.contains("obstacles")) p.obstacles = obstacles_from_json(j["obstacles"], "problem.obstacles");
  if (j.contains("weights")) {
    const auto& w = j["weights"];
    check_keys(w, {"q_target", "q_input", "s_t", "s_f", "s_l", "s_df"}, "problem.weights");
    p.weights.q_target = array_from_json<5>(w, "q_target", "problem.weights", p.weights.q_target);
    p.weights.q_input = array_from_json<3>(w, "q_input", "problem.weights", p.weights.q_input);
    p.weights.s_t = number_or(w, "s_t", p.weights.s_t);
    p.weights.s_f = number_or(w, "s_f", p.weights.s_f);
    p.weights.s_l = number_or(w, "s_l", p.weights.s_l);
    p.weights.s_df = number_or(w, "s_df", p.weights.s_df);
  }
  if (j.contains("bounds")) {
    const auto& b = j["bounds"];
    check_keys(b, {"q_lower", "q_upper", "u_lower", "u_upper", "t_min", "t_max", "horizon"},
               "problem.bounds");
    p.bounds.q_lower = array_from_json<5>(b, "q_lower", "problem.bounds", p.bounds.q_lower);
    p.bounds.q_upper = array_from_json<5>(b, "q_upper", "problem.bounds", p.bounds.q_upper);
    p.bounds.u_lower = array_from_json<3>(b, "u_lower", "problem.bounds", p.bounds.u_lower);
    p.bounds.u_upper = array_from_json<3>(b, "u_upper", "problem.bounds", p.bounds.u_upper);
    p.bounds.t_min = number_or(b, "t_min", p.bounds.t_min);
    p.bounds.t_max = number_or(b, "t_max", p.bounds.t_max);
    p.bounds.horizon = static_cast<int>(number_or(b, "horizon", p.bounds.horizon));
  }
  if (j.contains("tension")) p.tension = tension_model_from_json(j["tension"]);
  if (j.contains("alpha")) {
    const auto a = array_from_json<4>(j, "alpha", "problem", {0.8, 0.8, 0.6, 0.8});
    p.alpha = {a[0], a[1], a[2], a[3]};
  }
  if (j.contains("leash")) {
    check_keys(j["leash"], {"l0", "f_bar", "robot_radius", "human_radius"}, "problem.leash");
    p.leash.l0 = number_or(j["leash"], "l0", p.leash.l0);
    p.leash.f_bar = number_or(j["leash"], "f_bar", p.leash.f_bar);
    p.leash.robot_radius = number_or(j["leash"], "robot_radius", p.leash.robot_radius);
    p.leash.human_radius = number_or(j["leash"], "human_radius", p.leash.human_radius);
  }
  if (j.contains("squared_force_rate")) {
    p.squared_force_rate = j["squared_force_rate"].get<bool>();
  }
  if (j.contains("variant")) {
    const std::string v = j["variant"].get<std::string>();
    if (v == "paper_faithful") {
      p.variant = DynamicsVariant::PaperFaithful;
    } else if (v == "geometric_consistent") {
      p.variant = DynamicsVariant::GeometricConsistent;
    } else {
      throw ParseError("problem: unknown variant '" + v + "'");
    }
  }
  return p;
}

json tension_model_to_json(const TensionModel& model) {
  return json{{"beta1", model.beta1}, {"beta2", model.beta2}, {"sigma", model.sigma}};
}

TensionModel tension_model_from_json(const json& j) {
  check_keys(j, {"beta1", "beta2", "sigma", "schema_version"}, "tension");
  TensionModel m;
  m.beta1 = require_number(j, "beta1", "tension");
  m.beta2 = require_number(j, "beta2", "tension");
  m.sigma = number_or(j, "sigma", 0.0);
  return m;
}

json identification_to_json(const IdentificationResult& r) {
  return json{{"schema_version", kSchemaVersion},
              {"alpha", json::array({r.alpha.x, r.alpha.y, r.alpha.theta, r.alpha.phi})},
              {"robot_rmse", r.robot_rmse},
              {"human_rmse", r.human_rmse}};
}

// --- occupancy grid -----------------------------------------------------------

std::vector<Circle> parse_occupancy_grid(const std::string& text) {
  const auto rows = lines_of(text);
  if (rows.empty()) throw ParseError("occupancy grid: empty input");
  double resolution = 0.0;
  Vec2 origin{0.0, 0.0};
  std::size_t first_row = 0;
  for (; first_row < rows.size(); ++first_row) {
    const std::string& line = rows[first_row];
    if (line.rfind("resolution", 0) == 0) {
      resolution = parse_double(line.substr(10), "occupancy grid resolution");
    } else if (line.rfind("origin", 0) == 0) {
      std::stringstream ss(line.substr(6));
      if (!(ss >> origin.x >> origin.y)) {
        throw ParseError("occupancy grid: malformed origin line");
      }
    } else if (!line.empty()) {
      break;
    }
  }
  if (!(resolution > 0.0)) {
    throw ParseError("occupancy grid: missing or non-positive resolution header");
  }
  std::vector<std::string> grid(rows.begin() + first_row, rows.end());
  while (!grid.empty() && grid.back().empty()) grid.pop_back();
  if (grid.empty()) throw ParseError("occupancy grid: no rows");

  std::vector<Circle> circles;
  const std::size_t n_rows = grid.size();
  for (std::size_t r = 0; r < n_rows; ++r) {
    for (std::size_t c = 0; c < grid[r].size(); ++c) {
      const char ch = grid[r][c];
      if (ch == '#') {
        // Top text row is the northernmost; each occupied cell becomes its
        // inscribed circle.
        const double x = origin.x + (static_cast<double>(c) + 0.5) * resolution;
        const double y = origin.y + (static_cast<double>(n_rows - 1 - r) + 0.5) * resolution;
        circles.push_back({{x, y}, 0.5 * resolution});
      } else if (ch != '.' && ch != ' ') {
        throw ParseError("occupancy grid: unexpected character '" + std::string(1, ch) +
                         "' at row " + std::to_string(r + 1));
      }
    }
  }
  return circles;
}

ObstacleSet load_obstacles(const std::string& path) {
  const std::string text = read_file(path);
  // JSON circle lists start with '{'; anything else is a grid.
  const std::size_t first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    const json j = json::parse(text, nullptr, true, true);
    return obstacles_from_json(j.contains("obstacles") ? j["obstacles"] : j, "obstacles");
  }
  ObstacleSet out;
  out.circles = parse_occupancy_grid(text);
  return out;
}

}  // namespace leashnav::io
