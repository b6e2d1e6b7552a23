#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "leashnav/io.hpp"
#include "leashnav/render.hpp"

namespace fs = std::filesystem;
using namespace leashnav;
using json = leashnav::io::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;    // malformed input or configuration
constexpr int kExitDomain = 2;   // NoPath / Infeasible / timeout

int cmd_plan_global(const std::string& map_path, double margin, std::vector<double> start,
                    std::vector<double> goal, std::vector<double> lattice,
                    std::vector<double> bounds, std::vector<double> leash_v,
                    std::vector<double> alpha_v, bool admissible, const std::string& out_path) {
  ObstacleSet obstacles;
  if (!map_path.empty()) obstacles = io::load_obstacles(map_path);
  obstacles.safety_margin = margin;

  Configuration q0{start[0], start[1], start[2], start[3], start[4]};
  GoalSpec goal_spec{goal[0], goal[1], goal[2], goal[3], goal[4]};
  LatticeSpec spec;
  spec.dx = lattice[0];
  spec.dy = lattice[1];
  spec.dphi = lattice[2];
  spec.bounds_min = {bounds[0], bounds[1]};
  spec.bounds_max = {bounds[2], bounds[3]};
  LeashParams leash{leash_v[0], leash_v[1], leash_v[2], leash_v[3]};
  PlanOptions options;
  options.admissible = admissible;
  options.alpha = {alpha_v[0], alpha_v[1], alpha_v[2], alpha_v[3]};

  const PlanResult result = plan(q0, goal_spec, obstacles, spec, leash, options);
  json j = io::waypoints_to_json(result.waypoints);
  j["cost"] = result.cost;
  io::write_file(out_path, j.dump(2) + "\n");
  std::cout << "waypoints: " << result.waypoints.size() << "  cost: " << io::format_double(result.cost)
            << "  -> " << out_path << "\n";
  return kExitOk;
}

int cmd_plan_local(const std::string& problem_path, const std::string& out_path) {
  const CollocationProblem problem =
      io::problem_from_json(json::parse(io::read_file(problem_path)));
  const CollocationSolution sol = solve(problem);
  io::write_file(out_path, io::solution_to_json(sol).dump(2) + "\n");
  std::cout << "cost: " << io::format_double(sol.cost)
            << "  kkt: " << io::format_double(sol.kkt_residual) << "  modes:";
  for (int m : sol.modes) std::cout << ' ' << m;
  std::cout << "  -> " << out_path << "\n";
  return kExitOk;
}

int cmd_simulate(const std::string& scenario_path, const std::string& log_path,
                 const std::string& metrics_path) {
  const ScenarioConfig scenario =
      io::scenario_from_json(json::parse(io::read_file(scenario_path)));
  const auto [log, metrics] = run(scenario);
  io::write_file(log_path, io::simlog_to_csv(log));
  io::write_file(metrics_path, io::metrics_to_json(metrics).dump(2) + "\n");
  std::cout << "status: " << to_string(metrics.status)
            << "  t: " << io::format_double(metrics.time_to_goal)
            << "  collisions: " << metrics.collision_count
            << "  slack intervals: " << metrics.slack_intervals.size() << "\n";
  const bool ok = metrics.status == SimStatus::Success && metrics.collision_count == 0;
  return ok ? kExitOk : kExitDomain;
}

int cmd_sysid(std::vector<std::string> log_paths, const std::string& dir, double grid_step,
              bool refine, bool with_tension, std::vector<double> leash_v,
              const std::string& out_path) {
  if (!dir.empty()) {
    if (!fs::is_directory(dir)) throw InvalidInput("sysid: '" + dir + "' is not a directory");
    std::vector<std::string> found;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.path().extension() == ".csv") found.push_back(entry.path().string());
    }
    std::sort(found.begin(), found.end());
    log_paths.insert(log_paths.end(), found.begin(), found.end());
  }
  if (log_paths.empty()) throw InvalidInput("sysid: no log files given");

  std::vector<TrajectoryLog> logs;
  for (const std::string& p : log_paths) {
    logs.push_back(io::parse_trajectory_log_csv(io::read_file(p)));
  }
  LeashParams leash{leash_v[0], leash_v[1], leash_v[2], leash_v[3]};
  const IdentificationResult result = identify_alpha(logs, grid_step, leash, refine);
  json j = io::identification_to_json(result);
  if (with_tension) {
    const TensionModel model = fit_tension_from_logs(logs);
    j["beta1"] = model.beta1;
    j["beta2"] = model.beta2;
    j["sigma"] = model.sigma;
  }
  io::write_file(out_path, j.dump(2) + "\n");
  std::cout << "alpha: [" << io::format_double(result.alpha.x) << ", "
            << io::format_double(result.alpha.y) << ", " << io::format_double(result.alpha.theta)
            << ", " << io::format_double(result.alpha.phi) << "]"
            << "  robot_rmse: " << io::format_double(result.robot_rmse)
            << "  human_rmse: " << io::format_double(result.human_rmse) << "  -> " << out_path
            << "\n";
  return kExitOk;
}

int cmd_fit_tension(const std::string& samples_path, const std::string& out_path) {
  const auto samples = io::parse_tension_samples_csv(io::read_file(samples_path));
  const TensionModel model = fit(samples);
  json j = io::tension_model_to_json(model);
  j["schema_version"] = io::kSchemaVersion;
  j["coverage"] = coverage(samples, model);
  io::write_file(out_path, j.dump(2) + "\n");
  std::cout << "beta1: " << io::format_double(model.beta1)
            << "  beta2: " << io::format_double(model.beta2)
            << "  sigma: " << io::format_double(model.sigma) << "  -> " << out_path << "\n";
  return kExitOk;
}

int cmd_render(const std::string& simlog_path, const std::string& waypoints_path,
               const std::string& map_path, const std::string& scenario_path, double scale,
               const std::string& out_path) {
  ObstacleSet obstacles;
  if (!scenario_path.empty()) {
    obstacles = io::scenario_from_json(json::parse(io::read_file(scenario_path))).obstacles;
  } else if (!map_path.empty()) {
    obstacles = io::load_obstacles(map_path);
  }
  SimLog log;
  const SimLog* log_ptr = nullptr;
  if (!simlog_path.empty()) {
    log = io::parse_simlog_csv(io::read_file(simlog_path));
    log_ptr = &log;
  }
  std::vector<Configuration> waypoints;
  if (!waypoints_path.empty()) {
    waypoints = io::waypoints_from_json(json::parse(io::read_file(waypoints_path)));
  }
  RenderSpec spec;
  spec.pixels_per_meter = scale;
  io::write_file(out_path, render_svg(obstacles, log_ptr, waypoints, spec));
  std::cout << "-> " << out_path << "\n";
  return kExitOk;
}

int cmd_bench(std::vector<std::string> scenario_paths, const std::string& out_dir) {
  if (scenario_paths.empty()) throw InvalidInput("bench: no scenario files given");
  if (!out_dir.empty()) fs::create_directories(out_dir);
  bool all_ok = true;
  for (const std::string& path : scenario_paths) {
    const ScenarioConfig scenario = io::scenario_from_json(json::parse(io::read_file(path)));
    const auto [log, metrics] = run(scenario);
    const std::string stem = fs::path(path).stem().string();
    if (!out_dir.empty()) {
      io::write_file((fs::path(out_dir) / (stem + "_log.csv")).string(), io::simlog_to_csv(log));
      io::write_file((fs::path(out_dir) / (stem + "_metrics.json")).string(),
                     io::metrics_to_json(metrics).dump(2) + "\n");
    }
    const bool ok = metrics.status == SimStatus::Success && metrics.collision_count == 0;
    all_ok = all_ok && ok;
    std::cout << stem << ": " << to_string(metrics.status)
              << "  t=" << io::format_double(metrics.time_to_goal)
              << "  min_clearance=" << io::format_double(metrics.min_clearance)
              << "  slack=" << metrics.slack_intervals.size() << "\n";
  }
  return all_ok ? kExitOk : kExitDomain;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"leashnav: leash-guided navigation planning and simulation"};
  app.require_subcommand(1);

  // plan-global
  auto* pg = app.add_subcommand("plan-global", "A* waypoint planning on the (x, y, phi) lattice");
  std::string pg_map, pg_out = "waypoints.json";
  double pg_margin = 0.05;
  std::vector<double> pg_start{0, 0, 0, 0, 1.3}, pg_goal{2, 0, 0, 0, 1.0};
  std::vector<double> pg_lattice{0.5, 0.25, M_PI / 8.0}, pg_bounds{-10, -10, 10, 10};
  std::vector<double> pg_leash{1.3, 12.0, 0.15, 0.15}, pg_alpha{0.8, 0.8, 0.6, 0.8};
  bool pg_admissible = false;
  pg->add_option("--map", pg_map, "obstacle file (JSON circles or occupancy grid)");
  pg->add_option("--margin", pg_margin, "safety margin d [m]");
  pg->add_option("--start", pg_start, "x y theta phi l")->expected(5);
  pg->add_option("--goal", pg_goal, "x y phi theta lambda")->expected(5);
  pg->add_option("--lattice", pg_lattice, "dx dy dphi")->expected(3);
  pg->add_option("--bounds", pg_bounds, "xmin ymin xmax ymax")->expected(4);
  pg->add_option("--leash", pg_leash, "l0 f_bar robot_radius human_radius")->expected(4);
  pg->add_option("--alpha", pg_alpha, "discount coefficients")->expected(4);
  pg->add_flag("--admissible", pg_admissible, "zero the heuristic (Dijkstra mode)");
  pg->add_option("--out", pg_out, "output waypoint JSON");

  // plan-local
  auto* pl = app.add_subcommand("plan-local", "single local trajectory optimization");
  std::string pl_problem, pl_out = "solution.json";
  pl->add_option("--problem", pl_problem, "problem JSON")->required();
  pl->add_option("--out", pl_out, "output solution JSON");

  // simulate
  auto* sim = app.add_subcommand("simulate", "closed-loop guiding simulation");
  std::string sim_scenario, sim_log = "simlog.csv", sim_metrics = "metrics.json";
  bool sim_schema = false;
  sim->add_option("--scenario", sim_scenario, "scenario JSON");
  sim->add_option("--log", sim_log, "output log CSV");
  sim->add_option("--metrics", sim_metrics, "output metrics JSON");
  sim->add_flag("--print-schema", sim_schema, "print the scenario schema and exit");

  // sysid
  auto* sy = app.add_subcommand("sysid", "identify discount coefficients from trajectory logs");
  std::vector<std::string> sy_logs;
  std::string sy_dir, sy_out = "identification.json";
  double sy_step = 0.05;
  bool sy_refine = false, sy_tension = false;
  std::vector<double> sy_leash{1.3, 12.0, 0.15, 0.15};
  sy->add_option("--log", sy_logs, "trajectory log CSV (repeatable)");
  sy->add_option("--dir", sy_dir, "directory of trajectory log CSVs");
  sy->add_option("--grid-step", sy_step, "alpha grid step");
  sy->add_flag("--refine", sy_refine, "coordinate-descent refinement pass");
  sy->add_flag("--tension", sy_tension, "also fit the tension model from the force channel");
  sy->add_option("--leash", sy_leash, "l0 f_bar robot_radius human_radius")->expected(4);
  sy->add_option("--out", sy_out, "output JSON");

  // fit-tension
  auto* ft = app.add_subcommand("fit-tension", "fit the leash tension regression from samples");
  std::string ft_samples, ft_out = "tension.json";
  ft->add_option("--samples", ft_samples, "CSV with header v_proj,force")->required();
  ft->add_option("--out", ft_out, "output model JSON");

  // render
  auto* rd = app.add_subcommand("render", "render a run log or waypoints to SVG");
  std::string rd_simlog, rd_waypoints, rd_map, rd_scenario, rd_out = "render.svg";
  double rd_scale = 80.0;
  rd->add_option("--simlog", rd_simlog, "simulation log CSV");
  rd->add_option("--waypoints", rd_waypoints, "waypoint JSON");
  rd->add_option("--map", rd_map, "obstacle file");
  rd->add_option("--scenario", rd_scenario, "scenario JSON (obstacles)");
  rd->add_option("--scale", rd_scale, "pixels per meter");
  rd->add_option("--out", rd_out, "output SVG");

  // bench
  auto* bn = app.add_subcommand("bench", "run a batch of scenarios");
  std::vector<std::string> bn_scenarios;
  std::string bn_out_dir = "bench_out";
  bn->add_option("scenarios", bn_scenarios, "scenario JSON files");
  bn->add_option("--out-dir", bn_out_dir, "per-scenario output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (pg->parsed()) {
      return cmd_plan_global(pg_map, pg_margin, pg_start, pg_goal, pg_lattice, pg_bounds, pg_leash,
                             pg_alpha, pg_admissible, pg_out);
    }
    if (pl->parsed()) return cmd_plan_local(pl_problem, pl_out);
    if (sim->parsed()) {
      if (sim_schema) {
        std::cout << io::scenario_schema().dump(2) << "\n";
        return kExitOk;
      }
      if (sim_scenario.empty()) throw InvalidInput("simulate: --scenario is required");
      return cmd_simulate(sim_scenario, sim_log, sim_metrics);
    }
    if (sy->parsed()) {
      return cmd_sysid(sy_logs, sy_dir, sy_step, sy_refine, sy_tension, sy_leash, sy_out);
    }
    if (ft->parsed()) return cmd_fit_tension(ft_samples, ft_out);
    if (rd->parsed()) {
      return cmd_render(rd_simlog, rd_waypoints, rd_map, rd_scenario, rd_scale, rd_out);
    }
    if (bn->parsed()) return cmd_bench(bn_scenarios, bn_out_dir);
  } catch (const NoPath& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDomain;
  } catch (const Infeasible& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDomain;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
