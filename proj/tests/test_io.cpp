#include <doctest.h>

#include "leashnav/io.hpp"
#include "leashnav/render.hpp"
#include "test_util.hpp"

using namespace leashnav;
using leashnav::io::json;

TEST_SUITE("io") {

TEST_CASE("format_double round trips") {
  for (double v : {0.0, 0.1, -3.25, 1e-9, 12345.6789, M_PI, -1e17}) {
    const std::string s = io::format_double(v);
    CHECK(io::parse_double(s, "t") == v);
  }
}

TEST_CASE("trajectory log CSV round trip") {
  const TrajectoryLog log =
      testutil::make_taut_log({0.8, 0.8, 0.6, 0.8}, LeashParams{}, 40, 0.02, 3, 0.001);
  const std::string csv = io::trajectory_log_to_csv(log);
  const TrajectoryLog parsed = io::parse_trajectory_log_csv(csv);
  REQUIRE(parsed.timestamps.size() == log.timestamps.size());
  for (std::size_t i = 0; i < parsed.timestamps.size(); ++i) {
    CHECK(parsed.timestamps[i] == log.timestamps[i]);
    CHECK(parsed.robot_gt[i].x == log.robot_gt[i].x);
    CHECK(parsed.human_gt[i].y == log.human_gt[i].y);
    CHECK(parsed.inputs[i].omega == log.inputs[i].omega);
  }
  CHECK(parsed.force.empty());

  const TrajectoryLog with_force =
      testutil::make_tension_log({100.0, 12.0, 0.0}, 30, 0.02, 5, 1.0);
  const TrajectoryLog parsed2 =
      io::parse_trajectory_log_csv(io::trajectory_log_to_csv(with_force));
  REQUIRE(parsed2.force.size() == with_force.force.size());
  CHECK(parsed2.force[7] == with_force.force[7]);

  CHECK_THROWS_AS(io::parse_trajectory_log_csv("nope\n1,2\n"), ParseError);
  CHECK_THROWS_AS(io::parse_trajectory_log_csv(
                      "t,x_gt,y_gt,xh_gt,yh_gt,vbx,vby,omega\n0,1,2,3\n"),
                  ParseError);
}

TEST_CASE("scenario JSON round trip and validation") {
  const std::string text = io::read_file(std::string(LEASHNAV_SOURCE_DIR) + "/scenarios/doorway.json");
  const ScenarioConfig s = io::scenario_from_json(json::parse(text));
  CHECK(s.leash.l0 == 1.3);
  CHECK(s.leash.f_bar == 12.0);
  CHECK(s.tension.beta1 == 109.8);
  CHECK(s.obstacles.circles.size() > 10);

  const json back = io::scenario_to_json(s);
  const ScenarioConfig s2 = io::scenario_from_json(back);
  CHECK(s2.start.x == s.start.x);
  CHECK(s2.goal.y == s.goal.y);
  CHECK(s2.obstacles.circles.size() == s.obstacles.circles.size());
  CHECK(s2.rng_seed == s.rng_seed);
  CHECK(s2.weights.q_target == s.weights.q_target);

  json bad = back;
  bad["unknown_knob"] = 1;
  CHECK_THROWS_WITH_AS(io::scenario_from_json(bad),
                       doctest::Contains("unknown key 'unknown_knob'"), ParseError);
  json bad2 = back;
  bad2["sim"]["replann_period"] = 0.1;
  CHECK_THROWS_WITH_AS(io::scenario_from_json(bad2),
                       doctest::Contains("replann_period"), ParseError);
}

TEST_CASE("waypoints, metrics, solution JSON") {
  std::vector<Configuration> wps{{0, 0, 0, 0, 1.3}, {0.5, 0.25, 0.1, -0.2, 1.3}};
  const auto parsed = io::waypoints_from_json(io::waypoints_to_json(wps));
  REQUIRE(parsed.size() == 2);
  CHECK(parsed[1].phi == wps[1].phi);

  Metrics m;
  m.status = SimStatus::Success;
  m.slack_intervals = {{1.0, 2.5}};
  const json mj = io::metrics_to_json(m);
  CHECK(mj["status"] == "success");
  CHECK(mj["slack_intervals"][0][1] == 2.5);

  CollocationSolution sol;
  sol.states = {{0, 0, 0, 0, 1.3}, {0.1, 0, 0, 0, 1.3}};
  sol.inputs = {{{0.2, 0}, 0.1}};
  sol.forces = {15.0, 16.0};
  sol.modes = {1};
  sol.t_final = 2.0;
  sol.cost = 3.5;
  sol.kkt_residual = 1e-5;
  const CollocationSolution sol2 = io::solution_from_json(io::solution_to_json(sol));
  CHECK(sol2.states[1].x == sol.states[1].x);
  CHECK(sol2.inputs[0].omega == sol.inputs[0].omega);
  CHECK(sol2.forces[1] == sol.forces[1]);
  CHECK(sol2.modes == sol.modes);
  CHECK(sol2.status == SolveStatus::Converged);
}

TEST_CASE("problem JSON round trip") {
  CollocationProblem p;
  p.q_curr = {0, 0, 0, 0, 1.3};
  p.q_target = {1, 0.5, 0.2, 0, 1.3};
  p.obstacles.circles.push_back({{2, 1}, 0.3});
  p.obstacles.safety_margin = 0.05;
  p.squared_force_rate = true;
  const CollocationProblem p2 = io::problem_from_json(io::problem_to_json(p));
  CHECK(p2.q_target.y == p.q_target.y);
  CHECK(p2.obstacles.circles.size() == 1);
  CHECK(p2.squared_force_rate);
  CHECK(p2.bounds.horizon == p.bounds.horizon);
}

TEST_CASE("occupancy grid to circles") {
  const std::string grid =
      "resolution 0.5\n"
      "origin 1.0 2.0\n"
      "#..\n"
      "..#\n";
  const auto circles = io::parse_occupancy_grid(grid);
  REQUIRE(circles.size() == 2);
  // top text row is the northernmost; inscribed radius is half the cell
  CHECK(circles[0].center.x == doctest::Approx(1.25));
  CHECK(circles[0].center.y == doctest::Approx(2.75));
  CHECK(circles[0].radius == doctest::Approx(0.25));
  CHECK(circles[1].center.x == doctest::Approx(2.25));
  CHECK(circles[1].center.y == doctest::Approx(2.25));

  CHECK_THROWS_AS(io::parse_occupancy_grid("#.#\n"), ParseError);     // missing header
  CHECK_THROWS_AS(io::parse_occupancy_grid("resolution 0.5\nx\n"), ParseError);
}

TEST_CASE("scenario grid block merges into the obstacle set") {
  json j = io::scenario_to_json(ScenarioConfig{});
  j["grid"] = json{{"resolution", 0.4},
                   {"origin", json::array({2.0, 1.0})},
                   {"rows", json::array({"#.", ".#"})}};
  const ScenarioConfig s = io::scenario_from_json(j);
  REQUIRE(s.obstacles.circles.size() == 2);
  CHECK(s.obstacles.circles[0].radius == doctest::Approx(0.2));
  CHECK(s.obstacles.circles[0].center.x == doctest::Approx(2.2));
  CHECK(s.obstacles.circles[0].center.y == doctest::Approx(1.6));
}

TEST_CASE("tension samples CSV round trip") {
  std::vector<TensionSample> samples{{0.1, 25.0}, {-0.4, 2.5}};
  const auto parsed = io::parse_tension_samples_csv(io::tension_samples_to_csv(samples));
  REQUIRE(parsed.size() == 2);
  CHECK(parsed[1].v_proj == -0.4);
  CHECK(parsed[1].force == 2.5);
}

TEST_CASE("simlog CSV round trip") {
  SimLog log;
  SimRow r;
  r.t = 0.25;
  r.q = {1, 2, 0.3, -0.1, 1.29};
  r.mode = 1;
  r.human = {0.1, 0.2};
  r.human_est = {0.11, 0.19};
  r.u = {{0.4, -0.1}, 0.2};
  r.f_pred = 30.0;
  r.f_meas = 29.5;
  r.waypoint_idx = 3;
  log.rows.push_back(r);
  const SimLog parsed = io::parse_simlog_csv(io::simlog_to_csv(log));
  REQUIRE(parsed.rows.size() == 1);
  CHECK(parsed.rows[0].q.l == r.q.l);
  CHECK(parsed.rows[0].waypoint_idx == 3);
  CHECK(parsed.rows[0].f_meas == r.f_meas);
}

TEST_CASE("render produces deterministic well-formed SVG") {
  ObstacleSet obstacles;
  obstacles.circles.push_back({{1, 1}, 0.3});
  SimLog log;
  for (int i = 0; i < 20; ++i) {
    SimRow r;
    r.t = 0.1 * i;
    r.q = {0.1 * i, 0.05 * i, 0, 0, 1.3};
    r.human = {0.1 * i - 1.3, 0.05 * i};
    r.mode = i < 10 ? 1 : 0;
    log.rows.push_back(r);
  }
  std::vector<Configuration> wps{{0, 0, 0, 0, 1.3}, {1, 0.5, 0, 0, 1.3}};
  const std::string svg = render_svg(obstacles, &log, wps, RenderSpec{});
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("stroke-dasharray") != std::string::npos);      // slack styling
  CHECK(svg.find("#ff7f0e") != std::string::npos);               // human path
  CHECK(render_svg(obstacles, &log, wps, RenderSpec{}) == svg);  // deterministic

  const std::string empty_path = render_svg(obstacles, nullptr, {}, RenderSpec{});
  CHECK(empty_path.find("circle") != std::string::npos);
  CHECK(empty_path.find("polyline") == std::string::npos);
}

}  // TEST_SUITE
