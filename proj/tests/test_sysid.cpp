#include <doctest.h>

#include <random>

#include "leashnav/sysid.hpp"
#include "test_util.hpp"

using namespace leashnav;
using namespace leashnav::testutil;

namespace {
const LeashParams kParams{1.3, 12.0, 0.15, 0.15};
const DiscountCoefficients kPaperAlpha{0.8, 0.8, 0.6, 0.8};
}  // namespace

TEST_SUITE("sysid") {

TEST_CASE("predict_trajectory basics") {
  TrajectoryLog log;
  for (int i = 0; i < 50; ++i) log.timestamps.push_back(0.02 * i);
  log.inputs.assign(50, ControlInput{});
  log.robot_gt.assign(50, Vec2{});
  log.human_gt.assign(50, Vec2{});
  log.initial_config = {1.0, -2.0, 0.3, 0.1, kParams.l0};
  const auto constant = predict_trajectory(log, kPaperAlpha, kParams);
  REQUIRE(constant.size() == 50);
  CHECK(constant.back().x == 1.0);
  CHECK(constant.back().phi == 0.1);

  // undiscounted straight line: displacement equals the command integral
  for (auto& u : log.inputs) u = ControlInput{{0.5, 0}, 0};
  log.initial_config = {0, 0, 0, 0, kParams.l0};
  const auto straight = predict_trajectory(log, {1, 1, 1, 1}, kParams);
  CHECK(straight.back().x == doctest::Approx(0.5 * 0.02 * 49).epsilon(1e-12));
  CHECK(straight.back().y == doctest::Approx(0.0));
}

TEST_CASE("self consistency against the generator") {
  const TrajectoryLog log = make_taut_log(kPaperAlpha, kParams, 300, 0.02, 91);
  const auto pred = predict_trajectory(log, kPaperAlpha, kParams);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    CHECK((Vec2{pred[i].x, pred[i].y} - log.robot_gt[i]).norm() < 1e-6);
    CHECK((human_position(pred[i]) - log.human_gt[i]).norm() < 1e-6);
  }
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(identify_alpha(std::vector<TrajectoryLog>{}, 0.05, kParams), EmptyData);
  const TrajectoryLog log = make_taut_log(kPaperAlpha, kParams, 50, 0.02, 3);
  std::vector<TrajectoryLog> logs{log};
  CHECK_THROWS_AS(identify_alpha(logs, 0.6, kParams), InvalidInput);
  CHECK_THROWS_AS(identify_alpha(logs, 0.0, kParams), InvalidInput);

  TrajectoryLog bad = log;
  bad.timestamps[5] = bad.timestamps[4];
  CHECK_THROWS_AS(validate_log(bad), InvalidInput);
}

TEST_CASE("grid search matches a brute-force oracle on a coarse grid") {
  std::vector<TrajectoryLog> logs{make_taut_log({0.5, 1.0, 0.5, 0.5}, kParams, 120, 0.02, 17)};
  const IdentificationResult r = identify_alpha(logs, 0.5, kParams);

  double best = std::numeric_limits<double>::infinity();
  DiscountCoefficients best_alpha;
  for (int a = 0; a <= 2; ++a)
    for (int b = 0; b <= 2; ++b)
      for (int c = 0; c <= 2; ++c)
        for (int d = 0; d <= 2; ++d) {
          const DiscountCoefficients alpha{0.5 * a, 0.5 * b, 0.5 * c, 0.5 * d};
          const double obj = alpha_objective(logs, alpha, kParams);
          if (obj < best) {
            best = obj;
            best_alpha = alpha;
          }
        }
  CHECK(r.alpha.x == doctest::Approx(best_alpha.x));
  CHECK(r.alpha.y == doctest::Approx(best_alpha.y));
  CHECK(r.alpha.theta == doctest::Approx(best_alpha.theta));
  CHECK(r.alpha.phi == doctest::Approx(best_alpha.phi));
}

TEST_CASE("noise-free recovery on the identification grid") {
  std::vector<TrajectoryLog> logs{make_taut_log({0.8, 0.8, 0.6, 0.8}, kParams, 200, 0.02, 5),
                                  make_taut_log({0.8, 0.8, 0.6, 0.8}, kParams, 200, 0.02, 6)};
  const IdentificationResult r = identify_alpha(logs, 0.2, kParams);
  CHECK(r.alpha.x == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(r.alpha.y == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(r.alpha.theta == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(r.alpha.phi == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(r.robot_rmse < 1e-9);
  CHECK(r.human_rmse < 1e-9);
}

TEST_CASE("boundary recovery") {
  std::vector<TrajectoryLog> logs{make_taut_log({1, 1, 1, 1}, kParams, 150, 0.02, 8)};
  const IdentificationResult r = identify_alpha(logs, 0.25, kParams);
  CHECK(r.alpha.x == doctest::Approx(1.0));
  CHECK(r.alpha.y == doctest::Approx(1.0));
  CHECK(r.alpha.theta == doctest::Approx(1.0));
  CHECK(r.alpha.phi == doctest::Approx(1.0));
}

TEST_CASE("aggregation sanity on log unions") {
  std::vector<TrajectoryLog> log_a{make_taut_log(kPaperAlpha, kParams, 120, 0.02, 21)};
  std::vector<TrajectoryLog> log_b{make_taut_log(kPaperAlpha, kParams, 120, 0.02, 22)};
  std::vector<TrajectoryLog> both{log_a[0], log_b[0]};
  const auto ra = identify_alpha(log_a, 0.25, kParams);
  const auto rb = identify_alpha(log_b, 0.25, kParams);
  const auto ru = identify_alpha(both, 0.25, kParams);
  const double obj_union = alpha_objective(both, ru.alpha, kParams);
  CHECK(obj_union <= alpha_objective(both, ra.alpha, kParams) + 1e-12);
  CHECK(obj_union <= alpha_objective(both, rb.alpha, kParams) + 1e-12);
}

TEST_CASE("determinism") {
  std::vector<TrajectoryLog> logs{make_taut_log(kPaperAlpha, kParams, 100, 0.02, 33, 0.01)};
  const auto r1 = identify_alpha(logs, 0.25, kParams);
  const auto r2 = identify_alpha(logs, 0.25, kParams);
  CHECK(r1.alpha.x == r2.alpha.x);
  CHECK(r1.alpha.y == r2.alpha.y);
  CHECK(r1.alpha.theta == r2.alpha.theta);
  CHECK(r1.alpha.phi == r2.alpha.phi);
  CHECK(r1.robot_rmse == r2.robot_rmse);
}

TEST_CASE("refinement improves a perturbed generator value") {
  // generator off-grid: the coordinate pass should move toward it
  std::vector<TrajectoryLog> logs{make_taut_log({0.82, 0.76, 0.58, 0.8}, kParams, 150, 0.02, 44)};
  const auto coarse = identify_alpha(logs, 0.2, kParams, false);
  const auto refined = identify_alpha(logs, 0.2, kParams, true);
  CHECK(alpha_objective(logs, refined.alpha, kParams) <=
        alpha_objective(logs, coarse.alpha, kParams) + 1e-15);
}

TEST_CASE("tension fit from logs") {
  const TensionModel truth{109.8, 15.85, 0.0};
  std::vector<TrajectoryLog> logs{make_tension_log(truth, 400, 0.02, 70, 2.0)};
  const TensionModel m = fit_tension_from_logs(logs);
  CHECK(std::abs(m.beta1 - truth.beta1) / truth.beta1 < 0.05);
  CHECK(std::abs(m.beta2 - truth.beta2) / truth.beta2 < 0.05);

  TrajectoryLog no_force = logs[0];
  no_force.force.clear();
  CHECK_THROWS_AS(fit_tension_from_logs(std::vector<TrajectoryLog>{no_force}), MissingChannel);

  // constant commands give no projected-velocity spread
  TrajectoryLog flat = logs[0];
  for (auto& u : flat.inputs) u = ControlInput{{0.3, 0}, 0};
  for (std::size_t i = 0; i < flat.force.size(); ++i) flat.force[i] = 40.0;
  for (std::size_t i = 0; i < flat.robot_gt.size(); ++i) {
    flat.robot_gt[i] = {0.3 * flat.timestamps[i], 0.0};
    flat.human_gt[i] = {0.3 * flat.timestamps[i] - 1.2, 0.0};
  }
  CHECK_THROWS_AS(fit_tension_from_logs(std::vector<TrajectoryLog>{flat}), DegenerateData);
}

}  // TEST_SUITE
