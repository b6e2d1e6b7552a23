#include <doctest.h>

#include <random>

#include "leashnav/hybrid_dynamics.hpp"

using namespace leashnav;

namespace {
const LeashParams kParams{1.3, 12.0, 0.15, 0.15};
const TensionModel kModel{109.8, 15.85, 15.06};
const DiscountCoefficients kPaperAlpha{0.8, 0.8, 0.6, 0.8};
const DiscountCoefficients kUnitAlpha{1, 1, 1, 1};

Configuration taut_config(double theta = 0.0, double phi = 0.0) {
  return {0.0, 0.0, theta, phi, kParams.l0};
}
}  // namespace

TEST_SUITE("hybrid") {

TEST_CASE("taut derivative") {
  for (DynamicsVariant v : {DynamicsVariant::PaperFaithful, DynamicsVariant::GeometricConsistent}) {
    const ConfigurationRate rest = taut_derivative(taut_config(), {}, kUnitAlpha, kParams, v);
    CHECK(rest.dx == 0.0);
    CHECK(rest.dy == 0.0);
    CHECK(rest.dtheta == 0.0);
    CHECK(rest.dphi == 0.0);
    CHECK(rest.dl == 0.0);
  }
  const ConfigurationRate r1 = taut_derivative(taut_config(), {{0.5, 0}, 0}, kUnitAlpha, kParams,
                                               DynamicsVariant::PaperFaithful);
  CHECK(r1.dx == doctest::Approx(0.5));
  CHECK(r1.dy == doctest::Approx(0.0));
  const ConfigurationRate r2 = taut_derivative(taut_config(), {{0.5, 0}, 0}, kPaperAlpha, kParams,
                                               DynamicsVariant::PaperFaithful);
  CHECK(r2.dx == doctest::Approx(0.4));
  CHECK(r2.dl == 0.0);
}

TEST_CASE("slack derivative along and across the leash") {
  Configuration q = taut_config();
  q.l = 1.0;
  for (DynamicsVariant v : {DynamicsVariant::PaperFaithful, DynamicsVariant::GeometricConsistent}) {
    const ConfigurationRate rest = slack_derivative(q, {}, kParams, v);
    CHECK(rest.dx == 0.0);
    CHECK(rest.dl == 0.0);

    // receding straight along e_l: l grows at the commanded speed, no swing
    const ConfigurationRate recede = slack_derivative(q, {{0.3, 0}, 0}, kParams, v);
    CHECK(recede.dl == doctest::Approx(0.3));
    CHECK(recede.dphi == doctest::Approx(0.0));

    // perpendicular motion: the distance rate vanishes
    const ConfigurationRate perp = slack_derivative(q, {{0.0, 0.4}, 0}, kParams, v);
    CHECK(perp.dl == doctest::Approx(0.0));
  }
}

TEST_CASE("geometric-consistent slack motion keeps the human fixed") {
  // fine-step oracle: 1 s of perpendicular motion at dt = 1e-4
  HybridState s{taut_config(), Mode::Slack};
  s.q.l = 1.0;
  const Vec2 human0 = human_position(s.q);
  const ControlInput u{{0.0, 0.35}, 0.2};
  for (int i = 0; i < 10000; ++i) {
    s = step(s, u, 1e-4, kUnitAlpha, kParams, kModel, DynamicsVariant::GeometricConsistent);
    REQUIRE(s.mode == Mode::Slack);
  }
  CHECK((human_position(s.q) - human0).norm() < 1e-6);
}

TEST_CASE("geometric-consistent taut motion pulls the human along the leash") {
  HybridState s{taut_config(), Mode::Taut};
  const ControlInput u{{0.4, 0.1}, 0.3};
  Vec2 prev = human_position(s.q);
  for (int i = 0; i < 2000; ++i) {
    s = step(s, u, 1e-3, kUnitAlpha, kParams, kModel, DynamicsVariant::GeometricConsistent);
    REQUIRE(s.mode == Mode::Taut);
    const Vec2 cur = human_position(s.q);
    const Vec2 vel = (cur - prev) * 1e3;
    if (vel.norm() > 1e-3) {
      const Vec2 e_l = leash_direction_world(s.q);
      const double angle = std::abs(std::asin(std::clamp(cross(e_l, vel) / vel.norm(), -1.0, 1.0)));
      CHECK(angle < 1e-4);
    }
    prev = cur;
  }
}

TEST_CASE("guards") {
  const Configuration q = taut_config();
  const ControlInput forward{{1.0, 0}, 0};   // along e_l
  const ControlInput backward{{-0.1, 0}, 0};
  CHECK(guard_to_taut(q, forward, 20.0, kParams));
  CHECK_FALSE(guard_to_taut(q, backward, 20.0, kParams));
  CHECK_FALSE(guard_to_taut(q, forward, 0.0, kParams));
  CHECK_FALSE(guard_to_taut(q, {{0, 0}, 0.5}, 20.0, kParams));

  CHECK(guard_to_slack(q, {{-1.0, 0}, 0}, 50.0, kParams));
  CHECK(guard_to_slack(q, forward, 5.0, kParams));
  CHECK_FALSE(guard_to_slack(q, forward, 50.0, kParams));
  CHECK(guard_to_slack(q, {{0, 0}, 0}, 50.0, kParams));
}

TEST_CASE("guard exclusivity") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> angle(-3.0, 3.0);
  std::uniform_real_distribution<double> vel(-1.0, 1.0);
  std::uniform_real_distribution<double> force(0.0, 60.0);
  for (int i = 0; i < 3000; ++i) {
    const Configuration q{0, 0, angle(rng), angle(rng), 1.0};
    const ControlInput u{{vel(rng), vel(rng)}, vel(rng)};
    const double f = force(rng);
    const bool taut = guard_to_taut(q, u, f, kParams);
    const bool strictly_slack =
        u.speed() > kZeroSpeedEps &&
        (dot(u.v_body, leash_direction_body(q.phi)) < 0.0 || f < kParams.f_bar);
    CHECK_FALSE((taut && strictly_slack));
  }
  // on the shared boundary both guards hold
  CHECK(guard_to_taut(taut_config(), {{1, 0}, 0}, kParams.f_bar, kParams));
  CHECK(guard_to_slack(taut_config(), {{1, 0}, 0}, kParams.f_bar, kParams));
}

TEST_CASE("reset map") {
  Configuration q = taut_config();
  q.l = kParams.l0 - 1e-8;
  const Configuration r = reset_slack_to_taut(q, kParams);
  CHECK(r.l == kParams.l0);
  CHECK(r.x == q.x);
  CHECK(r.theta == q.theta);

  CHECK(reset_slack_to_taut(taut_config(), kParams).l == kParams.l0);

  q.l = 0.5 * kParams.l0;
  CHECK_THROWS_AS(reset_slack_to_taut(q, kParams), GuardViolation);
}

TEST_CASE("step validates dt and keeps equilibrium") {
  const HybridState s{taut_config(), Mode::Taut};
  CHECK_THROWS_AS(step(s, {}, 0.0, kPaperAlpha, kParams, kModel, DynamicsVariant::PaperFaithful),
                  InvalidInput);
  CHECK_THROWS_AS(step(s, {}, 0.2, kPaperAlpha, kParams, kModel, DynamicsVariant::PaperFaithful),
                  InvalidInput);
  const HybridState next =
      step(s, {}, 0.01, kPaperAlpha, kParams, kModel, DynamicsVariant::PaperFaithful);
  CHECK(next.mode == Mode::Taut);
  CHECK(next.q.x == s.q.x);
  CHECK(next.q.l == kParams.l0);
}

TEST_CASE("slack to taut event") {
  HybridState s{taut_config(), Mode::Slack};
  s.q.l = kParams.l0 - 0.01;
  const ControlInput recede{{0.3, 0}, 0};
  int steps = 0;
  while (s.mode == Mode::Slack && steps < 10) {
    s = step(s, recede, 0.01, kPaperAlpha, kParams, kModel, DynamicsVariant::PaperFaithful);
    ++steps;
  }
  CHECK(s.mode == Mode::Taut);
  CHECK(s.q.l == kParams.l0);
  CHECK(steps <= 4);  // closed-form event time 0.0333 s
}

TEST_CASE("taut toward human goes slack") {
  const HybridState s{taut_config(), Mode::Taut};
  const HybridState next = step(s, {{-0.3, 0}, 0}, 0.01, kPaperAlpha, kParams, kModel,
                                DynamicsVariant::PaperFaithful);
  CHECK(next.mode == Mode::Slack);
  CHECK(next.q.l < kParams.l0);
}

TEST_CASE("rollout shapes and invariants") {
  std::vector<ControlInput> zeros(10);
  const auto states = rollout(taut_config(), Mode::Taut, zeros, 0.01, kPaperAlpha, kParams, kModel,
                              DynamicsVariant::PaperFaithful);
  REQUIRE(states.size() == 11);
  for (const auto& s : states) {
    CHECK(s.q.x == 0.0);
    CHECK(s.mode == Mode::Taut);
  }
  CHECK_THROWS_AS(rollout(taut_config(), Mode::Taut, std::vector<ControlInput>{}, 0.01,
                          kPaperAlpha, kParams, kModel, DynamicsVariant::PaperFaithful),
                  EmptyData);

  Configuration q0 = taut_config();
  q0.l = 0.4;
  std::vector<ControlInput> recede(200, ControlInput{{0.35, 0}, 0});
  const auto slackr = rollout(q0, Mode::Slack, recede, 0.02, kPaperAlpha, kParams, kModel,
                              DynamicsVariant::GeometricConsistent);
  double last = q0.l;
  for (const auto& s : slackr) {
    CHECK(s.q.l >= last - 1e-12);
    CHECK(s.q.l <= kParams.l0 + 1e-9);
    last = s.q.l;
  }
  CHECK(slackr.back().q.l == kParams.l0);

  // taut straight line displacement: alpha_x * v * T
  std::vector<ControlInput> straight(100, ControlInput{{0.5, 0}, 0});
  const auto tautr = rollout(taut_config(), Mode::Taut, straight, 0.01, kPaperAlpha, kParams,
                             kModel, DynamicsVariant::PaperFaithful);
  CHECK(tautr.back().q.x == doctest::Approx(0.8 * 0.5 * 1.0).epsilon(1e-9));
}

TEST_CASE("rk4 step matches fine substeps") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> angle(-1.0, 1.0);
  std::uniform_real_distribution<double> vel(0.1, 0.6);
  for (int trial = 0; trial < 20; ++trial) {
    Configuration q{0, 0, angle(rng), 0.3 + 0.2 * angle(rng), 1.0};
    const ControlInput u{{vel(rng), 0.2 * vel(rng)}, angle(rng)};
    for (DynamicsVariant v :
         {DynamicsVariant::PaperFaithful, DynamicsVariant::GeometricConsistent}) {
      HybridState coarse{q, Mode::Slack};
      coarse = step(coarse, u, 0.01, kPaperAlpha, kParams, kModel, v);
      HybridState fine{q, Mode::Slack};
      for (int i = 0; i < 100; ++i) {
        fine = step(fine, u, 1e-4, kPaperAlpha, kParams, kModel, v);
      }
      CHECK(std::abs(coarse.q.x - fine.q.x) < 1e-7);
      CHECK(std::abs(coarse.q.y - fine.q.y) < 1e-7);
      CHECK(std::abs(coarse.q.theta - fine.q.theta) < 1e-7);
      CHECK(std::abs(coarse.q.phi - fine.q.phi) < 1e-7);
      CHECK(std::abs(coarse.q.l - fine.q.l) < 1e-7);
    }
  }
}

}  // TEST_SUITE
