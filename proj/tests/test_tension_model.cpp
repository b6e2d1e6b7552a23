#include <doctest.h>

#include <random>

#include "leashnav/tension_model.hpp"

using namespace leashnav;

namespace {
const TensionModel kPaperModel{109.8, 15.85, 15.06};
}

TEST_SUITE("tension") {

TEST_CASE("predict") {
  const Configuration q{0, 0, 0, 0, 1.3};
  CHECK(predict(kPaperModel, q, {{0, 0}, 0.4}) == doctest::Approx(15.85));
  CHECK(predict(kPaperModel, q, {{0.5, 0}, 0}) == doctest::Approx(70.75));
  CHECK(predict(TensionModel{}, q, {{0.7, -0.2}, 0.1}) == doctest::Approx(0.0));
  // phi rotates the projection: perpendicular motion sees only the intercept
  const Configuration q_perp{0, 0, 0, M_PI_2, 1.3};
  CHECK(predict(kPaperModel, q_perp, {{0, -1.0}, 0}) ==
        doctest::Approx(109.8 + 15.85).epsilon(1e-12));
}

TEST_CASE("fit recovers a noise-free line") {
  std::vector<TensionSample> samples;
  for (int i = 0; i <= 20; ++i) {
    const double v = -1.0 + 0.1 * i;
    samples.push_back({v, 109.8 * v + 15.85});
  }
  const TensionModel m = fit(samples);
  CHECK(m.beta1 == doctest::Approx(109.8).epsilon(1e-9));
  CHECK(m.beta2 == doctest::Approx(15.85).epsilon(1e-9));
  CHECK(m.sigma < 1e-9);
}

TEST_CASE("fit rejects degenerate data") {
  CHECK_THROWS_AS(fit(std::vector<TensionSample>{{0.1, 20}, {0.2, 30}}), DegenerateData);
  std::vector<TensionSample> flat(10, TensionSample{0.3, 40.0});
  CHECK_THROWS_AS(fit(flat), DegenerateData);
}

TEST_CASE("fit recovers sigma from noisy samples") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(0.0, 15.06);
  std::uniform_real_distribution<double> vel(-1.0, 1.0);
  std::vector<TensionSample> samples;
  for (int i = 0; i < 500; ++i) {
    const double v = vel(rng);
    samples.push_back({v, 109.8 * v + 15.85 + noise(rng)});
  }
  const TensionModel m = fit(samples);
  CHECK(std::abs(m.sigma - 15.06) / 15.06 < 0.10);
  CHECK(std::abs(m.beta1 - 109.8) / 109.8 < 0.05);
}

TEST_CASE("fit is shift/scale consistent") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> vel(-1.0, 1.0);
  std::normal_distribution<double> noise(0.0, 2.0);
  std::vector<TensionSample> samples;
  for (int i = 0; i < 200; ++i) {
    const double v = vel(rng);
    samples.push_back({v, 50.0 * v + 8.0 + noise(rng)});
  }
  const TensionModel base = fit(samples);
  const double a = 2.5, b = -0.7;
  std::vector<TensionSample> scaled = samples;
  for (auto& s : scaled) s.v_proj = a * s.v_proj + b;
  const TensionModel m = fit(scaled);
  CHECK(m.beta1 == doctest::Approx(base.beta1 / a).epsilon(1e-9));
  CHECK(m.beta2 == doctest::Approx(base.beta2 - base.beta1 * b / a).epsilon(1e-9));
}

TEST_CASE("force bounds") {
  const Configuration q{0, 0, 0, 0, 1.3};
  TensionModel zero_sigma = kPaperModel;
  zero_sigma.sigma = 0.0;
  const auto [l0, u0] = force_bounds(zero_sigma, q, {{0.2, 0}, 0});
  CHECK(l0 == doctest::Approx(u0));

  const auto [lo, hi] = force_bounds(kPaperModel, q, {{0, 0}, 0});
  CHECK(lo == doctest::Approx(0.79).epsilon(1e-9));
  CHECK(hi == doctest::Approx(30.91).epsilon(1e-9));

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> vel(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const ControlInput u{{vel(rng), vel(rng)}, 0};
    const auto [a, b] = force_bounds(kPaperModel, q, u);
    CHECK(a <= b);
    CHECK(b - a == doctest::Approx(2.0 * kPaperModel.sigma));
  }
}

TEST_CASE("coverage") {
  std::vector<TensionSample> on_line;
  for (int i = 0; i < 10; ++i) on_line.push_back({0.1 * i, 109.8 * 0.1 * i + 15.85});
  CHECK(coverage(on_line, kPaperModel) == doctest::Approx(1.0));

  std::vector<TensionSample> two_sigma{{0.0, 15.85 + 2.0 * 15.06}};
  CHECK(coverage(two_sigma, kPaperModel) == doctest::Approx(0.0));

  CHECK_THROWS_AS(coverage(std::vector<TensionSample>{}, kPaperModel), EmptyData);

  // Gaussian residuals cover about one sigma's worth of mass
  std::mt19937_64 rng(31);
  std::normal_distribution<double> noise(0.0, 15.06);
  std::uniform_real_distribution<double> vel(-1.0, 1.0);
  std::vector<TensionSample> samples;
  for (int i = 0; i < 4000; ++i) {
    const double v = vel(rng);
    samples.push_back({v, 109.8 * v + 15.85 + noise(rng)});
  }
  const TensionModel m = fit(samples);
  CHECK(std::abs(coverage(samples, m) - 0.683) < 0.05);
}

}  // TEST_SUITE
