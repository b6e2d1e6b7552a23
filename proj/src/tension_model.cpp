#include "leashnav/tension_model.hpp"

#include <cmath>

namespace leashnav {

double predict_from_projection(const TensionModel& model, double v_proj) {
  return model.beta1 * v_proj + model.beta2;
}

double predict(const TensionModel& model, const Configuration& q, const ControlInput& u) {
  const double v_proj = dot(u.v_body, leash_direction_body(q.phi));
  return predict_from_projection(model, v_proj);
}

TensionModel fit(std::span<const TensionSample> samples) {
  const std::size_t n = samples.size();
  if (n < 3) {
    throw DegenerateData("tension fit needs at least 3 samples");
  }
  double mean_v = 0.0;
  double mean_f = 0.0;
  for (const auto& s : samples) {
    mean_v += s.v_proj;
    mean_f += s.force;
  }
  mean_v /= static_cast<double>(n);
  mean_f /= static_cast<double>(n);

  double svv = 0.0;
  double svf = 0.0;
  for (const auto& s : samples) {
    const double dv = s.v_proj - mean_v;
    svv += dv * dv;
    svf += dv * (s.force - mean_f);
  }
  if (svv / static_cast<double>(n) <= 1e-12) {
    throw DegenerateData("tension fit: projected-velocity spread is degenerate");
  }

  TensionModel model;
  model.beta1 = svf / svv;
  model.beta2 = mean_f - model.beta1 * mean_v;

  double sse = 0.0;
  for (const auto& s : samples) {
    const double r = s.force - predict_from_projection(model, s.v_proj);
    sse += r * r;
  }
  model.sigma = std::sqrt(sse / static_cast<double>(n - 2));
  return model;
}

std::pair<double, double> force_bounds(const TensionModel& model, const Configuration& q,
                                       const ControlInput& u) {
  const double f = predict(model, q, u);
  return {f - model.sigma, f + model.sigma};
}

double coverage(std::span<const TensionSample> samples, const TensionModel& model) {
  if (samples.empty()) {
    throw EmptyData("coverage: no samples");
  }
  std::size_t inside = 0;
  for (const auto& s : samples) {
    const double r = std::abs(s.force - predict_from_projection(model, s.v_proj));
    if (r <= model.sigma) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(samples.size());
}

}  // namespace leashnav
