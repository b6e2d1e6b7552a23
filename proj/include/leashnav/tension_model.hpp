#pragma once

#include <span>
#include <utility>
#include <vector>

#include "leashnav/geometry.hpp"

namespace leashnav {

// Affine map from the robot speed projected on the leash direction to the
// leash tension: F = beta1 * (v_body . e_l) + beta2, with sigma the residual
// standard deviation of the fit.
struct TensionModel {
  double beta1 = 0.0;  // [N s / m]
  double beta2 = 0.0;  // [N]
  double sigma = 0.0;  // [N], >= 0
};

struct TensionSample {
  double v_proj = 0.0;  // v_body . e_l [m/s]
  double force = 0.0;   // measured tension [N]
};

// Predicted tension for a configuration/command pair. A zero-speed command
// projects to zero and yields beta2.
double predict(const TensionModel& model, const Configuration& q, const ControlInput& u);

double predict_from_projection(const TensionModel& model, double v_proj);

// Closed-form least squares for (beta1, beta2); sigma uses the n-2 divisor.
// Throws DegenerateData for fewer than 3 samples or v_proj variance <= 1e-12.
TensionModel fit(std::span<const TensionSample> samples);

// Two-sided band (predict - sigma, predict + sigma).
std::pair<double, double> force_bounds(const TensionModel& model, const Configuration& q,
                                       const ControlInput& u);

// Fraction of samples whose residual magnitude is within sigma.
double coverage(std::span<const TensionSample> samples, const TensionModel& model);

}  // namespace leashnav
