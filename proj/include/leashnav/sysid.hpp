#pragma once

#include <span>
#include <vector>

#include "leashnav/hybrid_dynamics.hpp"
#include "leashnav/tension_model.hpp"

namespace leashnav {

// One recorded guiding trail: ground-truth robot/human positions, the
// commanded inputs, and the reconstructed initial configuration. All
// sequences share the same length (>= 2) and timestamps strictly increase.
// `force` is the optional tension channel (empty when absent).
struct TrajectoryLog {
  std::vector<double> timestamps;
  std::vector<Vec2> robot_gt;
  std::vector<Vec2> human_gt;
  std::vector<ControlInput> inputs;
  std::vector<double> force;
  Configuration initial_config;
};

struct IdentificationResult {
  DiscountCoefficients alpha;
  double robot_rmse = 0.0;
  double human_rmse = 0.0;
};

void validate_log(const TrajectoryLog& log);

// Taut-mode prediction (PaperFaithful) from the initial configuration under
// the logged inputs at the logged timestamps. Entry i corresponds to
// timestamps[i]; entry 0 is the initial configuration.
std::vector<Configuration> predict_trajectory(const TrajectoryLog& log,
                                              const DiscountCoefficients& alpha,
                                              const LeashParams& params);

// Mean squared prediction error (robot and human positions pooled) of the
// taut model under `alpha` across the logs. This is the grid-search
// objective.
double alpha_objective(std::span<const TrajectoryLog> logs, const DiscountCoefficients& alpha,
                       const LeashParams& params);

// Exhaustive grid search over [0,1]^4 at `grid_step`, deterministic with
// ties broken toward the lexicographically smallest alpha. When `refine` is
// set, a single coordinate-descent pass at grid_step/5 follows.
IdentificationResult identify_alpha(std::span<const TrajectoryLog> logs, double grid_step,
                                    const LeashParams& params, bool refine = false);

// Builds tension samples from logs carrying the force channel and delegates
// to the tension-model fit. The per-sample leash bearing is recovered from
// the ground-truth positions with the yaw-command integration convention of
// the log format (see the file-format notes in the README).
TensionModel fit_tension_from_logs(std::span<const TrajectoryLog> logs);

std::vector<TensionSample> tension_samples_from_log(const TrajectoryLog& log);

}  // namespace leashnav
