#pragma once

#include <Eigen/Core>
#include <array>
#include <vector>

#include "leashnav/global_planner.hpp"
#include "leashnav/hybrid_dynamics.hpp"
#include "leashnav/tension_model.hpp"

namespace leashnav {

struct PlannerWeights {
  std::array<double, 5> q_target{10.0, 10.0, 1.0, 1.0, 1.0};
  std::array<double, 3> q_input{1.0, 1.0, 0.1};
  double s_t = 0.1;    // terminal time weight
  double s_f = 0.01;   // stage tension weight
  double s_l = 0.5;    // stage slackness weight on (l0 - l_k)
  double s_df = 0.01;  // tension-rate weight
};

struct PlannerBounds {
  std::array<double, 5> q_lower{-50.0, -50.0, -12.6, -12.6, 0.05};
  std::array<double, 5> q_upper{50.0, 50.0, 12.6, 12.6, 10.0};  // l capped at l0 when solving
  std::array<double, 3> u_lower{-0.8, -0.4, -1.2};
  std::array<double, 3> u_upper{0.8, 0.4, 1.2};
  double t_min = 1.0;
  double t_max = 6.0;
  int horizon = 10;
};

enum class SolveStatus { Converged, MaxIterations };

// Knot-point trajectory with per-step binary modes (1 taut / 0 slack) and a
// free final time; dt = t_final / modes.size().
struct CollocationSolution {
  std::vector<Configuration> states;  // N + 1
  std::vector<ControlInput> inputs;   // N
  std::vector<double> forces;         // N + 1
  std::vector<int> modes;             // N
  double t_final = 0.0;
  double cost = 0.0;
  double kkt_residual = 0.0;
  SolveStatus status = SolveStatus::Converged;
};

struct CollocationProblem {
  Configuration q_curr;
  Configuration q_target;
  ObstacleSet obstacles;
  PlannerWeights weights;
  PlannerBounds bounds;
  TensionModel tension;
  DiscountCoefficients alpha{0.8, 0.8, 0.6, 0.8};
  LeashParams leash;
  bool squared_force_rate = false;  // square the tension-rate stage term
  // Prediction model. The verbatim equations couple the yaw command into the
  // human bearing with the opposite sign of the leash geometry, which turns
  // closed-loop heading regulation unstable; a closed-loop caller can select
  // the sign-consistent variant instead.
  DynamicsVariant variant = DynamicsVariant::PaperFaithful;
};

// Residual tolerances any returned solution satisfies.
inline constexpr double kDynamicsTol = 1e-4;
inline constexpr double kBoxTol = 1e-6;
inline constexpr double kClearanceTol = 1e-4;
inline constexpr double kForceTol = 1e-3;
inline constexpr double kKktTol = 1e-4;

double evaluate_cost(const CollocationSolution& sol, const PlannerWeights& weights,
                     const Configuration& q_target, const LeashParams& leash,
                     bool squared_force_rate = false);

// Forward-Euler step of the hybrid dynamics; a taut step pins l to l0 and a
// slack step clamps l from above.
Configuration discrete_step(const Configuration& q, const ControlInput& u, int mode, double dt,
                            const DiscountCoefficients& alpha, const LeashParams& leash,
                            DynamicsVariant variant = DynamicsVariant::PaperFaithful);

// 1 iff e_l . e_B >= 0 and F >= f_bar (zero-speed commands give 0).
int mode_from_guards(const Configuration& q, const ControlInput& u, double force,
                     const LeashParams& leash);

struct ResidualReport {
  double initial = 0.0;    // |q_0 - q_curr|_inf
  double dynamics = 0.0;   // max defect magnitude
  double state_box = 0.0;  // max box violation
  double input_box = 0.0;
  double time_box = 0.0;
  double force = 0.0;      // max force-band / slack-range violation
  double clearance = 0.0;  // max penetration depth
  std::vector<double> stacked;

  double max_violation() const;
  bool feasible() const;
};

ResidualReport constraint_residuals(const CollocationSolution& sol,
                                    const CollocationProblem& problem);

// Open-loop re-simulation of the solution inputs through the discrete hybrid
// model, modes recomputed from the guards using the solution forces.
std::vector<Configuration> resimulate_inputs(const CollocationProblem& problem,
                                             const CollocationSolution& sol);

// Smooth NLP obtained by fixing the mode sequence, with augmented-Lagrangian
// multiplier state. Box bounds (state/input/time plus slack-mode force
// ranges) are handled by projection; everything else lives in the penalized
// constraint vectors.
class FixedModeNlp {
 public:
  FixedModeNlp(const CollocationProblem& problem, std::vector<int> modes);

  int num_variables() const { return n_vars_; }
  int num_equalities() const { return n_eq_; }
  int num_inequalities() const { return n_ineq_; }
  const std::vector<int>& modes() const { return modes_; }
  const CollocationProblem& problem() const { return *problem_; }
  const Eigen::VectorXd& lower() const { return lower_; }
  const Eigen::VectorXd& upper() const { return upper_; }
  // Diagonal preconditioner: force variables carry the tension-slope scale so
  // the force-band rows are O(1) in every coupled direction.
  const Eigen::VectorXd& variable_scale() const { return var_scale_; }

  Eigen::VectorXd lambda_eq;  // equality multipliers
  Eigen::VectorXd mu_ineq;    // inequality multipliers (>= 0)
  double rho = 10.0;          // penalty parameter

  Eigen::VectorXd pack(const CollocationSolution& sol) const;
  CollocationSolution unpack(const Eigen::VectorXd& z) const;
  Eigen::VectorXd project(Eigen::VectorXd z) const;

  double cost(const Eigen::VectorXd& z) const;
  void constraints(const Eigen::VectorXd& z, Eigen::VectorXd& eq, Eigen::VectorXd& ineq) const;

  double merit(const Eigen::VectorXd& z) const;
  Eigen::VectorXd merit_gradient(const Eigen::VectorXd& z) const;

  // Projected infinity-norm of the Lagrangian gradient at z.
  double stationarity(const Eigen::VectorXd& z) const;

 private:
  double evaluate(const Eigen::VectorXd& z, Eigen::VectorXd* grad, bool lagrangian_only) const;
  void build_boxes();

  const CollocationProblem* problem_;
  std::vector<int> modes_;
  int n_ = 0;
  int n_vars_ = 0, n_eq_ = 0, n_ineq_ = 0;
  double force_scale_ = 1.0;
  Eigen::VectorXd lower_, upper_, var_scale_;
};

double merit_value(const FixedModeNlp& nlp, const Eigen::VectorXd& z);
Eigen::VectorXd merit_gradient(const FixedModeNlp& nlp, const Eigen::VectorXd& z);

struct SolveDiagnostics {
  std::vector<double> outer_merit_start;
  std::vector<double> outer_merit_end;
  std::vector<double> outer_pg;
  std::vector<double> outer_violation;
  int outer_iterations = 0;
  int inner_iterations = 0;
  int line_search_failures = 0;
  int nlp_solves = 0;
  bool used_enumeration = false;
};

// Mode-consistent local solve: guard-rolled initial modes, fixed-mode ALM
// solves iterated to a mode fixed point, then exhaustive enumeration of all
// sequences with at most two switches as a fallback. Throws Infeasible when
// no candidate satisfies the constraint tolerances.
CollocationSolution solve(const CollocationProblem& problem, SolveDiagnostics* diag = nullptr);

}  // namespace leashnav
