#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "uavmpc/dynamics.hpp"
#include "uavmpc/reference_sampler.hpp"

namespace uavmpc {

struct CostWeights {
  double w_t = 1.0;    ///< tracking
  double w_s = 0.5;    ///< speed
  double w_c = 10.0;   ///< collision
  double w_j = 0.1;    ///< jerk
  double alpha = 20.0; ///< logistic sharpness, 1/m
  double r = 0.5;      ///< safety distance, m

  void validate() const;
  bool operator==(const CostWeights&) const = default;
};

struct SolverConfig {
  int max_iterations = 50;
  double cost_tolerance = 1e-6;
  double constraint_tolerance = 1e-3;
  double fd_step = 1e-6;

  void validate() const;
  bool operator==(const SolverConfig&) const = default;
};

struct CostBreakdown {
  double tracking = 0.0;
  double speed = 0.0;
  double collision = 0.0;
  double jerk = 0.0;
  double total = 0.0;
};

enum class SolveStatus { converged, iteration_limit, infeasible };

/// Merit (objective + penalty * l1 violation) around one accepted step, same penalty on both sides.
struct MeritStep {
  double before = 0.0;
  double after = 0.0;
};
std::string_view to_string(SolveStatus s);

struct PlanResult {
  std::vector<UavState> states;
  std::vector<Vec3> controls;
  CostBreakdown cost;
  int iterations = 0;
  double max_constraint_violation = 0.0;
  SolveStatus status = SolveStatus::iteration_limit;
  /// Cost of the initial guess, then the objective after every accepted step.
  std::vector<double> cost_history;
  std::vector<MeritStep> merit_steps;
};

double tracking_cost(std::span<const UavState> states, const ReferenceTrajectory& ref, double w_t);
double speed_cost(std::span<const UavState> states, double v_ref, double w_s);
/// Logistic obstacle penalty using the Euclidean distance from each planned position.
double collision_cost(std::span<const UavState> states, std::span<const Vec3> obstacles, double w_c,
                      double alpha, double r);
double jerk_cost(std::span<const Vec3> controls, double w_j);

/// Rolls the controls out from x0 and sums the four cost terms.
CostBreakdown total_cost(std::span<const Vec3> controls, const UavState& x0,
                         const ReferenceTrajectory& ref, std::span<const Vec3> obstacles,
                         const CostWeights& weights, const DynamicsParams& params);

/// Gradients with respect to the flattened control vector [u0x u0y u0z u1x ...].
struct CostGradient {
  Eigen::VectorXd tracking;
  Eigen::VectorXd speed;
  Eigen::VectorXd collision;
  Eigen::VectorXd jerk;
  Eigen::VectorXd total;
};

CostGradient total_cost_gradient(std::span<const Vec3> controls, const UavState& x0,
                                 const ReferenceTrajectory& ref, std::span<const Vec3> obstacles,
                                 const CostWeights& weights, const DynamicsParams& params);

/// Largest bound excess over the horizon: max(|v_i|-v_max, |a_i|-a_max, |u_i|-u_max, 0).
double max_constraint_violation(std::span<const UavState> states, std::span<const Vec3> controls,
                                const DynamicsParams& params);

Eigen::VectorXd flatten(std::span<const Vec3> controls);
std::vector<Vec3> unflatten(const Eigen::VectorXd& z);

/// One constrained solve of the horizon problem. Decision variables are the controls;
/// states follow from the exact linear model.
PlanResult solve(const UavState& x0, const ReferenceTrajectory& ref, std::span<const Vec3> obstacles,
                 const CostWeights& weights, const DynamicsParams& params, const SolverConfig& config,
                 std::optional<std::span<const Vec3>> warm_start = std::nullopt);

/// Receding-horizon wrapper that warm-starts each solve from the previous solution
/// shifted by one step.
class MpcPlanner {
public:
  MpcPlanner(CostWeights weights, DynamicsParams params, SolverConfig config);

  PlanResult plan(const UavState& x0, const ReferenceTrajectory& ref, std::span<const Vec3> obstacles);
  /// Previous controls advanced one step with zero jerk appended; empty before the first plan.
  std::vector<Vec3> shifted_warm_start(std::size_t horizon) const;
  void reset() { last_controls_.clear(); }

private:
  CostWeights weights_;
  DynamicsParams params_;
  SolverConfig config_;
  std::vector<Vec3> last_controls_;
};

}  // namespace uavmpc
