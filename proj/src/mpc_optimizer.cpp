#include "uavmpc/mpc_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "uavmpc/errors.hpp"
#include "uavmpc/qp_solver.hpp"

namespace uavmpc {

namespace {

/// Logistic penalty 1 / (1 + exp(alpha (d - r))) and its first two derivatives in d.
struct Logistic {
  double value;
  double d1;
  double d2;
};

Logistic logistic(double d, double alpha, double r) {
  const double s = 1.0 / (1.0 + std::exp(alpha * (d - r)));
  return {s, -alpha * s * (1.0 - s), alpha * alpha * s * (1.0 - s) * (1.0 - 2.0 * s)};
}

void check_horizon(std::size_t states, std::size_t refs) {
  if (states != refs)
    throw ArgumentError("horizon mismatch: " + std::to_string(states) + " states vs " +
                        std::to_string(refs) + " reference points");
}

/// Per-stage derivatives of the state-dependent terms, indexed like the state sequence.
struct StageGradients {
  std::vector<Vec9> tracking, speed, collision;
};

StageGradients stage_gradients(std::span<const UavState> states, const ReferenceTrajectory& ref,
                               std::span<const Vec3> obstacles, const CostWeights& w) {
  const std::size_t P = states.size();
  StageGradients g{std::vector<Vec9>(P, Vec9::Zero()), std::vector<Vec9>(P, Vec9::Zero()),
                   std::vector<Vec9>(P, Vec9::Zero())};
  const double vr2 = ref.v_ref * ref.v_ref;
  for (std::size_t i = 0; i < P; ++i) {
    const UavState& x = states[i];
    g.tracking[i].segment<3>(0) = 2.0 * w.w_t * (x.p - ref.points[i]);
    g.speed[i].segment<3>(3) = 4.0 * w.w_s * (x.v.squaredNorm() - vr2) * x.v;
    Vec3 gp = Vec3::Zero();
    for (const Vec3& o : obstacles) {
      const Vec3 diff = x.p - o;
      const double d = diff.norm();
      if (d < 1e-12) continue;
      gp += w.w_c * logistic(d, w.alpha, w.r).d1 / d * diff;
    }
    g.collision[i].segment<3>(0) = gp;
  }
  return g;
}

/// Adjoint pass: maps stage gradients onto the flattened controls.
Eigen::VectorXd backpropagate(const std::vector<Vec9>& stage, const StateMatrices& m) {
  const std::size_t P = stage.size();
  Eigen::VectorXd grad(3 * P);
  Vec9 lambda = Vec9::Zero();
  for (std::size_t k = P; k-- > 0;) {
    lambda = stage[k] + m.A.transpose() * lambda;
    grad.segment<3>(3 * k) = m.B.transpose() * lambda;
  }
  return grad;
}

/// The horizon NLP in control-only (single shooting) form.
class HorizonProblem {
public:
  HorizonProblem(const UavState& x0, const ReferenceTrajectory& ref, std::span<const Vec3> obstacles,
                 const CostWeights& w, const DynamicsParams& params)
      : x0_(x0), ref_(ref), obstacles_(obstacles), w_(w), params_(params),
        m_(build_matrices(params)), P_(static_cast<Eigen::Index>(ref.points.size())), n_(3 * P_) {
    // Gamma maps controls to the stacked state sequence: x_{i+1} = ... + A^{i-k} B u_k.
    gamma_ = Eigen::MatrixXd::Zero(9 * P_, n_);
    std::vector<Mat93> power_b(static_cast<std::size_t>(P_));
    power_b[0] = m_.B;
    for (Eigen::Index j = 1; j < P_; ++j) power_b[j] = m_.A * power_b[j - 1];
    for (Eigen::Index i = 0; i < P_; ++i)
      for (Eigen::Index k = 0; k <= i; ++k) gamma_.block<9, 3>(9 * i, 3 * k) = power_b[i - k];
    tracking_hessian_ = Eigen::MatrixXd::Zero(n_, n_);
    for (Eigen::Index i = 0; i < P_; ++i) tracking_hessian_ += rows(i, 0).transpose() * rows(i, 0);
    tracking_hessian_ *= 2.0 * w_.w_t;
  }

  Eigen::Index size() const { return n_; }

  struct Eval {
    std::vector<UavState> states;
    CostBreakdown cost;
    Eigen::VectorXd g;  ///< squared-norm constraints, <= 0 when satisfied
    double violation_l1 = 0.0;
    double violation_si = 0.0;
  };

  Eval evaluate(const Eigen::VectorXd& z) const {
    Eval e;
    const std::vector<Vec3> u = unflatten(z);
    e.states = rollout(x0_, u, params_);
    e.cost.tracking = tracking_cost(e.states, ref_, w_.w_t);
    e.cost.speed = speed_cost(e.states, ref_.v_ref, w_.w_s);
    e.cost.collision = collision_cost(e.states, obstacles_, w_.w_c, w_.alpha, w_.r);
    e.cost.jerk = jerk_cost(u, w_.w_j);
    e.cost.total = e.cost.tracking + e.cost.speed + e.cost.collision + e.cost.jerk;
    e.g.resize(n_);
    for (Eigen::Index i = 0; i < P_; ++i) {
      const UavState& x = e.states[i];
      e.g[3 * i] = x.v.squaredNorm() - params_.v_max * params_.v_max;
      e.g[3 * i + 1] = x.a.squaredNorm() - params_.a_max * params_.a_max;
      e.g[3 * i + 2] = u[i].squaredNorm() - params_.u_max * params_.u_max;
    }
    e.violation_l1 = e.g.cwiseMax(0.0).sum();
    e.violation_si = max_constraint_violation(e.states, u, params_);
    return e;
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& z, const Eval& e) const {
    const StageGradients sg = stage_gradients(e.states, ref_, obstacles_, w_);
    std::vector<Vec9> stage(sg.tracking.size());
    for (std::size_t i = 0; i < stage.size(); ++i) stage[i] = sg.tracking[i] + sg.speed[i] + sg.collision[i];
    return backpropagate(stage, m_) + 2.0 * w_.w_j * z;
  }

  Eigen::MatrixXd jacobian(const Eigen::VectorXd& z, const Eval& e) const {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n_, n_);
    for (Eigen::Index i = 0; i < P_; ++i) {
      J.row(3 * i) = 2.0 * e.states[i].v.transpose() * rows(i, 3);
      J.row(3 * i + 1) = 2.0 * e.states[i].a.transpose() * rows(i, 6);
      J.block<1, 3>(3 * i + 2, 3 * i) = 2.0 * z.segment<3>(3 * i).transpose();
    }
    return J;
  }

  /// Positive semidefinite model of the Lagrangian Hessian: exact quadratic terms,
  /// Gauss-Newton speed term, convex part of the logistic, constraint curvature.
  Eigen::MatrixXd hessian(const Eval& e, const Eigen::VectorXd& lambda) const {
    Eigen::MatrixXd H = tracking_hessian_;
    H.diagonal().array() += 2.0 * w_.w_j;
    const double vr2 = ref_.v_ref * ref_.v_ref;
    for (Eigen::Index i = 0; i < P_; ++i) {
      const UavState& x = e.states[i];
      const auto Gv = rows(i, 3);
      const Eigen::RowVectorXd grad_rho = 2.0 * x.v.transpose() * Gv;
      H += 2.0 * w_.w_s * grad_rho.transpose() * grad_rho;
      const double rho = x.v.squaredNorm() - vr2;
      double v_curv = 2.0 * lambda[3 * i] + (rho > 0.0 ? 4.0 * w_.w_s * rho : 0.0);
      if (v_curv > 0.0) H += v_curv * Gv.transpose() * Gv;
      if (lambda[3 * i + 1] > 0.0) H += 2.0 * lambda[3 * i + 1] * rows(i, 6).transpose() * rows(i, 6);
      H.block<3, 3>(3 * i, 3 * i).diagonal().array() += 2.0 * lambda[3 * i + 2];

      Eigen::Matrix3d Hp = Eigen::Matrix3d::Zero();
      for (const Vec3& o : obstacles_) {
        const Vec3 diff = x.p - o;
        const double d = diff.norm();
        if (d < 1e-12) continue;
        const double curv = logistic(d, w_.alpha, w_.r).d2;
        if (curv > 0.0) Hp += w_.w_c * curv * (diff / d) * (diff / d).transpose();
      }
      if (Hp.squaredNorm() > 0.0) H += rows(i, 0).transpose() * Hp * rows(i, 0);
    }
    return H;
  }

private:
  /// Rows of Gamma for component block `offset` (0 p, 3 v, 6 a) of state i+1.
  Eigen::MatrixXd::ConstRowsBlockXpr rows(Eigen::Index i, Eigen::Index offset) const {
    return gamma_.middleRows(9 * i + offset, 3);
  }

  const UavState& x0_;
  const ReferenceTrajectory& ref_;
  std::span<const Vec3> obstacles_;
  const CostWeights& w_;
  const DynamicsParams& params_;
  StateMatrices m_;
  Eigen::Index P_;
  Eigen::Index n_;
  Eigen::MatrixXd gamma_;
  Eigen::MatrixXd tracking_hessian_;
};

/// Solves the linearised subproblem; falls back to an elastic (l1-penalised slack)
/// formulation when the linearised constraints admit no solution.
QpResult solve_subproblem(const Eigen::MatrixXd& H, const Eigen::VectorXd& grad, const Eigen::MatrixXd& J,
                          const Eigen::VectorXd& g, double elastic_weight) {
  QpResult qp = solve_qp(H, grad, J, -g);
  if (qp.converged) return qp;

  const Eigen::Index n = grad.size();
  const Eigen::Index m = g.size();
  Eigen::MatrixXd He = Eigen::MatrixXd::Zero(n + m, n + m);
  He.topLeftCorner(n, n) = H;
  He.bottomRightCorner(m, m).diagonal().setConstant(1e-8);
  Eigen::VectorXd ce(n + m);
  ce << grad, Eigen::VectorXd::Constant(m, elastic_weight);
  Eigen::MatrixXd Ge = Eigen::MatrixXd::Zero(2 * m, n + m);
  Ge.topLeftCorner(m, n) = J;
  Ge.topRightCorner(m, m).diagonal().setConstant(-1.0);
  Ge.bottomRightCorner(m, m).diagonal().setConstant(-1.0);
  Eigen::VectorXd he = Eigen::VectorXd::Zero(2 * m);
  he.head(m) = -g;
  const QpResult el = solve_qp(He, ce, Ge, he, QpOptions{120, 1e-8});
  QpResult out;
  out.x = el.x.head(n);
  out.lambda = el.lambda.head(m);
  out.iterations = el.iterations;
  out.converged = el.converged;
  return out;
}

}  // namespace

void CostWeights::validate() const {
  const auto positive = [](double v, const char* name) {
    if (!(std::isfinite(v) && v > 0.0)) throw ParameterError(name, "must be > 0");
  };
  positive(w_t, "w_t");
  positive(w_s, "w_s");
  positive(w_c, "w_c");
  positive(w_j, "w_j");
  positive(alpha, "alpha");
  positive(r, "r");
}

void SolverConfig::validate() const {
  if (max_iterations < 1) throw ParameterError("max_iterations", "must be >= 1");
  if (!(cost_tolerance > 0.0)) throw ParameterError("cost_tolerance", "must be > 0");
  if (!(constraint_tolerance > 0.0)) throw ParameterError("constraint_tolerance", "must be > 0");
  if (!(fd_step > 0.0)) throw ParameterError("fd_step", "must be > 0");
}

std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::iteration_limit: return "iteration-limit";
    case SolveStatus::infeasible: return "infeasible";
  }
  return "unknown";
}

double tracking_cost(std::span<const UavState> states, const ReferenceTrajectory& ref, double w_t) {
  check_horizon(states.size(), ref.points.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i) sum += (states[i].p - ref.points[i]).squaredNorm();
  return w_t * sum;
}

double speed_cost(std::span<const UavState> states, double v_ref, double w_s) {
  double sum = 0.0;
  for (const UavState& x : states) {
    const double e = x.v.squaredNorm() - v_ref * v_ref;
    sum += e * e;
  }
  return w_s * sum;
}

double collision_cost(std::span<const UavState> states, std::span<const Vec3> obstacles, double w_c,
                      double alpha, double r) {
  if (!(alpha > 0.0)) throw ArgumentError("collision_cost: alpha must be > 0");
  if (!(r > 0.0)) throw ArgumentError("collision_cost: r must be > 0");
  double sum = 0.0;
  for (const UavState& x : states)
    for (const Vec3& o : obstacles) sum += logistic((x.p - o).norm(), alpha, r).value;
  return w_c * sum;
}

double jerk_cost(std::span<const Vec3> controls, double w_j) {
  double sum = 0.0;
  for (const Vec3& u : controls) sum += u.squaredNorm();
  return w_j * sum;
}

CostBreakdown total_cost(std::span<const Vec3> controls, const UavState& x0,
                         const ReferenceTrajectory& ref, std::span<const Vec3> obstacles,
                         const CostWeights& weights, const DynamicsParams& params) {
  check_horizon(controls.size(), ref.points.size());
  const std::vector<UavState> states = rollout(x0, controls, params);
  CostBreakdown c;
  c.tracking = tracking_cost(states, ref, weights.w_t);
  c.speed = speed_cost(states, ref.v_ref, weights.w_s);
  c.collision = collision_cost(states, obstacles, weights.w_c, weights.alpha, weights.r);
  c.jerk = jerk_cost(controls, weights.w_j);
  c.total = c.tracking + c.speed + c.collision + c.jerk;
  return c;
}

CostGradient total_cost_gradient(std::span<const Vec3> controls, const UavState& x0,
                                 const ReferenceTrajectory& ref, std::span<const Vec3> obstacles,
                                 const CostWeights& weights, const DynamicsParams& params) {
  check_horizon(controls.size(), ref.points.size());
  const StateMatrices m = build_matrices(params);
  const std::vector<UavState> states = rollout(x0, controls, params);
  const StageGradients sg = stage_gradients(states, ref, obstacles, weights);
  CostGradient g;
  g.tracking = backpropagate(sg.tracking, m);
  g.speed = backpropagate(sg.speed, m);
  g.collision = backpropagate(sg.collision, m);
  g.jerk = 2.0 * weights.w_j * flatten(controls);
  g.total = g.tracking + g.speed + g.collision + g.jerk;
  return g;
}

double max_constraint_violation(std::span<const UavState> states, std::span<const Vec3> controls,
                                const DynamicsParams& params) {
  double worst = 0.0;
  for (const UavState& x : states) {
    worst = std::max(worst, x.v.norm() - params.v_max);
    worst = std::max(worst, x.a.norm() - params.a_max);
  }
  for (const Vec3& u : controls) worst = std::max(worst, u.norm() - params.u_max);
  return worst;
}

Eigen::VectorXd flatten(std::span<const Vec3> controls) {
  Eigen::VectorXd z(3 * static_cast<Eigen::Index>(controls.size()));
  for (std::size_t i = 0; i < controls.size(); ++i) z.segment<3>(3 * static_cast<Eigen::Index>(i)) = controls[i];
  return z;
}

std::vector<Vec3> unflatten(const Eigen::VectorXd& z) {
  std::vector<Vec3> u(static_cast<std::size_t>(z.size() / 3));
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = z.segment<3>(3 * static_cast<Eigen::Index>(i));
  return u;
}

PlanResult solve(const UavState& x0, const ReferenceTrajectory& ref, std::span<const Vec3> obstacles,
                 const CostWeights& weights, const DynamicsParams& params, const SolverConfig& config,
                 std::optional<std::span<const Vec3>> warm_start) {
  weights.validate();
  params.validate();
  config.validate();
  if (ref.points.empty()) throw ArgumentError("solve: empty reference");
  if (!x0.finite()) throw NumericError("solve: non-finite initial state");

  const HorizonProblem problem(x0, ref, obstacles, weights, params);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(problem.size());
  if (warm_start) {
    check_horizon(warm_start->size(), ref.points.size());
    z = flatten(*warm_start);
  }

  HorizonProblem::Eval eval = problem.evaluate(z);
  const Eigen::VectorXd z_init = z;
  const HorizonProblem::Eval init = eval;

  PlanResult result;
  result.cost_history.push_back(eval.cost.total);
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(problem.size());
  double penalty = 10.0;
  bool converged = false;
  int it = 0;

  for (it = 1; it <= config.max_iterations; ++it) {
    const Eigen::VectorXd grad = problem.gradient(z, eval);
    const Eigen::MatrixXd J = problem.jacobian(z, eval);
    const Eigen::MatrixXd H = problem.hessian(eval, lambda);
    const QpResult qp = solve_subproblem(H, grad, J, eval.g, 10.0 * penalty);
    const Eigen::VectorXd& d = qp.x;
    if (!d.allFinite()) break;

    penalty = std::max(penalty, 1.1 * qp.lambda.lpNorm<Eigen::Infinity>() + 1e-3);
    const double merit = eval.cost.total + penalty * eval.violation_l1;
    const double slope = grad.dot(d) - penalty * eval.violation_l1;

    if (!(slope < -1e-14 * (1.0 + std::abs(merit))) || d.lpNorm<Eigen::Infinity>() < 1e-12) {
      // No descent direction left: the iterate is stationary for the merit function.
      converged = eval.violation_si <= config.constraint_tolerance;
      lambda = qp.lambda;
      break;
    }

    double step = 1.0;
    bool accepted = false;
    HorizonProblem::Eval trial;
    for (int ls = 0; ls < 40; ++ls, step *= 0.5) {
      trial = problem.evaluate(z + step * d);
      const double trial_merit = trial.cost.total + penalty * trial.violation_l1;
      if (std::isfinite(trial_merit) && trial_merit <= merit + 1e-4 * step * slope) {
        accepted = true;
        result.merit_steps.push_back({merit, trial_merit});
        break;
      }
    }
    if (!accepted) {
      converged = eval.violation_si <= config.constraint_tolerance;
      break;
    }

    const double previous = eval.cost.total;
    z += step * d;
    eval = std::move(trial);
    lambda = qp.lambda;
    result.cost_history.push_back(eval.cost.total);

    if (std::abs(previous - eval.cost.total) < config.cost_tolerance &&
        eval.violation_si <= config.constraint_tolerance) {
      converged = true;
      break;
    }
  }

  // A feasible starting guess is never worse than what the solver returns.
  if (init.violation_si <= config.constraint_tolerance && init.cost.total < eval.cost.total) {
    z = z_init;
    eval = init;
  }

  result.controls = unflatten(z);
  result.states = std::move(eval.states);
  result.cost = eval.cost;
  result.iterations = std::min(it, config.max_iterations);
  result.max_constraint_violation = eval.violation_si;
  if (eval.violation_si > config.constraint_tolerance)
    result.status = SolveStatus::infeasible;
  else
    result.status = converged ? SolveStatus::converged : SolveStatus::iteration_limit;
  return result;
}

MpcPlanner::MpcPlanner(CostWeights weights, DynamicsParams params, SolverConfig config)
    : weights_(weights), params_(params), config_(config) {}

std::vector<Vec3> MpcPlanner::shifted_warm_start(std::size_t horizon) const {
  if (last_controls_.empty()) return {};
  std::vector<Vec3> u(last_controls_.begin() + 1, last_controls_.end());
  u.resize(horizon, Vec3::Zero());
  return u;
}

PlanResult MpcPlanner::plan(const UavState& x0, const ReferenceTrajectory& ref,
                            std::span<const Vec3> obstacles) {
  const std::vector<Vec3> warm = shifted_warm_start(ref.points.size());
  PlanResult r = warm.empty()
                     ? solve(x0, ref, obstacles, weights_, params_, config_)
                     : solve(x0, ref, obstacles, weights_, params_, config_, std::span<const Vec3>(warm));
  last_controls_ = r.controls;
  return r;
}

}  // namespace uavmpc
