#pragma once

#include <Eigen/Core>

namespace uavmpc {

struct QpOptions {
  int max_iterations = 80;
  double tolerance = 1e-9;
};

struct QpResult {
  Eigen::VectorXd x;
  /// Multipliers of the inequality rows, all >= 0.
  Eigen::VectorXd lambda;
  int iterations = 0;
  bool converged = false;
};

/// Dense convex QP   min 0.5 x'Hx + c'x   s.t.  Gx <= h
/// solved with a Mehrotra predictor-corrector interior point method. H must be
/// positive semidefinite and H + G'WG positive definite for positive W.
QpResult solve_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& c, const Eigen::MatrixXd& G,
                  const Eigen::VectorXd& h, const QpOptions& options = {});

}  // namespace uavmpc
