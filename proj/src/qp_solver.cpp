#include "uavmpc/qp_solver.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>

namespace uavmpc {

namespace {

/// Largest step in (0, 1] keeping v + step*dv strictly positive.
double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
  double alpha = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (dv[i] < 0.0) alpha = std::min(alpha, -v[i] / dv[i]);
  return alpha;
}

}  // namespace

QpResult solve_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& c, const Eigen::MatrixXd& G,
                  const Eigen::VectorXd& h, const QpOptions& options) {
  const Eigen::Index n = c.size();
  const Eigen::Index m = h.size();
  QpResult out;
  out.x = Eigen::VectorXd::Zero(n);
  out.lambda = Eigen::VectorXd::Zero(m);

  if (m == 0) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
    out.x = ldlt.solve(-c);
    out.converged = ldlt.info() == Eigen::Success && out.x.allFinite();
    return out;
  }

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd s = (h - G * x).cwiseMax(1.0);
  Eigen::VectorXd lambda = Eigen::VectorXd::Ones(m);

  const double scale_d = 1.0 + c.lpNorm<Eigen::Infinity>();
  const double scale_p = 1.0 + h.lpNorm<Eigen::Infinity>();
  const Eigen::MatrixXd reg = 1e-12 * Eigen::MatrixXd::Identity(n, n);

  for (int it = 0; it < options.max_iterations; ++it) {
    out.iterations = it + 1;
    const Eigen::VectorXd r_d = H * x + c + G.transpose() * lambda;
    const Eigen::VectorXd r_p = G * x + s - h;
    const double mu = s.dot(lambda) / static_cast<double>(m);

    if (r_d.lpNorm<Eigen::Infinity>() <= options.tolerance * scale_d &&
        r_p.lpNorm<Eigen::Infinity>() <= options.tolerance * scale_p && mu <= options.tolerance) {
      out.converged = true;
      break;
    }

    const Eigen::VectorXd w = lambda.cwiseQuotient(s);
    const Eigen::MatrixXd K = H + G.transpose() * w.asDiagonal() * G + reg;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(K);
    if (ldlt.info() != Eigen::Success) break;

    // r_c is the complementarity residual; the system is reduced onto dx.
    const auto newton = [&](const Eigen::VectorXd& r_c, Eigen::VectorXd& dx, Eigen::VectorXd& ds,
                            Eigen::VectorXd& dl) {
      const Eigen::VectorXd rhs = -r_d - G.transpose() * (w.cwiseProduct(r_p) - r_c.cwiseQuotient(s));
      dx = ldlt.solve(rhs);
      dl = w.cwiseProduct(G * dx + r_p) - r_c.cwiseQuotient(s);
      ds = -r_p - G * dx;
    };

    Eigen::VectorXd dx, ds, dl;
    newton(s.cwiseProduct(lambda), dx, ds, dl);
    const double a_aff = std::min(max_step(s, ds), max_step(lambda, dl));
    const double mu_aff = (s + a_aff * ds).dot(lambda + a_aff * dl) / static_cast<double>(m);
    const double sigma = std::pow(mu_aff / mu, 3.0);

    const Eigen::VectorXd r_c =
        s.cwiseProduct(lambda) + ds.cwiseProduct(dl) - Eigen::VectorXd::Constant(m, sigma * mu);
    newton(r_c, dx, ds, dl);
    const double alpha = std::min(1.0, 0.99 * std::min(max_step(s, ds), max_step(lambda, dl)));

    x += alpha * dx;
    s += alpha * ds;
    lambda += alpha * dl;
    if (!x.allFinite() || !lambda.allFinite()) break;
  }

  out.x = x;
  out.lambda = lambda;
  return out;
}

}  // namespace uavmpc
