#include <doctest.h>

#include <cmath>
#include <random>

#include "uavmpc/errors.hpp"
#include "uavmpc/mpc_optimizer.hpp"

using namespace uavmpc;

namespace {

struct Instance {
  UavState x0;
  ReferenceTrajectory ref;
  std::vector<Vec3> obstacles;
  std::vector<Vec3> controls;
};

Instance random_instance(std::mt19937_64& rng, int P = 20) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Instance in;
  in.x0.p = Vec3(g(rng), g(rng), g(rng));
  in.x0.v = 0.5 * Vec3(g(rng), g(rng), g(rng));
  in.x0.a = 0.3 * Vec3(g(rng), g(rng), g(rng));
  in.ref.v_ref = 1.0;
  in.ref.spacing = 0.1;
  const Vec3 dir = Vec3(g(rng), g(rng), 0.2 * g(rng)).normalized();
  for (int i = 1; i <= P; ++i) in.ref.points.push_back(in.x0.p + 0.1 * i * dir);
  for (int m = 0; m < 6; ++m) in.obstacles.push_back(in.x0.p + Vec3(u(rng), u(rng), u(rng)) * 1.2);
  for (int i = 0; i < P; ++i) in.controls.push_back(Vec3(u(rng), u(rng), u(rng)));
  return in;
}

// Direct per-axis evaluation of the four cost terms, written without the library's helpers.
double monolithic_cost(const Instance& in, const CostWeights& w, const DynamicsParams& dp) {
  double p[3], v[3], a[3];
  for (int j = 0; j < 3; ++j) {
    p[j] = in.x0.p[j];
    v[j] = in.x0.v[j];
    a[j] = in.x0.a[j];
  }
  const double t = dp.tau;
  double jt = 0, js = 0, jc = 0, jj = 0;
  for (std::size_t i = 0; i < in.controls.size(); ++i) {
    double np[3], nv[3], na[3];
    for (int j = 0; j < 3; ++j) {
      np[j] = p[j] + t * v[j];
      nv[j] = v[j] - t * dp.d_max[j] * v[j] + t * a[j];
      na[j] = a[j] + t * in.controls[i][j];
    }
    for (int j = 0; j < 3; ++j) {
      p[j] = np[j];
      v[j] = nv[j];
      a[j] = na[j];
    }
    double e2 = 0, s2 = 0, u2 = 0;
    for (int j = 0; j < 3; ++j) {
      e2 += (p[j] - in.ref.points[i][j]) * (p[j] - in.ref.points[i][j]);
      s2 += v[j] * v[j];
      u2 += in.controls[i][j] * in.controls[i][j];
    }
    jt += e2;
    js += (s2 - in.ref.v_ref * in.ref.v_ref) * (s2 - in.ref.v_ref * in.ref.v_ref);
    jj += u2;
    for (const Vec3& o : in.obstacles) {
      double d2 = 0;
      for (int j = 0; j < 3; ++j) d2 += (p[j] - o[j]) * (p[j] - o[j]);
      jc += 1.0 / (1.0 + std::exp(w.alpha * (std::sqrt(d2) - w.r)));
    }
  }
  return w.w_t * jt + w.w_s * js + w.w_c * jc + w.w_j * jj;
}

double rel_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-8);
}

ReferenceTrajectory line_ref(const Vec3& start, const Vec3& dir, int P, double v_ref = 1.0) {
  ReferenceTrajectory r;
  r.v_ref = v_ref;
  r.spacing = v_ref * 0.1;
  for (int i = 1; i <= P; ++i) r.points.push_back(start + r.spacing * i * dir);
  return r;
}

}  // namespace

TEST_SUITE("mpc_optimizer") {

TEST_CASE("tracking cost examples") {
  UavState s;
  s.p = Vec3(1, 0, 0);
  ReferenceTrajectory ref;
  ref.points = {Vec3::Zero()};
  CHECK(tracking_cost(std::vector<UavState>{s}, ref, 2.0) == doctest::Approx(2.0));
  ref.points = {s.p};
  CHECK(tracking_cost(std::vector<UavState>{s}, ref, 2.0) == 0.0);
  ref.points = {Vec3(0, 0, 0), Vec3(1, 1, 1)};
  CHECK_THROWS_AS(tracking_cost(std::vector<UavState>{s}, ref, 1.0), ArgumentError);
  std::vector<UavState> two(2);
  two[1].p = Vec3(0, 3, 0);
  CHECK(tracking_cost(two, ref, 2.0) == doctest::Approx(2.0 * tracking_cost(two, ref, 1.0)));
}

TEST_CASE("speed cost examples") {
  UavState s;
  s.v = Vec3(2, 0, 0);
  CHECK(speed_cost(std::vector<UavState>{s}, 1.0, 1.0) == doctest::Approx(9.0));
  CHECK(speed_cost(std::vector<UavState>(20), 1.0, 1.0) == doctest::Approx(20.0));
  s.v = Vec3(0, 0.6, 0.8);
  CHECK(speed_cost(std::vector<UavState>{s}, 1.0, 1.0) == doctest::Approx(0.0));
}

TEST_CASE("collision cost examples") {
  const std::vector<UavState> one(1);
  CHECK(collision_cost(one, {}, 10.0, 10.0, 0.5) == 0.0);
  const std::vector<Vec3> at_r{Vec3(0.5, 0, 0)};
  CHECK(collision_cost(one, at_r, 10.0, 10.0, 0.5) == doctest::Approx(5.0));
  const std::vector<Vec3> far{Vec3(0.5 + 1.0, 0, 0)};
  CHECK(collision_cost(one, far, 1.0, 10.0, 0.5) == doctest::Approx(1.0 / (1.0 + std::exp(10.0))).epsilon(1e-12));
  CHECK(collision_cost(one, far, 1.0, 10.0, 0.5) == doctest::Approx(4.5398e-5).epsilon(1e-4));
}

TEST_CASE("jerk cost examples") {
  const std::vector<Vec3> u{Vec3(1, 0, 0), Vec3(0, 2, 0)};
  CHECK(jerk_cost(u, 1.0) == doctest::Approx(5.0));
  CHECK(jerk_cost(std::vector<Vec3>(4, Vec3::Zero()), 1.0) == 0.0);
  const std::vector<Vec3> u3{Vec3(3, 0, 0), Vec3(0, 6, 0)};
  CHECK(jerk_cost(u3, 1.0) == doctest::Approx(9.0 * jerk_cost(u, 1.0)));
}

TEST_CASE("hover has zero total cost") {
  UavState x0;
  x0.p = Vec3(1, 2, 3);
  ReferenceTrajectory ref;
  ref.v_ref = 0.0;
  ref.points.assign(20, x0.p);
  const std::vector<Vec3> u(20, Vec3::Zero());
  CHECK(total_cost(u, x0, ref, {}, CostWeights{}, DynamicsParams{}).total == 0.0);
}

TEST_CASE("total cost is the sum of its terms and matches a monolithic evaluator") {
  std::mt19937_64 rng(101);
  const CostWeights w;
  const DynamicsParams dp;
  for (int t = 0; t < 100; ++t) {
    const Instance in = random_instance(rng);
    const CostBreakdown c = total_cost(in.controls, in.x0, in.ref, in.obstacles, w, dp);
    CHECK(c.total == c.tracking + c.speed + c.collision + c.jerk);
    const auto states = rollout(in.x0, in.controls, dp);
    CHECK(c.tracking == tracking_cost(states, in.ref, w.w_t));
    CHECK(c.speed == speed_cost(states, in.ref.v_ref, w.w_s));
    CHECK(c.collision == collision_cost(states, in.obstacles, w.w_c, w.alpha, w.r));
    CHECK(c.jerk == jerk_cost(in.controls, w.w_j));
    const double mono = monolithic_cost(in, w, dp);
    CHECK(std::abs(c.total - mono) <= 1e-12 * std::abs(mono));
  }
}

TEST_CASE("gradients match central finite differences") {
  std::mt19937_64 rng(202);
  const DynamicsParams dp;
  const double h = 1e-6;
  for (int t = 0; t < 100; ++t) {
    const Instance in = random_instance(rng);
    CostWeights w;
    w.alpha = 10.0;
    const CostGradient g = total_cost_gradient(in.controls, in.x0, in.ref, in.obstacles, w, dp);
    const Eigen::VectorXd z = flatten(in.controls);
    Eigen::VectorXd fd_t(z.size()), fd_s(z.size()), fd_c(z.size()), fd_j(z.size()), fd(z.size());
    for (Eigen::Index k = 0; k < z.size(); ++k) {
      Eigen::VectorXd zp = z, zm = z;
      zp(k) += h;
      zm(k) -= h;
      const CostBreakdown cp = total_cost(unflatten(zp), in.x0, in.ref, in.obstacles, w, dp);
      const CostBreakdown cm = total_cost(unflatten(zm), in.x0, in.ref, in.obstacles, w, dp);
      fd_t(k) = (cp.tracking - cm.tracking) / (2 * h);
      fd_s(k) = (cp.speed - cm.speed) / (2 * h);
      fd_c(k) = (cp.collision - cm.collision) / (2 * h);
      fd_j(k) = (cp.jerk - cm.jerk) / (2 * h);
      fd(k) = (cp.total - cm.total) / (2 * h);
    }
    CHECK(rel_error(g.tracking, fd_t) <= 1e-4);
    CHECK(rel_error(g.speed, fd_s) <= 1e-4);
    CHECK(rel_error(g.jerk, fd_j) <= 1e-4);
    if (fd_c.norm() > 1e-6) CHECK(rel_error(g.collision, fd_c) <= 1e-4);
    CHECK(rel_error(g.total, fd) <= 1e-4);
  }
}

TEST_CASE("hover solve returns zero controls") {
  UavState x0;
  x0.p = Vec3(0.3, -0.2, 1.0);
  ReferenceTrajectory ref;
  ref.v_ref = 0.0;
  ref.points.assign(20, x0.p);
  const PlanResult r = solve(x0, ref, {}, CostWeights{}, DynamicsParams{}, SolverConfig{});
  CHECK(r.cost.total <= 1e-8);
  for (const Vec3& u : r.controls) CHECK(u.norm() <= 1e-4);
  CHECK(r.status == SolveStatus::converged);
}

TEST_CASE("straight line from rest agrees with a long-run solve of the same problem") {
  const UavState x0;
  const ReferenceTrajectory ref = line_ref(Vec3::Zero(), Vec3::UnitX(), 20);
  const DynamicsParams dp;
  const PlanResult r = solve(x0, ref, {}, CostWeights{}, dp, SolverConfig{});
  SolverConfig tight;
  tight.max_iterations = 2000;
  tight.cost_tolerance = 1e-14;
  tight.constraint_tolerance = 1e-9;
  const PlanResult oracle = solve(x0, ref, {}, CostWeights{}, dp, tight);
  double sq = 0.0;
  for (std::size_t i = 0; i < r.states.size(); ++i) sq += (r.states[i].p - oracle.states[i].p).squaredNorm();
  CHECK(std::sqrt(sq / r.states.size()) <= 0.1);
  CHECK(r.max_constraint_violation <= SolverConfig{}.constraint_tolerance);
  CHECK(max_constraint_violation(r.states, r.controls, dp) <= 1e-3);
  CHECK(r.cost.total <= total_cost(std::vector<Vec3>(20, Vec3::Zero()), x0, ref, {}, CostWeights{}, dp).total);
}

TEST_CASE("obstacle on the reference line is avoided at lower cost") {
  UavState x0;
  x0.v = Vec3(1, 0, 0);
  const ReferenceTrajectory ref = line_ref(Vec3::Zero(), Vec3::UnitX(), 20);
  const std::vector<Vec3> obstacles{Vec3(1.5, 0, 0)};
  const CostWeights w;
  const DynamicsParams dp;
  const PlanResult free_plan = solve(x0, ref, {}, w, dp, SolverConfig{});
  const PlanResult r = solve(x0, ref, obstacles, w, dp, SolverConfig{});
  for (const UavState& s : r.states) CHECK((s.p - obstacles[0]).norm() >= w.r - 0.05);
  CHECK(r.cost.total < total_cost(free_plan.controls, x0, ref, obstacles, w, dp).total);
}

TEST_CASE("accepted steps decrease the merit function and converged plans are feasible") {
  std::mt19937_64 rng(303);
  const DynamicsParams dp;
  const SolverConfig cfg;
  int converged = 0;
  for (int t = 0; t < 30; ++t) {
    Instance in = random_instance(rng);
    in.x0.v *= 0.5;
    in.x0.a *= 0.1;
    const PlanResult r = solve(in.x0, in.ref, in.obstacles, CostWeights{}, dp, cfg);
    for (const MeritStep& m : r.merit_steps) CHECK(m.after < m.before);
    const auto states = rollout(in.x0, r.controls, dp);
    REQUIRE(states.size() == r.states.size());
    for (std::size_t i = 0; i < states.size(); ++i) CHECK(states[i] == r.states[i]);
    if (r.status == SolveStatus::converged) {
      ++converged;
      CHECK(max_constraint_violation(r.states, r.controls, dp) <= cfg.constraint_tolerance);
      const auto zero = std::vector<Vec3>(in.ref.points.size(), Vec3::Zero());
      CHECK(r.cost.total <= total_cost(zero, in.x0, in.ref, in.obstacles, CostWeights{}, dp).total);
    }
  }
  CHECK(converged >= 20);
}

TEST_CASE("bounds hold when the reference asks for more than the limits allow") {
  DynamicsParams dp;
  dp.v_max = 0.8;
  dp.u_max = 1.0;
  const ReferenceTrajectory ref = line_ref(Vec3::Zero(), Vec3::UnitY(), 20, 2.0);
  UavState x0;
  x0.v = Vec3(0, 0.7, 0);
  const PlanResult r = solve(x0, ref, {}, CostWeights{}, dp, SolverConfig{});
  CHECK(r.status == SolveStatus::converged);
  for (std::size_t i = 0; i < r.states.size(); ++i) {
    CHECK(r.states[i].v.norm() <= dp.v_max + 1e-3);
    CHECK(r.controls[i].norm() <= dp.u_max + 1e-3);
  }
}

TEST_CASE("warm start from the shifted optimum is never worse than a cold start") {
  const DynamicsParams dp;
  const CostWeights w;
  const SolverConfig cfg;
  MpcPlanner planner(w, dp, cfg);
  UavState x;
  const std::vector<Vec3> obstacles{Vec3(2.5, 0.2, 0), Vec3(3.5, -0.3, 0.1)};
  int compared = 0;
  for (int k = 0; k < 50; ++k) {
    const ReferenceTrajectory ref = line_ref(Vec3(x.p.x(), 0, 0), Vec3::UnitX(), 20);
    const std::vector<Vec3> warm = planner.shifted_warm_start(20);
    const PlanResult hot = planner.plan(x, ref, obstacles);
    const PlanResult cold = solve(x, ref, obstacles, w, dp, cfg);
    if (!warm.empty() && hot.status == SolveStatus::converged && cold.status == SolveStatus::converged) {
      CHECK(hot.cost.total <= cold.cost.total + 1e-6);
      ++compared;
    }
    x = step(x, hot.controls.front(), dp);
  }
  CHECK(compared >= 40);
}

TEST_CASE("shifted warm start drops the first control and appends zero") {
  MpcPlanner planner(CostWeights{}, DynamicsParams{}, SolverConfig{});
  CHECK(planner.shifted_warm_start(20).empty());
  const ReferenceTrajectory ref = line_ref(Vec3::Zero(), Vec3::UnitX(), 20);
  const PlanResult r = planner.plan(UavState{}, ref, {});
  const auto w = planner.shifted_warm_start(20);
  REQUIRE(w.size() == 20);
  for (std::size_t i = 0; i + 1 < 20; ++i) CHECK(w[i] == r.controls[i + 1]);
  CHECK(w.back() == Vec3::Zero());
}

TEST_CASE("weight and solver validation") {
  CostWeights w;
  w.alpha = 0.0;
  CHECK_THROWS_AS(w.validate(), ParameterError);
  SolverConfig c;
  c.max_iterations = 0;
  CHECK_THROWS_AS(c.validate(), ParameterError);
}

}  // TEST_SUITE
