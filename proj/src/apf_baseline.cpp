#include "uavmpc/apf_baseline.hpp"

#include <cmath>

#include "uavmpc/errors.hpp"

namespace uavmpc {

namespace {

Vec3 clip_norm(const Vec3& v, double limit) {
  const double n = v.norm();
  return n > limit ? Vec3(v * (limit / n)) : v;
}

}  // namespace

void ApfParams::validate() const {
  const auto positive = [](double v, const char* name) {
    if (!(std::isfinite(v) && v > 0.0)) throw ParameterError(name, "must be > 0");
  };
  positive(k_att, "k_att");
  positive(k_rep, "k_rep");
  positive(rho0, "rho0");
  positive(v_cap, "v_cap");
  positive(speed_gain, "speed_gain");
  positive(velocity_gain, "velocity_gain");
  positive(accel_gain, "accel_gain");
}

Vec3 apf_force(const Vec3& position, const Vec3& goal, std::span<const Vec3> obstacles,
               const ApfParams& params) {
  Vec3 force = params.k_att * (goal - position);
  for (const Vec3& o : obstacles) {
    const Vec3 diff = position - o;
    const double d = diff.norm();
    if (d == 0.0) throw SingularityError("apf_force: position coincides with an obstacle");
    if (d > params.rho0) continue;
    force += params.k_rep * (1.0 / d - 1.0 / params.rho0) / (d * d) * (diff / d);
  }
  return force;
}

Vec3 apf_step(const UavState& state, const Vec3& goal, std::span<const Vec3> obstacles,
              const ApfParams& params, const DynamicsParams&) {
  const Vec3 force = apf_force(state.p, goal, obstacles, params);
  const double magnitude = force.norm();
  if (magnitude == 0.0) return Vec3::Zero();
  const double speed = std::min(magnitude * params.speed_gain, params.v_cap);
  return force * (speed / magnitude);
}

Vec3 apf_tracking_control(const UavState& state, const Vec3& v_cmd, const ApfParams& params,
                          const DynamicsParams& dyn) {
  const Vec3 a_des = clip_norm(params.velocity_gain * (v_cmd - state.v) + dyn.d_max.cwiseProduct(state.v), dyn.a_max);
  return clip_norm(params.accel_gain * (a_des - state.a), dyn.u_max);
}

}  // namespace uavmpc
