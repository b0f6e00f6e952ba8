#pragma once

#include <span>

#include "uavmpc/dynamics.hpp"

namespace uavmpc {

/// Classic attractive/repulsive potential field settings.
struct ApfParams {
  double k_att = 1.75;
  /// Applied per obstacle point; sensed surfaces contribute many points.
  double k_rep = 0.04;
  /// Repulsive influence radius, meters.
  double rho0 = 1.67;
  /// Commanded-speed cap, m/s.
  double v_cap = 1.0;
  /// Force magnitude to commanded speed.
  double speed_gain = 0.106;
  /// Proportional gains of the velocity -> acceleration -> jerk tracking law.
  double velocity_gain = 0.61;
  double accel_gain = 2.0;

  void validate() const;
  bool operator==(const ApfParams&) const = default;
};

/// F = k_att (goal - p) + sum over obstacles within rho0 of
///     k_rep (1/d - 1/rho0) / d^2 * (p - p_m) / d.
/// Throws SingularityError when the position coincides with an obstacle point.
Vec3 apf_force(const Vec3& position, const Vec3& goal, std::span<const Vec3> obstacles,
               const ApfParams& params);

/// Commanded velocity along F with magnitude min(|F| * speed_gain, v_cap).
Vec3 apf_step(const UavState& state, const Vec3& goal, std::span<const Vec3> obstacles,
              const ApfParams& params, const DynamicsParams& dyn);

/// Jerk that tracks v_cmd: a_des = k_v (v_cmd - v) + D v clipped to a_max, then
/// u = k_a (a_des - a) clipped to u_max.
Vec3 apf_tracking_control(const UavState& state, const Vec3& v_cmd, const ApfParams& params,
                          const DynamicsParams& dyn);

}  // namespace uavmpc
