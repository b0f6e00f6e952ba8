#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace uavmpc {

using Vec3 = Eigen::Vector3d;
using Vec9 = Eigen::Matrix<double, 9, 1>;
using Mat9 = Eigen::Matrix<double, 9, 9>;
using Mat93 = Eigen::Matrix<double, 9, 3>;

/// Position, velocity and acceleration of the vehicle. Flattened order is [p, v, a].
struct UavState {
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 a = Vec3::Zero();

  Vec9 stacked() const;
  static UavState from_stacked(const Vec9& x);
  bool finite() const;

  bool operator==(const UavState&) const = default;
};

struct DynamicsParams {
  double tau = 0.1;
  Vec3 d_max = Vec3::Constant(0.5);
  double v_max = 2.0;
  double a_max = 9.81;
  double u_max = 1.0;

  /// Throws ParameterError naming the first violated invariant.
  void validate() const;

  bool operator==(const DynamicsParams&) const = default;
};

struct StateMatrices {
  Mat9 A;
  Mat93 B;
};

StateMatrices build_matrices(const DynamicsParams& params);

/// One step of the jerk-input model. Bounds are not enforced here; they belong
/// to the optimizer constraints.
UavState step(const UavState& x, const Vec3& u, const DynamicsParams& params);

/// Same as `step` with matrices already built; used in hot loops.
UavState step(const UavState& x, const Vec3& u, const StateMatrices& m);

/// Element i is the state after applying controls[0..i].
std::vector<UavState> rollout(const UavState& x0, std::span<const Vec3> controls,
                              const DynamicsParams& params);

}  // namespace uavmpc
