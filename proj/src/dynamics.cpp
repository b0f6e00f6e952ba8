#include "uavmpc/dynamics.hpp"

#include <cmath>
#include <string>

#include "uavmpc/errors.hpp"

namespace uavmpc {

Vec9 UavState::stacked() const {
  Vec9 x;
  x << p, v, a;
  return x;
}

UavState UavState::from_stacked(const Vec9& x) {
  return UavState{x.segment<3>(0), x.segment<3>(3), x.segment<3>(6)};
}

bool UavState::finite() const { return p.allFinite() && v.allFinite() && a.allFinite(); }

void DynamicsParams::validate() const {
  if (!(std::isfinite(tau) && tau > 0.0)) throw ParameterError("tau", "must be finite and > 0");
  if (!(std::isfinite(v_max) && v_max > 0.0)) throw ParameterError("v_max", "must be > 0");
  if (!(std::isfinite(a_max) && a_max > 0.0)) throw ParameterError("a_max", "must be > 0");
  if (!(std::isfinite(u_max) && u_max > 0.0)) throw ParameterError("u_max", "must be > 0");
  for (int i = 0; i < 3; ++i) {
    if (!(std::isfinite(d_max[i]) && d_max[i] >= 0.0))
      throw ParameterError("d_max", "entry " + std::to_string(i) + " must be >= 0");
    if (!(1.0 - tau * d_max[i] > 0.0))
      throw ParameterError("d_max", "1 - tau*d_max must stay positive on axis " + std::to_string(i));
  }
}

StateMatrices build_matrices(const DynamicsParams& params) {
  params.validate();
  const double tau = params.tau;
  StateMatrices m;
  m.A.setIdentity();
  m.A.block<3, 3>(0, 3).diagonal().setConstant(tau);
  m.A.block<3, 3>(3, 6).diagonal().setConstant(tau);
  for (int i = 0; i < 3; ++i) m.A(3 + i, 3 + i) = 1.0 - tau * params.d_max[i];
  m.B.setZero();
  m.B.block<3, 3>(6, 0).diagonal().setConstant(tau);
  return m;
}

UavState step(const UavState& x, const Vec3& u, const StateMatrices& m) {
  if (!x.finite() || !u.allFinite()) throw NumericError("step: non-finite state or control");
  const Vec9 next = m.A * x.stacked() + m.B * u;
  return UavState::from_stacked(next);
}

UavState step(const UavState& x, const Vec3& u, const DynamicsParams& params) {
  return step(x, u, build_matrices(params));
}

std::vector<UavState> rollout(const UavState& x0, std::span<const Vec3> controls,
                              const DynamicsParams& params) {
  if (controls.empty()) throw ArgumentError("rollout: empty control sequence");
  const StateMatrices m = build_matrices(params);
  std::vector<UavState> states;
  states.reserve(controls.size());
  UavState x = x0;
  for (const Vec3& u : controls) {
    x = step(x, u, m);
    states.push_back(x);
  }
  return states;
}

}  // namespace uavmpc
