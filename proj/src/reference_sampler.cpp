#include "uavmpc/reference_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "uavmpc/errors.hpp"

namespace uavmpc {

double project_onto_polyline(std::span<const Vec3> polyline, const Vec3& q) {
  if (polyline.empty()) throw ArgumentError("project_onto_polyline: empty polyline");
  double best_d2 = (polyline.front() - q).squaredNorm();
  double best_s = 0.0;
  double s = 0.0;
  for (std::size_t k = 1; k < polyline.size(); ++k) {
    const Vec3 seg = polyline[k] - polyline[k - 1];
    const double len2 = seg.squaredNorm();
    const double len = std::sqrt(len2);
    if (len2 > 0.0) {
      const double lambda = std::clamp((q - polyline[k - 1]).dot(seg) / len2, 0.0, 1.0);
      const double d2 = (polyline[k - 1] + lambda * seg - q).squaredNorm();
      if (d2 < best_d2) {
        best_d2 = d2;
        best_s = s + lambda * len;
      }
    }
    s += len;
  }
  return best_s;
}

Vec3 point_at_arc_length(std::span<const Vec3> polyline, double s) {
  if (polyline.empty()) throw ArgumentError("point_at_arc_length: empty polyline");
  if (s <= 0.0) return polyline.front();
  double walked = 0.0;
  for (std::size_t k = 1; k < polyline.size(); ++k) {
    const Vec3 seg = polyline[k] - polyline[k - 1];
    const double len = seg.norm();
    if (len > 0.0 && s < walked + len) return polyline[k - 1] + ((s - walked) / len) * seg;
    walked += len;
  }
  return polyline.back();
}

ReferenceTrajectory sample_reference(std::span<const Vec3> polyline, const Vec3& current_pos,
                                     double v_ref, double tau, int horizon) {
  if (polyline.empty()) throw ArgumentError("sample_reference: empty polyline");
  if (!(v_ref > 0.0)) throw ArgumentError("sample_reference: v_ref must be > 0");
  if (!(tau > 0.0)) throw ArgumentError("sample_reference: tau must be > 0");
  if (horizon < 1) throw ArgumentError("sample_reference: horizon must be >= 1");

  ReferenceTrajectory ref;
  ref.v_ref = v_ref;
  ref.spacing = v_ref * tau;
  ref.points.reserve(static_cast<std::size_t>(horizon));
  const double s0 = project_onto_polyline(polyline, current_pos);
  for (int i = 1; i <= horizon; ++i) ref.points.push_back(point_at_arc_length(polyline, s0 + i * ref.spacing));
  return ref;
}

}  // namespace uavmpc
