#pragma once

#include <span>
#include <vector>

#include "uavmpc/dynamics.hpp"

namespace uavmpc {

struct ReferenceTrajectory {
  std::vector<Vec3> points;
  double v_ref = 1.0;
  /// Arc length between consecutive samples, v_ref * tau.
  double spacing = 0.1;
};

/// Arc-length coordinate of the point on `polyline` closest to q (earliest on ties).
double project_onto_polyline(std::span<const Vec3> polyline, const Vec3& q);

/// Point at arc length s, clamped to the polyline ends.
Vec3 point_at_arc_length(std::span<const Vec3> polyline, double s);

/// Walks the polyline from the projection of current_pos in steps of v_ref*tau, producing
/// `horizon` points. Once the walk passes the end, the final vertex repeats.
ReferenceTrajectory sample_reference(std::span<const Vec3> polyline, const Vec3& current_pos,
                                     double v_ref, double tau, int horizon);

}  // namespace uavmpc
