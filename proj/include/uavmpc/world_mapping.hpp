#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "uavmpc/dynamics.hpp"

namespace uavmpc {

struct Aabb {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  bool contains(const Vec3& q) const;
  bool operator==(const Aabb&) const = default;
};

/// Vertical cylinder spanning [z_min, z_max].
struct Cylinder {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double radius = 0.5;
  double z_min = 0.0;
  double z_max = 3.0;

  bool operator==(const Cylinder&) const = default;
};

struct ObstacleWorld {
  Aabb bounds;
  std::vector<Cylinder> cylinders;
  std::vector<Aabb> boxes;

  /// Throws ParameterError on non-positive radii or degenerate bounds.
  void validate() const;

  /// Signed distance from q to the nearest obstacle surface; negative inside.
  /// Returns +infinity for an empty world.
  double surface_distance(const Vec3& q) const;

  /// First obstacle hit along origin + t*dir for t in (0, max_range].
  std::optional<double> cast_ray(const Vec3& origin, const Vec3& dir, double max_range) const;

  bool operator==(const ObstacleWorld&) const = default;
};

/// Layout parameters for a random field of non-overlapping vertical cylinders.
struct CylinderFieldSpec {
  int count = 20;
  double radius_min = 0.4;
  double radius_max = 0.8;
  Eigen::Vector2d region_min{2.0, 2.5};
  Eigen::Vector2d region_max{28.0, 12.5};
  /// Minimum surface-to-surface gap between cylinders.
  double min_gap = 1.2;
  /// Minimum distance from a cylinder surface to start and goal.
  double keep_out = 1.5;
  /// Cylinders reach this far past the world's vertical bounds, so that no
  /// way around them exists above or below the flight volume.
  double vertical_overhang = 10.0;

  bool operator==(const CylinderFieldSpec&) const = default;
};

/// Appends `spec.count` cylinders (fewer if rejection sampling runs out) to `world`.
/// Deterministic for a given seed.
void add_cylinder_field(ObstacleWorld& world, const CylinderFieldSpec& spec, const Vec3& start,
                        const Vec3& goal, std::uint64_t seed);

struct SensorConfig {
  double range = 3.0;
  int azimuth_rays = 64;
  int elevation_rays = 16;
  /// Full vertical field of view in radians, centered on the horizon. The default
  /// spans the whole sphere; ray centers stay strictly inside (-pi/2, pi/2).
  double elevation_fov = 3.141592653589793;

  void validate() const;
  bool operator==(const SensorConfig&) const = default;
};

struct PointCloud {
  Vec3 origin = Vec3::Zero();
  std::vector<Vec3> points;
};

/// Unit direction of ray (azimuth index, elevation index).
Vec3 ray_direction(const SensorConfig& cfg, int azimuth, int elevation);

/// Spherical ray cast against the world. Each returned point is the first surface
/// hit of its ray. Throws SensingError if `position` is inside an obstacle.
PointCloud sense(const ObstacleWorld& world, const Vec3& position, const SensorConfig& cfg);
/// Single-threaded reference for `sense`; identical output.
PointCloud sense_serial(const ObstacleWorld& world, const Vec3& position, const SensorConfig& cfg);

struct Cell {
  int x = 0;
  int y = 0;
  int z = 0;

  auto operator<=>(const Cell&) const = default;
  Cell operator+(const Cell& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Cell operator-(const Cell& o) const { return {x - o.x, y - o.y, z - o.z}; }
};

class VoxelGrid {
public:
  VoxelGrid() = default;
  VoxelGrid(const Vec3& origin, double resolution, const std::array<int, 3>& dims);

  const Vec3& origin() const { return origin_; }
  double resolution() const { return resolution_; }
  const std::array<int, 3>& dims() const { return dims_; }
  std::size_t size() const { return occupancy_.size(); }
  double inflation_radius() const { return inflation_radius_; }
  std::size_t dropped_points() const { return dropped_points_; }

  bool in_bounds(const Cell& c) const {
    return c.x >= 0 && c.y >= 0 && c.z >= 0 && c.x < dims_[0] && c.y < dims_[1] && c.z < dims_[2];
  }
  std::size_t index(const Cell& c) const {
    return (static_cast<std::size_t>(c.z) * dims_[1] + c.y) * dims_[0] + c.x;
  }
  Cell cell_of(std::size_t idx) const;

  bool occupied(const Cell& c) const { return occupancy_[index(c)] != 0; }
  /// Out-of-bounds cells count as blocked.
  bool blocked(const Cell& c) const { return !in_bounds(c) || occupied(c); }
  void set_occupied(const Cell& c, bool value = true) { occupancy_[index(c)] = value ? 1 : 0; }
  std::size_t occupied_count() const;

  /// Cell whose half-open cube contains q (may be out of bounds).
  Cell world_to_cell(const Vec3& q) const;
  Vec3 cell_center(const Cell& c) const;
  bool contains(const Vec3& q) const { return in_bounds(world_to_cell(q)); }

  const std::vector<std::uint8_t>& occupancy() const { return occupancy_; }

private:
  friend VoxelGrid voxelize(const PointCloud&, const Vec3&, double, const std::array<int, 3>&);
  friend VoxelGrid inflate(const VoxelGrid&, double);
  friend VoxelGrid inflate_serial(const VoxelGrid&, double);

  Vec3 origin_ = Vec3::Zero();
  double resolution_ = 0.1;
  std::array<int, 3> dims_{1, 1, 1};
  std::vector<std::uint8_t> occupancy_ = std::vector<std::uint8_t>(1, 0);
  double inflation_radius_ = 0.0;
  std::size_t dropped_points_ = 0;
};

VoxelGrid voxelize(const PointCloud& cloud, const Vec3& origin, double resolution,
                   const std::array<int, 3>& dims);

/// Integer offsets whose center distance is within radius + resolution/2 (1e-9 slack).
std::vector<Cell> inflation_offsets(double radius, double resolution);

/// Marks every cell whose center lies within radius + resolution/2 of an occupied center.
VoxelGrid inflate(const VoxelGrid& grid, double radius);
VoxelGrid inflate_serial(const VoxelGrid& grid, double radius);

/// Centers of occupied cells within horizon_radius of position, nearest first,
/// ties by cell index, truncated to cap.
std::vector<Vec3> obstacle_set(const VoxelGrid& grid, const Vec3& position, double horizon_radius,
                               std::size_t cap);

}  // namespace uavmpc
