#include "uavmpc/world_mapping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "uavmpc/errors.hpp"

namespace uavmpc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double cylinder_distance(const Cylinder& c, const Vec3& q) {
  const double dr = std::hypot(q.x() - c.center.x(), q.y() - c.center.y()) - c.radius;
  const double dz = std::max(c.z_min - q.z(), q.z() - c.z_max);
  const double outside = std::hypot(std::max(dr, 0.0), std::max(dz, 0.0));
  const double inside = std::min(std::max(dr, dz), 0.0);
  return outside + inside;
}

double box_distance(const Aabb& b, const Vec3& q) {
  const Vec3 d = (b.min - q).cwiseMax(q - b.max);
  return d.cwiseMax(0.0).norm() + std::min(d.maxCoeff(), 0.0);
}

std::optional<double> ray_cylinder(const Cylinder& c, const Vec3& o, const Vec3& d) {
  double best = kInf;
  const double fx = o.x() - c.center.x();
  const double fy = o.y() - c.center.y();
  const double qa = d.x() * d.x() + d.y() * d.y();
  if (qa > 1e-15) {
    const double qb = 2.0 * (fx * d.x() + fy * d.y());
    const double qc = fx * fx + fy * fy - c.radius * c.radius;
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc >= 0.0) {
      const double t = (-qb - std::sqrt(disc)) / (2.0 * qa);
      const double z = o.z() + t * d.z();
      if (t > 0.0 && z >= c.z_min && z <= c.z_max) best = t;
    }
  }
  if (std::abs(d.z()) > 1e-15) {
    for (double plane : {c.z_min, c.z_max}) {
      const double t = (plane - o.z()) / d.z();
      if (t <= 0.0 || t >= best) continue;
      const double px = o.x() + t * d.x() - c.center.x();
      const double py = o.y() + t * d.y() - c.center.y();
      if (px * px + py * py <= c.radius * c.radius) best = t;
    }
  }
  if (best == kInf) return std::nullopt;
  return best;
}

std::optional<double> ray_box(const Aabb& b, const Vec3& o, const Vec3& d) {
  double t_near = -kInf;
  double t_far = kInf;
  for (int i = 0; i < 3; ++i) {
    if (std::abs(d[i]) < 1e-15) {
      if (o[i] < b.min[i] || o[i] > b.max[i]) return std::nullopt;
      continue;
    }
    double t1 = (b.min[i] - o[i]) / d[i];
    double t2 = (b.max[i] - o[i]) / d[i];
    if (t1 > t2) std::swap(t1, t2);
    t_near = std::max(t_near, t1);
    t_far = std::min(t_far, t2);
  }
  if (t_near > t_far || t_near <= 0.0) return std::nullopt;
  return t_near;
}

std::optional<Vec3> cast_one(const ObstacleWorld& world, const Vec3& origin, const Vec3& dir,
                             double range) {
  if (auto t = world.cast_ray(origin, dir, range)) return Vec3(origin + *t * dir);
  return std::nullopt;
}

void check_sensor_origin(const ObstacleWorld& world, const Vec3& position, const SensorConfig& cfg) {
  cfg.validate();
  if (!position.allFinite()) throw NumericError("sense: non-finite position");
  if (world.surface_distance(position) < 0.0)
    throw SensingError("sense: sensor origin is inside an obstacle");
}

}  // namespace

bool Aabb::contains(const Vec3& q) const {
  return (q.array() >= min.array()).all() && (q.array() <= max.array()).all();
}

void ObstacleWorld::validate() const {
  for (int i = 0; i < 3; ++i)
    if (!(bounds.max[i] > bounds.min[i])) throw ParameterError("world.bounds", "degenerate extent");
  for (std::size_t i = 0; i < cylinders.size(); ++i) {
    const auto& c = cylinders[i];
    if (!(c.radius > 0.0))
      throw ParameterError("world.cylinders[" + std::to_string(i) + "].radius", "must be > 0");
    if (!(c.z_max > c.z_min))
      throw ParameterError("world.cylinders[" + std::to_string(i) + "].z", "empty z extent");
  }
  for (std::size_t i = 0; i < boxes.size(); ++i)
    if (!(boxes[i].max.array() > boxes[i].min.array()).all())
      throw ParameterError("world.boxes[" + std::to_string(i) + "]", "degenerate box");
}

double ObstacleWorld::surface_distance(const Vec3& q) const {
  double d = kInf;
  for (const auto& c : cylinders) d = std::min(d, cylinder_distance(c, q));
  for (const auto& b : boxes) d = std::min(d, box_distance(b, q));
  return d;
}

std::optional<double> ObstacleWorld::cast_ray(const Vec3& origin, const Vec3& dir,
                                              double max_range) const {
  double best = kInf;
  for (const auto& c : cylinders)
    if (auto t = ray_cylinder(c, origin, dir)) best = std::min(best, *t);
  for (const auto& b : boxes)
    if (auto t = ray_box(b, origin, dir)) best = std::min(best, *t);
  if (best > max_range) return std::nullopt;
  return best;
}

void add_cylinder_field(ObstacleWorld& world, const CylinderFieldSpec& spec, const Vec3& start,
                        const Vec3& goal, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(spec.region_min.x(), spec.region_max.x());
  std::uniform_real_distribution<double> uy(spec.region_min.y(), spec.region_max.y());
  std::uniform_real_distribution<double> ur(spec.radius_min, spec.radius_max);

  const std::size_t first_new = world.cylinders.size();
  const long max_attempts = 2000L * std::max(spec.count, 1);
  int placed = 0;
  for (long attempt = 0; attempt < max_attempts && placed < spec.count; ++attempt) {
    Cylinder c;
    c.center = {ux(rng), uy(rng)};
    c.radius = ur(rng);
    c.z_min = world.bounds.min.z() - spec.vertical_overhang;
    c.z_max = world.bounds.max.z() + spec.vertical_overhang;

    const auto clear_of = [&](const Vec3& q) {
      return std::hypot(q.x() - c.center.x(), q.y() - c.center.y()) - c.radius >= spec.keep_out;
    };
    if (!clear_of(start) || !clear_of(goal)) continue;
    bool ok = true;
    for (std::size_t i = first_new; i < world.cylinders.size() && ok; ++i) {
      const auto& o = world.cylinders[i];
      ok = (c.center - o.center).norm() - c.radius - o.radius >= spec.min_gap;
    }
    if (!ok) continue;
    world.cylinders.push_back(c);
    ++placed;
  }
}

void SensorConfig::validate() const {
  if (!(range > 0.0)) throw ParameterError("sensor.range", "must be > 0");
  if (azimuth_rays < 1) throw ParameterError("sensor.azimuth_rays", "must be >= 1");
  if (elevation_rays < 1) throw ParameterError("sensor.elevation_rays", "must be >= 1");
  if (!(elevation_fov >= 0.0 && elevation_fov <= std::numbers::pi))
    throw ParameterError("sensor.elevation_fov", "must be in [0, pi]");
}

Vec3 ray_direction(const SensorConfig& cfg, int azimuth, int elevation) {
  const double az = 2.0 * std::numbers::pi * azimuth / cfg.azimuth_rays;
  const double el = -0.5 * cfg.elevation_fov + cfg.elevation_fov * (elevation + 0.5) / cfg.elevation_rays;
  return {std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
}

PointCloud sense_serial(const ObstacleWorld& world, const Vec3& position, const SensorConfig& cfg) {
  check_sensor_origin(world, position, cfg);
  PointCloud cloud;
  cloud.origin = position;
  for (int e = 0; e < cfg.elevation_rays; ++e)
    for (int a = 0; a < cfg.azimuth_rays; ++a)
      if (auto hit = cast_one(world, position, ray_direction(cfg, a, e), cfg.range))
        cloud.points.push_back(*hit);
  return cloud;
}

PointCloud sense(const ObstacleWorld& world, const Vec3& position, const SensorConfig& cfg) {
  check_sensor_origin(world, position, cfg);
  const int n = cfg.azimuth_rays * cfg.elevation_rays;
  std::vector<std::optional<Vec3>> hits(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static)
  for (int r = 0; r < n; ++r)
    hits[r] = cast_one(world, position, ray_direction(cfg, r % cfg.azimuth_rays, r / cfg.azimuth_rays),
                       cfg.range);

  PointCloud cloud;
  cloud.origin = position;
  for (const auto& h : hits)
    if (h) cloud.points.push_back(*h);
  return cloud;
}

VoxelGrid::VoxelGrid(const Vec3& origin, double resolution, const std::array<int, 3>& dims)
    : origin_(origin), resolution_(resolution), dims_(dims) {
  if (!(resolution > 0.0)) throw ParameterError("resolution", "must be > 0");
  for (int d : dims)
    if (d < 1) throw ParameterError("dims", "each axis needs at least one cell");
  occupancy_.assign(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2], 0);
}

Cell VoxelGrid::cell_of(std::size_t idx) const {
  const auto nx = static_cast<std::size_t>(dims_[0]);
  const auto ny = static_cast<std::size_t>(dims_[1]);
  return {static_cast<int>(idx % nx), static_cast<int>((idx / nx) % ny), static_cast<int>(idx / (nx * ny))};
}

std::size_t VoxelGrid::occupied_count() const {
  return static_cast<std::size_t>(std::count(occupancy_.begin(), occupancy_.end(), std::uint8_t{1}));
}

Cell VoxelGrid::world_to_cell(const Vec3& q) const {
  const Vec3 f = ((q - origin_) / resolution_).array().floor();
  return {static_cast<int>(f.x()), static_cast<int>(f.y()), static_cast<int>(f.z())};
}

Vec3 VoxelGrid::cell_center(const Cell& c) const {
  return origin_ + resolution_ * Vec3(c.x + 0.5, c.y + 0.5, c.z + 0.5);
}

VoxelGrid voxelize(const PointCloud& cloud, const Vec3& origin, double resolution,
                   const std::array<int, 3>& dims) {
  VoxelGrid grid(origin, resolution, dims);
  for (const Vec3& q : cloud.points) {
    const Vec3 f = ((q - origin) / resolution).array().floor();
    // Compare in floating point first so far-away points cannot overflow int.
    if ((f.array() < 0.0).any() || f.x() >= dims[0] || f.y() >= dims[1] || f.z() >= dims[2]) {
      ++grid.dropped_points_;
      continue;
    }
    grid.set_occupied({static_cast<int>(f.x()), static_cast<int>(f.y()), static_cast<int>(f.z())});
  }
  return grid;
}

std::vector<Cell> inflation_offsets(double radius, double resolution) {
  if (!(radius >= 0.0)) throw ParameterError("radius", "must be >= 0");
  const double reach = radius + 0.5 * resolution + 1e-9;
  const int n = static_cast<int>(std::floor(reach / resolution));
  std::vector<Cell> offsets;
  for (int dz = -n; dz <= n; ++dz)
    for (int dy = -n; dy <= n; ++dy)
      for (int dx = -n; dx <= n; ++dx)
        if (resolution * std::sqrt(double(dx * dx + dy * dy + dz * dz)) <= reach) offsets.push_back({dx, dy, dz});
  return offsets;
}

VoxelGrid inflate_serial(const VoxelGrid& grid, double radius) {
  const auto offsets = inflation_offsets(radius, grid.resolution());
  VoxelGrid out = grid;
  out.inflation_radius_ = radius;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!grid.occupancy_[i]) continue;
    const Cell seed = grid.cell_of(i);
    for (const Cell& o : offsets) {
      const Cell c = seed + o;
      if (out.in_bounds(c)) out.set_occupied(c);
    }
  }
  return out;
}

VoxelGrid inflate(const VoxelGrid& grid, double radius) {
  const auto offsets = inflation_offsets(radius, grid.resolution());
  VoxelGrid out = grid;
  out.inflation_radius_ = radius;
  if (offsets.size() <= 1) return out;

  std::vector<Cell> seeds;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (grid.occupancy_[i]) seeds.push_back(grid.cell_of(i));
  const int reach = offsets.back().z;

  // Each thread owns whole z-slices of the output, so writes never alias.
  const int nz = grid.dims()[2];
#pragma omp parallel for schedule(dynamic, 1)
  for (int z = 0; z < nz; ++z) {
    for (const Cell& s : seeds) {
      const int dz = z - s.z;
      if (dz < -reach || dz > reach) continue;
      const auto first = std::lower_bound(offsets.begin(), offsets.end(), dz,
                                          [](const Cell& c, int v) { return c.z < v; });
      for (auto it = first; it != offsets.end() && it->z == dz; ++it) {
        const Cell c = s + *it;
        if (out.in_bounds(c)) out.set_occupied(c);
      }
    }
  }
  return out;
}

std::vector<Vec3> obstacle_set(const VoxelGrid& grid, const Vec3& position, double horizon_radius,
                               std::size_t cap) {
  if (cap < 1) throw ParameterError("cap", "must be >= 1");
  struct Entry {
    double dist;
    Cell cell;
  };
  std::vector<Entry> found;
  const Cell lo = grid.world_to_cell(position - Vec3::Constant(horizon_radius));
  const Cell hi = grid.world_to_cell(position + Vec3::Constant(horizon_radius));
  const auto& dims = grid.dims();
  for (int z = std::max(lo.z, 0); z <= std::min(hi.z, dims[2] - 1); ++z)
    for (int y = std::max(lo.y, 0); y <= std::min(hi.y, dims[1] - 1); ++y)
      for (int x = std::max(lo.x, 0); x <= std::min(hi.x, dims[0] - 1); ++x) {
        const Cell c{x, y, z};
        if (!grid.occupied(c)) continue;
        const double d = (grid.cell_center(c) - position).norm();
        if (d <= horizon_radius) found.push_back({d, c});
      }
  std::sort(found.begin(), found.end(), [](const Entry& a, const Entry& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    return a.cell < b.cell;
  });
  if (found.size() > cap) found.resize(cap);
  std::vector<Vec3> out;
  out.reserve(found.size());
  for (const auto& e : found) out.push_back(grid.cell_center(e.cell));
  return out;
}

}  // namespace uavmpc
