#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "uavmpc/errors.hpp"
#include "uavmpc/world_mapping.hpp"

using namespace uavmpc;

namespace {

Cylinder cylinder(double x, double y, double r, double z0 = -5.0, double z1 = 5.0) {
  Cylinder c;
  c.center = {x, y};
  c.radius = r;
  c.z_min = z0;
  c.z_max = z1;
  return c;
}

ObstacleWorld open_world() {
  ObstacleWorld w;
  w.bounds = {Vec3(-20, -20, -5), Vec3(20, 20, 5)};
  return w;
}

// First surface crossing along a ray by sphere tracing on the signed distance field.
std::optional<Vec3> trace(const ObstacleWorld& w, const Vec3& o, const Vec3& d, double range) {
  double t = 0.0;
  while (t <= range) {
    const double s = w.surface_distance(o + t * d);
    if (s < 1e-10) return o + t * d;
    t += s;
  }
  return std::nullopt;
}

}  // namespace

TEST_SUITE("world_mapping") {

TEST_CASE("sense: empty world gives an empty cloud") {
  CHECK(sense(open_world(), Vec3::Zero(), SensorConfig{}).points.empty());
}

TEST_CASE("sense: cylinder two meters ahead") {
  ObstacleWorld w = open_world();
  w.cylinders.push_back(cylinder(2.0, 0.0, 0.5));
  const SensorConfig cfg;
  const PointCloud cloud = sense(w, Vec3::Zero(), cfg);
  REQUIRE(!cloud.points.empty());
  const Vec3 nearest = *std::min_element(cloud.points.begin(), cloud.points.end(),
                                          [](const Vec3& a, const Vec3& b) { return a.norm() < b.norm(); });
  const double half_el = 0.5 * cfg.elevation_fov / cfg.elevation_rays;
  const double half_az = std::numbers::pi / cfg.azimuth_rays;
  const double tol = 1.5 * (1.0 / (std::cos(half_el) * std::cos(half_az)) - 1.0);
  CHECK(std::abs(nearest.norm() - 1.5) <= tol);
  CHECK(nearest.x() > 1.49);
  CHECK(std::abs(nearest.y()) <= 1.5 * std::tan(half_az) + 1e-9);
}

TEST_CASE("sense: obstacle beyond range is invisible") {
  ObstacleWorld w = open_world();
  w.cylinders.push_back(cylinder(5.0, 0.0, 0.5));
  CHECK(sense(w, Vec3::Zero(), SensorConfig{}).points.empty());
}

TEST_CASE("sense: origin inside an obstacle is a sensing error") {
  ObstacleWorld w = open_world();
  w.cylinders.push_back(cylinder(0.0, 0.0, 0.5));
  CHECK_THROWS_AS(sense(w, Vec3::Zero(), SensorConfig{}), SensingError);
  CHECK_THROWS_AS(sense_serial(w, Vec3::Zero(), SensorConfig{}), SensingError);
}

TEST_CASE("sense: first hits match sphere tracing, within range and on surfaces") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 5; ++trial) {
    ObstacleWorld w = open_world();
    for (int i = 0; i < 6; ++i) {
      const Vec3 c(u(rng), u(rng), 0);
      if (c.head<2>().norm() < 1.2) continue;
      w.cylinders.push_back(cylinder(c.x(), c.y(), 0.4, -1.0 + 0.2 * i, 1.0 + 0.1 * i));
    }
    w.boxes.push_back({Vec3(-2.5, 2.0, -0.5), Vec3(-1.5, 2.6, 0.8)});
    SensorConfig cfg;
    cfg.azimuth_rays = 48;
    cfg.elevation_rays = 12;
    const Vec3 origin(0.1, -0.2, 0.05);
    if (w.surface_distance(origin) <= 0.0) continue;
    const PointCloud cloud = sense(w, origin, cfg);

    std::vector<Vec3> expected;
    for (int e = 0; e < cfg.elevation_rays; ++e)
      for (int a = 0; a < cfg.azimuth_rays; ++a)
        if (auto hit = trace(w, origin, ray_direction(cfg, a, e), cfg.range)) expected.push_back(*hit);
    REQUIRE(cloud.points.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
      CHECK((cloud.points[i] - expected[i]).norm() <= 1e-6);
      CHECK((cloud.points[i] - origin).norm() <= cfg.range + 1e-12);
      CHECK(w.surface_distance(cloud.points[i]) >= -1e-9);
    }
  }
}

TEST_CASE("sense: parallel and serial clouds are identical") {
  ObstacleWorld w = open_world();
  add_cylinder_field(w, CylinderFieldSpec{}, Vec3(0, 7.5, 1), Vec3(30, 7.5, 1), 4);
  w.bounds = {Vec3(-1, 0, 0), Vec3(31, 15, 3)};
  for (double x : {0.0, 5.0, 12.5, 20.0}) {
    const Vec3 p(x, 7.5, 1.0);
    if (w.surface_distance(p) <= 0.0) continue;
    const PointCloud a = sense(w, p, SensorConfig{});
    const PointCloud b = sense_serial(w, p, SensorConfig{});
    REQUIRE(a.points.size() == b.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i) CHECK(a.points[i] == b.points[i]);
  }
}

TEST_CASE("ray directions are unit vectors inside the vertical field of view") {
  SensorConfig cfg;
  cfg.elevation_fov = 0.6;
  for (int e = 0; e < cfg.elevation_rays; ++e)
    for (int a = 0; a < cfg.azimuth_rays; a += 7) {
      const Vec3 d = ray_direction(cfg, a, e);
      CHECK(d.norm() == doctest::Approx(1.0).epsilon(1e-15));
      CHECK(std::abs(std::asin(d.z())) <= 0.3 + 1e-12);
    }
}

TEST_CASE("voxelize examples") {
  PointCloud c;
  c.points = {Vec3(0.05, 0.05, 0.05)};
  VoxelGrid g = voxelize(c, Vec3::Zero(), 0.1, {4, 4, 4});
  CHECK(g.occupied_count() == 1);
  CHECK(g.occupied({0, 0, 0}));

  CHECK(voxelize(PointCloud{}, Vec3::Zero(), 0.1, {4, 4, 4}).occupied_count() == 0);

  c.points = {Vec3(0.21, 0.11, 0.01), Vec3(0.29, 0.19, 0.09)};
  g = voxelize(c, Vec3::Zero(), 0.1, {4, 4, 4});
  CHECK(g.occupied_count() == 1);
  CHECK(g.occupied({2, 1, 0}));

  c.points = {Vec3(-0.01, 0, 0), Vec3(0.4, 0.1, 0.1), Vec3(0.39, 0.1, 0.1)};
  g = voxelize(c, Vec3::Zero(), 0.1, {4, 4, 4});
  CHECK(g.occupied_count() == 1);
  CHECK(g.dropped_points() == 2);
}

TEST_CASE("voxelize uses half-open cells") {
  PointCloud c;
  c.points = {Vec3(0.1, 0.0, 0.0)};
  const VoxelGrid g = voxelize(c, Vec3::Zero(), 0.1, {3, 1, 1});
  CHECK(g.occupied({1, 0, 0}));
  CHECK(!g.occupied({0, 0, 0}));
}

TEST_CASE("grid round trip between cells and world points") {
  const VoxelGrid g(Vec3(-1.3, 2.2, 0.4), 0.1, {20, 15, 10});
  for (int z = 0; z < 10; z += 3)
    for (int y = 0; y < 15; y += 2)
      for (int x = 0; x < 20; x += 3) {
        const Cell c{x, y, z};
        CHECK(g.world_to_cell(g.cell_center(c)) == c);
      }
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 2000; ++k) {
    const Vec3 q = g.origin() + Vec3(u(rng) * 2.0, u(rng) * 1.5, u(rng) * 1.0) * 0.999;
    const Cell c = g.world_to_cell(q);
    REQUIRE(g.in_bounds(c));
    CHECK((g.cell_center(c) - q).norm() <= std::sqrt(3.0) * 0.05 + 1e-12);
  }
}

TEST_CASE("inflate radius zero is the identity") {
  PointCloud c;
  c.points = {Vec3(0.35, 0.45, 0.15), Vec3(0.05, 0.95, 0.25)};
  const VoxelGrid g = voxelize(c, Vec3::Zero(), 0.1, {10, 10, 4});
  const VoxelGrid f = inflate(g, 0.0);
  CHECK(f.occupancy() == g.occupancy());
}

TEST_CASE("inflate by one resolution marks the face neighbours") {
  VoxelGrid g(Vec3::Zero(), 0.1, {5, 5, 5});
  g.set_occupied({2, 2, 2});
  const VoxelGrid f = inflate(g, 0.1);
  // Center distances within 0.15: the seed, 6 face and 12 edge neighbours, no corners.
  CHECK(f.occupied_count() == 19);
  CHECK(!f.occupied({3, 3, 3}));
  for (const Cell d : {Cell{1, 0, 0}, Cell{-1, 0, 0}, Cell{0, 1, 0}, Cell{0, -1, 0}, Cell{0, 0, 1}, Cell{0, 0, -1}})
    CHECK(f.occupied(Cell{2, 2, 2} + d));
  CHECK(f.inflation_radius() == 0.1);
}

TEST_CASE("inflate matches brute force, parallel equals serial") {
  std::mt19937_64 rng(17);
  for (double radius : {0.05, 0.15, 0.25, 0.37}) {
    VoxelGrid g(Vec3(0.3, -0.2, 1.0), 0.1, {14, 11, 7});
    for (int k = 0; k < 12; ++k)
      g.set_occupied({static_cast<int>(rng() % 14), static_cast<int>(rng() % 11), static_cast<int>(rng() % 7)});
    const VoxelGrid f = inflate(g, radius);
    const VoxelGrid s = inflate_serial(g, radius);
    CHECK(f.occupancy() == s.occupancy());
    std::vector<Cell> seeds;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (g.occupancy()[i]) seeds.push_back(g.cell_of(i));
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Cell c = g.cell_of(i);
      bool near = false;
      for (const Cell& s0 : seeds)
        near = near || (g.cell_center(c) - g.cell_center(s0)).norm() <= radius + 0.05 + 1e-9;
      CHECK(f.occupied(c) == near);
    }
  }
}

TEST_CASE("inflate: quarter-meter radius occupies the 0.3 m ball") {
  VoxelGrid g(Vec3::Zero(), 0.1, {11, 11, 11});
  g.set_occupied({5, 5, 5});
  const VoxelGrid f = inflate(g, 0.25);
  int expected = 0;
  for (int z = 0; z < 11; ++z)
    for (int y = 0; y < 11; ++y)
      for (int x = 0; x < 11; ++x) {
        const double d = 0.1 * std::sqrt(double((x - 5) * (x - 5) + (y - 5) * (y - 5) + (z - 5) * (z - 5)));
        const bool in = d <= 0.3 + 1e-9;
        expected += in;
        CHECK(f.occupied({x, y, z}) == in);
      }
  CHECK(f.occupied_count() == static_cast<std::size_t>(expected));
}

TEST_CASE("inflation is monotone in the radius and a superset of the input") {
  std::mt19937_64 rng(23);
  VoxelGrid g(Vec3::Zero(), 0.1, {20, 20, 6});
  for (int k = 0; k < 25; ++k)
    g.set_occupied({static_cast<int>(rng() % 20), static_cast<int>(rng() % 20), static_cast<int>(rng() % 6)});
  const std::vector<double> radii{0.0, 0.05, 0.1, 0.12, 0.2, 0.3, 0.45};
  VoxelGrid prev = g;
  for (double r : radii) {
    const VoxelGrid cur = inflate(g, r);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK((!prev.occupancy()[i] || cur.occupancy()[i]));
    prev = cur;
  }
}

TEST_CASE("obstacle_set examples") {
  VoxelGrid g(Vec3::Zero(), 0.1, {50, 50, 10});
  CHECK(obstacle_set(g, Vec3(2.5, 2.5, 0.5), 3.0, 50).empty());
  g.set_occupied({35, 25, 5});
  const auto one = obstacle_set(g, Vec3(2.55, 2.55, 0.55), 3.0, 50);
  REQUIRE(one.size() == 1);
  CHECK((one[0] - Vec3(3.55, 2.55, 0.55)).norm() <= 1e-12);
  CHECK_THROWS_AS(obstacle_set(g, Vec3::Zero(), 1.0, 0), ParameterError);
}

TEST_CASE("obstacle_set equals a full sort truncated to the cap") {
  std::mt19937_64 rng(31);
  VoxelGrid g(Vec3(-2, -2, -1), 0.1, {40, 40, 20});
  while (g.occupied_count() < 100)
    g.set_occupied({static_cast<int>(rng() % 40), static_cast<int>(rng() % 40), static_cast<int>(rng() % 20)});
  const Vec3 pos(0.03, -0.07, 0.02);
  std::vector<std::pair<double, Cell>> all;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g.occupancy()[i]) {
      const Cell c = g.cell_of(i);
      all.emplace_back((g.cell_center(c) - pos).norm(), c);
    }
  std::sort(all.begin(), all.end());
  const auto got = obstacle_set(g, pos, 10.0, 30);
  REQUIRE(got.size() == 30);
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == g.cell_center(all[i].second));

  const auto within = obstacle_set(g, pos, 1.0, 1000);
  std::size_t n = 0;
  for (const auto& [d, c] : all) n += d <= 1.0;
  CHECK(within.size() == n);
}

TEST_CASE("cylinder field is deterministic and respects spacing") {
  ObstacleWorld a, b;
  a.bounds = b.bounds = {Vec3(-1, 0, 0), Vec3(31, 15, 3)};
  const CylinderFieldSpec spec;
  const Vec3 s(0, 7.5, 1), g(30, 7.5, 1);
  add_cylinder_field(a, spec, s, g, 42);
  add_cylinder_field(b, spec, s, g, 42);
  CHECK(a == b);
  CHECK(a.cylinders.size() == static_cast<std::size_t>(spec.count));
  for (std::size_t i = 0; i < a.cylinders.size(); ++i) {
    const auto& c = a.cylinders[i];
    CHECK(c.radius >= spec.radius_min);
    CHECK(c.radius <= spec.radius_max);
    CHECK(c.z_min < a.bounds.min.z());
    CHECK(c.z_max > a.bounds.max.z());
    CHECK(std::hypot(c.center.x() - s.x(), c.center.y() - s.y()) - c.radius >= spec.keep_out);
    for (std::size_t j = 0; j < i; ++j)
      CHECK((c.center - a.cylinders[j].center).norm() - c.radius - a.cylinders[j].radius >= spec.min_gap);
  }
  ObstacleWorld other;
  other.bounds = a.bounds;
  add_cylinder_field(other, spec, s, g, 43);
  CHECK(!(other == a));
}

TEST_CASE("surface distance of cylinders and boxes") {
  ObstacleWorld w = open_world();
  w.cylinders.push_back(cylinder(0, 0, 1.0, 0.0, 2.0));
  w.boxes.push_back({Vec3(5, 5, 0), Vec3(6, 6, 1)});
  CHECK(w.surface_distance(Vec3(3, 0, 1)) == doctest::Approx(2.0));
  CHECK(w.surface_distance(Vec3(0, 0, 1)) == doctest::Approx(-1.0));
  CHECK(w.surface_distance(Vec3(0, 0, 3)) == doctest::Approx(1.0));
  CHECK(w.surface_distance(Vec3(5.5, 7, 0.5)) == doctest::Approx(1.0));
  CHECK(std::isinf(open_world().surface_distance(Vec3::Zero())));
}

TEST_CASE("world validation") {
  ObstacleWorld w = open_world();
  w.cylinders.push_back(cylinder(0, 0, -0.1));
  CHECK_THROWS_AS(w.validate(), ParameterError);
  ObstacleWorld flat;
  flat.bounds = {Vec3(0, 0, 0), Vec3(1, 1, 0)};
  CHECK_THROWS_AS(flat.validate(), ParameterError);
}

}  // TEST_SUITE
