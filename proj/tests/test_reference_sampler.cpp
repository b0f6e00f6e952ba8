#include <doctest.h>

#include <cmath>
#include <random>

#include "uavmpc/errors.hpp"
#include "uavmpc/reference_sampler.hpp"

using namespace uavmpc;

namespace {

// Arc-length walk on a densely resampled copy of the polyline.
Vec3 dense_point(const std::vector<Vec3>& poly, double s) {
  const int sub = 20000;
  double acc = 0.0;
  for (std::size_t i = 1; i < poly.size(); ++i) {
    const Vec3 a = poly[i - 1], b = poly[i];
    for (int k = 0; k < sub; ++k) {
      const Vec3 p = a + (b - a) * (double(k) / sub);
      const Vec3 q = a + (b - a) * (double(k + 1) / sub);
      const double l = (q - p).norm();
      if (acc + l >= s) return p + (q - p) * ((s - acc) / std::max(l, 1e-300));
      acc += l;
    }
  }
  return poly.back();
}

double dense_projection(const std::vector<Vec3>& poly, const Vec3& q) {
  const int sub = 20000;
  double best = INFINITY, best_s = 0.0, acc = 0.0;
  for (std::size_t i = 1; i < poly.size(); ++i) {
    const Vec3 a = poly[i - 1], b = poly[i];
    const double len = (b - a).norm();
    for (int k = 0; k <= sub; ++k) {
      const double f = double(k) / sub;
      const double d = (a + (b - a) * f - q).norm();
      if (d < best - 1e-12) {
        best = d;
        best_s = acc + f * len;
      }
    }
    acc += len;
  }
  return best_s;
}

}  // namespace

TEST_SUITE("reference_sampler") {

TEST_CASE("straight segment from its start") {
  const std::vector<Vec3> poly{Vec3(0, 0, 0), Vec3(10, 0, 0)};
  const auto r = sample_reference(poly, Vec3::Zero(), 1.0, 0.1, 20);
  REQUIRE(r.points.size() == 20);
  for (int k = 0; k < 20; ++k) CHECK((r.points[k] - Vec3(0.1 * (k + 1), 0, 0)).norm() <= 1e-12);
  CHECK(r.spacing == doctest::Approx(0.1));
}

TEST_CASE("near the end the final vertex repeats") {
  const std::vector<Vec3> poly{Vec3(0, 0, 0), Vec3(5, 0, 0)};
  const auto r = sample_reference(poly, Vec3(4.95, 0, 0), 1.0, 0.1, 20);
  for (int k = 0; k < 20; ++k) CHECK((r.points[k] - Vec3(5, 0, 0)).norm() <= 1e-12);
}

TEST_CASE("L-shaped polyline wraps the corner by arc length") {
  const std::vector<Vec3> poly{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 1, 0)};
  const auto r = sample_reference(poly, Vec3::Zero(), 3.0, 0.1, 8);
  CHECK(r.spacing == doctest::Approx(0.3));
  for (int k = 0; k < 8; ++k) CHECK((r.points[k] - dense_point(poly, 0.3 * (k + 1))).norm() <= 1e-4);
  CHECK((r.points[3] - Vec3(1.0, 0.2, 0.0)).norm() <= 1e-12);
  CHECK(r.points[7] == Vec3(1, 1, 0));
}

TEST_CASE("off-path position projects onto the path") {
  const std::vector<Vec3> poly{Vec3(0, 0, 0), Vec3(5, 0, 0)};
  const auto r = sample_reference(poly, Vec3(2, 1, 0), 1.0, 0.1, 3);
  CHECK((r.points[0] - Vec3(2.1, 0, 0)).norm() <= 1e-12);
  CHECK((r.points[2] - Vec3(2.3, 0, 0)).norm() <= 1e-12);
}

TEST_CASE("single-vertex polyline repeats that vertex") {
  const std::vector<Vec3> poly{Vec3(1, 2, 3)};
  const auto r = sample_reference(poly, Vec3::Zero(), 1.0, 0.1, 5);
  for (const auto& p : r.points) CHECK(p == Vec3(1, 2, 3));
}

TEST_CASE("invalid arguments") {
  const std::vector<Vec3> poly{Vec3(0, 0, 0), Vec3(1, 0, 0)};
  CHECK_THROWS(sample_reference(std::vector<Vec3>{}, Vec3::Zero(), 1.0, 0.1, 5));
  CHECK_THROWS(sample_reference(poly, Vec3::Zero(), 0.0, 0.1, 5));
  CHECK_THROWS(sample_reference(poly, Vec3::Zero(), 1.0, 0.1, 0));
}

TEST_CASE("matches a finely resampled walk") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int t = 0; t < 20; ++t) {
    std::vector<Vec3> poly{Vec3::Zero()};
    for (int i = 0; i < 4; ++i) poly.push_back(poly.back() + Vec3(1.0 + u(rng) * 0.3, u(rng), 0.3 * u(rng)));
    const Vec3 q = poly[1] + Vec3(0.1 * u(rng), 0.1 * u(rng), 0.1 * u(rng));
    const double s0 = project_onto_polyline(poly, q);
    CHECK(std::abs(s0 - dense_projection(poly, q)) <= 1e-3);
    const auto r = sample_reference(poly, q, 1.2, 0.1, 30);
    for (int k = 0; k < 30; ++k)
      CHECK((r.points[k] - dense_point(poly, s0 + (k + 1) * 0.12)).norm() <= 1e-4);
  }
}

TEST_CASE("consecutive spacing never exceeds v_ref*tau and ends clamp") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    std::vector<Vec3> poly{Vec3::Zero()};
    for (int i = 0; i < 5; ++i) poly.push_back(poly.back() + Vec3(u(rng), u(rng), u(rng)));
    const auto r = sample_reference(poly, poly[0] + Vec3(u(rng), u(rng), u(rng)), 1.0, 0.1, 60);
    double prev = -1.0;
    for (std::size_t k = 0; k < r.points.size(); ++k) {
      if (k > 0) CHECK((r.points[k] - r.points[k - 1]).norm() <= 0.1 + 1e-12);
      const double s = project_onto_polyline(poly, r.points[k]);
      CHECK(s >= prev - 1e-9);
      prev = s;
    }
    CHECK(point_at_arc_length(poly, 1e6) == poly.back());
    CHECK(point_at_arc_length(poly, -1.0) == poly.front());
  }
}

}  // TEST_SUITE
