#include "uavmpc/sim_harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>

#include <json.hpp>

#include "uavmpc/errors.hpp"
#include "uavmpc/global_planner.hpp"
#include "uavmpc/reference_sampler.hpp"

namespace uavmpc {

namespace {

template <typename Fn>
void rethrow_as_config(const std::string& prefix, Fn&& fn) {
  try {
    fn();
  } catch (const ParameterError& e) {
    throw ConfigError(prefix + e.field(), e.reason());
  }
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << std::setprecision(17);
  return out;
}

/// Goal pulled in to at most `reach` from p along the straight line.
Vec3 attraction_point(const Vec3& p, const Vec3& goal, double reach) {
  const Vec3 d = goal - p;
  const double n = d.norm();
  return n <= reach ? goal : Vec3(p + d * (reach / n));
}

/// Marks every cell whose center lies outside `bounds` as occupied.
void block_outside(VoxelGrid& grid, const Aabb& bounds) {
  const auto& d = grid.dims();
  for (int z = 0; z < d[2]; ++z)
    for (int y = 0; y < d[1]; ++y)
      for (int x = 0; x < d[0]; ++x) {
        const Cell c{x, y, z};
        if (!bounds.contains(grid.cell_center(c))) grid.set_occupied(c);
      }
}

}  // namespace

std::string_view to_string(PlannerKind k) { return k == PlannerKind::mpc ? "mpc" : "apf"; }

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::reached: return "reached";
    case Outcome::collided: return "collided";
    case Outcome::stalled: return "stalled";
    case Outcome::timeout: return "timeout";
  }
  return "unknown";
}

void MappingConfig::validate() const {
  if (!(resolution > 0.0)) throw ParameterError("resolution", "must be > 0");
  if (!(uav_size >= 0.0)) throw ParameterError("uav_size", "must be >= 0");
  if (obstacle_cap < 1) throw ParameterError("obstacle_cap", "must be >= 1");
  if (!(grid_half_height > 0.0)) throw ParameterError("grid_half_height", "must be > 0");
}

void ReferenceConfig::validate() const {
  if (!(v_ref > 0.0)) throw ParameterError("v_ref", "must be > 0");
  if (horizon < 1) throw ParameterError("horizon", "must be >= 1");
}

void EpisodeConfig::validate() const {
  if (!(goal_tolerance > 0.0)) throw ParameterError("goal_tolerance", "must be > 0");
  if (!(time_limit > 0.0)) throw ParameterError("time_limit", "must be > 0");
  if (!(stall_window > 0.0)) throw ParameterError("stall_window", "must be > 0");
  if (!(stall_progress >= 0.0)) throw ParameterError("stall_progress", "must be >= 0");
}

void EpisodeSettings::validate(const ObstacleWorld& world) const {
  rethrow_as_config("", [&] { world.validate(); });
  rethrow_as_config("dynamics.", [&] { dynamics.validate(); });
  rethrow_as_config("reference.", [&] { reference.validate(); });
  rethrow_as_config("", [&] { sensor.validate(); });
  rethrow_as_config("mapping.", [&] { mapping.validate(); });
  rethrow_as_config("weights.", [&] { weights.validate(); });
  rethrow_as_config("apf.", [&] { apf.validate(); });
  rethrow_as_config("solver.", [&] { solver.validate(); });
  rethrow_as_config("episode.", [&] { episode.validate(); });
  const double clearance = 0.5 * mapping.uav_size;
  for (const auto& [name, q] : {std::pair{"start", start}, std::pair{"goal", goal}}) {
    if (!q.allFinite()) throw ConfigError(name, "must be finite");
    if (!world.bounds.contains(q)) throw ConfigError(name, "outside world bounds");
    if (world.surface_distance(q) < clearance) throw ConfigError(name, "inside an inflated obstacle");
  }
}

VoxelGrid local_grid_frame(const Vec3& position, const SensorConfig& sensor, const MappingConfig& mapping) {
  const Vec3 half(sensor.range, sensor.range, mapping.grid_half_height);
  std::array<int, 3> dims{};
  for (int i = 0; i < 3; ++i)
    dims[i] = std::max(1, static_cast<int>(std::ceil(2.0 * half[i] / mapping.resolution - 1e-9)));
  return VoxelGrid(position - half, mapping.resolution, dims);
}

LocalMap build_local_map(const ObstacleWorld& world, const Vec3& position, const Vec3& goal,
                         const EpisodeSettings& settings, bool plan_path) {
  LocalMap map;
  const VoxelGrid frame = local_grid_frame(position, settings.sensor, settings.mapping);
  const PointCloud cloud = sense(world, position, settings.sensor);
  map.raw = voxelize(cloud, frame.origin(), frame.resolution(), frame.dims());
  map.inflated = inflate(map.raw, 0.5 * settings.mapping.uav_size);
  if (!plan_path) return map;
  block_outside(map.inflated, world.bounds);

  const VoxelGrid& g = map.inflated;
  std::optional<Cell> start = g.world_to_cell(position);
  if (g.blocked(*start)) start = nearest_free_cell(g, position);
  if (!start) {
    map.polyline = {position};
    return map;
  }

  const Cell goal_cell = g.world_to_cell(goal);
  const bool goal_in_grid = !g.blocked(goal_cell);
  Cell target = goal_in_grid ? goal_cell : nearest_free_cell(g, goal).value_or(*start);

  CellPath path;
  try {
    path = plan_jps(g, *start, target);
  } catch (const NoPathError&) {
    map.fallback_target = true;
    target = nearest_free_cell(g, goal, reachable_cells(g, *start)).value_or(*start);
    path = plan_jps(g, *start, target);
  }
  map.path_cells = path.cells.size();
  map.polyline = to_world(path, g);
  if (goal_in_grid && target == goal_cell) map.polyline.back() = goal;
  return map;
}

EpisodeLog run_episode(const ObstacleWorld& world, PlannerKind planner, const EpisodeSettings& settings) {
  settings.validate(world);
  const auto wall_start = std::chrono::steady_clock::now();
  const DynamicsParams& dyn = settings.dynamics;
  const StateMatrices matrices = build_matrices(dyn);
  const double tau = dyn.tau;
  const auto window = static_cast<std::size_t>(std::llround(settings.episode.stall_window / tau));

  EpisodeLog log;
  log.planner = planner;
  MpcPlanner mpc(settings.weights, dyn, settings.solver);
  UavState x;
  x.p = settings.start;
  std::vector<double> goal_distance;

  for (std::size_t k = 0;; ++k) {
    EpisodeSample sample;
    sample.t = static_cast<double>(k) * tau;
    sample.state = x;
    sample.min_obstacle_distance = world.surface_distance(x.p);
    const double to_goal = (x.p - settings.goal).norm();
    goal_distance.push_back(to_goal);

    std::optional<Outcome> done;
    if (sample.min_obstacle_distance < 0.0 || !world.bounds.contains(x.p))
      done = Outcome::collided;
    else if (to_goal <= settings.episode.goal_tolerance)
      done = Outcome::reached;
    else if (sample.t >= settings.episode.time_limit - 1e-9)
      done = Outcome::timeout;
    else if (k >= window && goal_distance[k - window] - to_goal < settings.episode.stall_progress)
      done = Outcome::stalled;
    if (done) {
      log.samples.push_back(sample);
      log.outcome = *done;
      break;
    }

    Vec3 u = Vec3::Zero();
    PlannerDiagnostics& diag = sample.diagnostics;
    if (planner == PlannerKind::mpc) {
      const LocalMap map = build_local_map(world, x.p, settings.goal, settings);
      const ReferenceTrajectory ref = sample_reference(map.polyline, x.p, settings.reference.v_ref, tau,
                                                       settings.reference.horizon);
      const std::vector<Vec3> obstacles =
          obstacle_set(map.raw, x.p, settings.sensor.range, settings.mapping.obstacle_cap);
      const PlanResult plan = mpc.plan(x, ref, obstacles);
      u = plan.controls.front();
      diag.solver_iterations = plan.iterations;
      diag.solver_status = plan.status;
      diag.plan_cost = plan.cost.total;
      diag.obstacle_points = obstacles.size();
      diag.path_cells = map.path_cells;
      diag.fallback_target = map.fallback_target;
    } else {
      const LocalMap map = build_local_map(world, x.p, settings.goal, settings, false);
      const std::vector<Vec3> obstacles =
          obstacle_set(map.raw, x.p, settings.apf.rho0, settings.mapping.obstacle_cap);
      const Vec3 attract = attraction_point(x.p, settings.goal, settings.sensor.range);
      const Vec3 v_cmd = apf_step(x, attract, obstacles, settings.apf, dyn);
      u = apf_tracking_control(x, v_cmd, settings.apf, dyn);
      diag.obstacle_points = obstacles.size();
    }
    sample.control = u;
    log.samples.push_back(sample);
    x = step(x, u, matrices);
  }
  log.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  return log;
}

Metrics compute_metrics(std::span<const EpisodeSample> samples) {
  Metrics m;
  if (samples.empty()) return m;
  m.motion_time = samples.back().t - samples.front().t;
  for (std::size_t k = 0; k + 1 < samples.size(); ++k) {
    m.motion_length += (samples[k + 1].state.p - samples[k].state.p).norm();
    m.energy += samples[k].state.a.squaredNorm() * (samples[k + 1].t - samples[k].t);
  }
  return m;
}

SpeedProfile cruise_speed_profile(const EpisodeLog& log, double trim, double v_ref, double band) {
  SpeedProfile sp;
  if (log.samples.empty()) return sp;
  const double t0 = log.samples.front().t + trim;
  const double t1 = log.samples.back().t - trim;
  std::vector<double> speeds;
  for (const auto& s : log.samples)
    if (s.t >= t0 && s.t <= t1) speeds.push_back(s.state.v.norm());
  sp.samples = speeds.size();
  if (speeds.empty()) return sp;
  double sum = 0.0;
  std::size_t in_band = 0;
  for (double v : speeds) {
    sum += v;
    if (std::abs(v - v_ref) <= band) ++in_band;
  }
  sp.mean = sum / speeds.size();
  double var = 0.0;
  for (double v : speeds) var += (v - sp.mean) * (v - sp.mean);
  sp.stddev = std::sqrt(var / speeds.size());
  sp.fraction_in_band = static_cast<double>(in_band) / speeds.size();
  return sp;
}

void write_log_csv(const EpisodeLog& log, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << "t,px,py,pz,vx,vy,vz,ax,ay,az,ux,uy,uz,min_dist\n";
  for (const auto& s : log.samples) {
    out << s.t;
    for (const Vec3* v : {&s.state.p, &s.state.v, &s.state.a, &s.control})
      out << ',' << v->x() << ',' << v->y() << ',' << v->z();
    out << ',' << s.min_obstacle_distance << '\n';
  }
}

void write_plot_csv(const EpisodeLog& log, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << "t,x,y,z,speed\n";
  for (const auto& s : log.samples)
    out << s.t << ',' << s.state.p.x() << ',' << s.state.p.y() << ',' << s.state.p.z() << ','
        << s.state.v.norm() << '\n';
}

void write_summary_json(const EpisodeLog& log, const std::filesystem::path& path) {
  const Metrics m = compute_metrics(log);
  double min_dist = std::numeric_limits<double>::infinity();
  int max_iter = 0;
  std::size_t not_converged = 0;
  for (const auto& s : log.samples) {
    min_dist = std::min(min_dist, s.min_obstacle_distance);
    max_iter = std::max(max_iter, s.diagnostics.solver_iterations);
    if (s.diagnostics.solver_status != SolveStatus::converged) ++not_converged;
  }
  nlohmann::json j = {
      {"planner", to_string(log.planner)},
      {"outcome", to_string(log.outcome)},
      {"motion_time", m.motion_time},
      {"motion_length", m.motion_length},
      {"energy", m.energy},
      {"samples", log.samples.size()},
      {"min_obstacle_distance", std::isfinite(min_dist) ? nlohmann::json(min_dist) : nlohmann::json(nullptr)},
      {"max_solver_iterations", max_iter},
      {"unconverged_solves", log.planner == PlannerKind::mpc ? not_converged : 0},
      {"wall_time", log.wall_time},
  };
  auto out = open_for_write(path);
  out << j.dump(2) << '\n';
}

}  // namespace uavmpc
