#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "uavmpc/apf_baseline.hpp"
#include "uavmpc/dynamics.hpp"
#include "uavmpc/mpc_optimizer.hpp"
#include "uavmpc/world_mapping.hpp"

namespace uavmpc {

enum class PlannerKind { mpc, apf };
enum class Outcome { reached, collided, stalled, timeout };

std::string_view to_string(PlannerKind k);
std::string_view to_string(Outcome o);

struct MappingConfig {
  double resolution = 0.1;
  /// Vehicle diameter; the JPS grid is inflated by half of it.
  double uav_size = 0.5;
  std::size_t obstacle_cap = 500;
  /// Vertical half-extent of the local grid around the vehicle.
  double grid_half_height = 3.0;

  void validate() const;
  bool operator==(const MappingConfig&) const = default;
};

struct ReferenceConfig {
  double v_ref = 1.0;
  int horizon = 20;

  void validate() const;
  bool operator==(const ReferenceConfig&) const = default;
};

struct EpisodeConfig {
  double goal_tolerance = 0.2;
  double time_limit = 120.0;
  /// Stalled when the goal distance shrinks by less than stall_progress over stall_window seconds.
  double stall_window = 10.0;
  double stall_progress = 0.1;

  void validate() const;
  bool operator==(const EpisodeConfig&) const = default;
};

struct EpisodeSettings {
  Vec3 start = Vec3::Zero();
  Vec3 goal = Vec3::Zero();
  DynamicsParams dynamics;
  ReferenceConfig reference;
  SensorConfig sensor;
  MappingConfig mapping;
  CostWeights weights;
  ApfParams apf;
  SolverConfig solver;
  EpisodeConfig episode;

  /// Throws ConfigError naming the offending field.
  void validate(const ObstacleWorld& world) const;
  bool operator==(const EpisodeSettings&) const = default;
};

struct PlannerDiagnostics {
  int solver_iterations = 0;
  SolveStatus solver_status = SolveStatus::converged;
  double plan_cost = 0.0;
  std::size_t obstacle_points = 0;
  std::size_t path_cells = 0;
  /// The goal was unreachable in the local grid; the nearest reachable cell was targeted.
  bool fallback_target = false;
};

struct EpisodeSample {
  double t = 0.0;
  UavState state;
  /// Jerk applied from t to t + tau (zero on the final sample).
  Vec3 control = Vec3::Zero();
  double min_obstacle_distance = 0.0;
  PlannerDiagnostics diagnostics;
};

struct EpisodeLog {
  PlannerKind planner = PlannerKind::mpc;
  std::vector<EpisodeSample> samples;
  Outcome outcome = Outcome::timeout;
  double wall_time = 0.0;
};

struct Metrics {
  double motion_time = 0.0;
  double motion_length = 0.0;
  /// Acceleration integral, sum of |a_k|^2 (t_{k+1} - t_k).
  double energy = 0.0;
};

/// Output of one sense -> map -> global plan cycle.
struct LocalMap {
  VoxelGrid raw;
  VoxelGrid inflated;
  std::vector<Vec3> polyline;
  std::size_t path_cells = 0;
  bool fallback_target = false;
};

/// Empty local voxel grid centered on `position`: +-range horizontally, +-grid_half_height vertically.
VoxelGrid local_grid_frame(const Vec3& position, const SensorConfig& sensor, const MappingConfig& mapping);

/// Senses, voxelizes, inflates and runs JPS toward `goal` (or the best reachable cell).
/// Inflated cells outside the world bounds are blocked for the path search.
LocalMap build_local_map(const ObstacleWorld& world, const Vec3& position, const Vec3& goal,
                         const EpisodeSettings& settings, bool plan_path = true);

/// Closed-loop episode. Throws ConfigError before simulating if the settings are invalid.
EpisodeLog run_episode(const ObstacleWorld& world, PlannerKind planner, const EpisodeSettings& settings);

Metrics compute_metrics(std::span<const EpisodeSample> samples);
inline Metrics compute_metrics(const EpisodeLog& log) { return compute_metrics(log.samples); }

/// Mean and standard deviation of speed over samples with t in [t0 + trim, t_end - trim].
struct SpeedProfile {
  double mean = 0.0;
  double stddev = 0.0;
  /// Fraction of those samples whose speed lies within v_ref +- band.
  double fraction_in_band = 0.0;
  std::size_t samples = 0;
};
SpeedProfile cruise_speed_profile(const EpisodeLog& log, double trim, double v_ref, double band);

/// One row per sample: t,px,py,pz,vx,vy,vz,ax,ay,az,ux,uy,uz,min_dist.
void write_log_csv(const EpisodeLog& log, const std::filesystem::path& path);
/// Plot series: t,x,y,z,speed (top view, 3D path and speed profile).
void write_plot_csv(const EpisodeLog& log, const std::filesystem::path& path);
/// Structured per-episode summary (outcome, metrics, solver statistics).
void write_summary_json(const EpisodeLog& log, const std::filesystem::path& path);

}  // namespace uavmpc
