#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "uavmpc/sim_harness.hpp"

namespace uavmpc {

/// One benchmark setup: the world (explicit obstacles plus an optional random
/// cylinder field), endpoints, planner choice and every tunable.
struct Scenario {
  ObstacleWorld world;
  std::optional<CylinderFieldSpec> generator;
  PlannerKind planner = PlannerKind::mpc;
  EpisodeSettings settings;
  std::uint64_t seed = 0;

  bool operator==(const Scenario&) const = default;
};

/// Parses JSON scenario text. Omitted fields take their defaults; unknown keys and
/// invalid values throw ConfigError naming the field (syntax errors report line:column).
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);

/// Full JSON form of a scenario, every field explicit.
std::string dump_scenario(const Scenario& scenario);
void save_scenario(const Scenario& scenario, const std::filesystem::path& path);

/// Explicit obstacles plus the seeded cylinder field.
ObstacleWorld materialize_world(const Scenario& scenario);

/// Checks every sub-configuration against the materialized world. Throws ConfigError.
void validate_scenario(const Scenario& scenario);

/// 0 reached, 2 collided, 3 stalled or timeout.
int exit_code(Outcome outcome);
inline constexpr int kExitConfigError = 64;
inline constexpr int kExitIoError = 74;

struct ComparisonRow {
  std::string label;
  PlannerKind planner = PlannerKind::mpc;
  Outcome outcome = Outcome::timeout;
  Metrics metrics;
  double wall_time = 0.0;
};

ComparisonRow summarize(const std::string& label, const EpisodeLog& log);

/// Aligned text table: planner, outcome, motion time, length, energy.
std::string format_comparison_table(const std::vector<ComparisonRow>& rows);
void write_comparison_csv(const std::vector<ComparisonRow>& rows, const std::filesystem::path& path);
void write_comparison_json(const std::vector<ComparisonRow>& rows, const std::filesystem::path& path);

/// Runs the scenario with `planner` and writes <planner>_log.csv, <planner>_summary.json and
/// <planner>_plot.csv into out_dir (created if missing). Throws IoError if it cannot be written.
EpisodeLog run_and_write(const Scenario& scenario, PlannerKind planner,
                         const std::filesystem::path& out_dir);

}  // namespace uavmpc
