// uavmpc: run, compare and batch closed-loop planner episodes from JSON scenarios.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#ifdef UAVMPC_USE_OPENMP
#include <omp.h>
#endif

#include "uavmpc/errors.hpp"
#include "uavmpc/scenario.hpp"

namespace fs = std::filesystem;
using namespace uavmpc;

namespace {

fs::path default_out_dir() {
  const char* env = std::getenv("UAVMPC_OUT_DIR");
  return env && *env ? fs::path(env) : fs::path("out");
}

Scenario load_with_overrides(const fs::path& path) {
  Scenario sc = load_scenario(path);
  if (const char* env = std::getenv("UAVMPC_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      sc.seed = std::stoull(env, &used);
      if (env[used] != '\0') throw std::invalid_argument(env);
    } catch (const std::exception&) {
      throw ConfigError("UAVMPC_SEED", "expected a non-negative integer");
    }
    validate_scenario(sc);
  }
  return sc;
}

std::vector<PlannerKind> parse_planners(const std::vector<std::string>& names) {
  std::vector<PlannerKind> out;
  for (const auto& n : names) {
    if (n == "mpc") out.push_back(PlannerKind::mpc);
    else if (n == "apf") out.push_back(PlannerKind::apf);
    else throw ConfigError("--planners", "unknown planner '" + n + "'");
  }
  return out;
}

int worst(int a, int b) { return std::max(a, b); }

void print_outcome(const std::string& label, const EpisodeLog& log) {
  const Metrics m = compute_metrics(log);
  std::cout << label << ": " << to_string(log.planner) << " " << to_string(log.outcome)
            << "  time=" << m.motion_time << " s  length=" << m.motion_length << " m  energy=" << m.energy
            << "  (" << log.wall_time << " s wall)\n";
}

int cmd_run(const fs::path& scenario_path, const fs::path& out) {
  const Scenario sc = load_with_overrides(scenario_path);
  const EpisodeLog log = run_and_write(sc, sc.planner, out);
  print_outcome(scenario_path.stem().string(), log);
  return exit_code(log.outcome);
}

int cmd_compare(const fs::path& scenario_path, const std::vector<PlannerKind>& planners, const fs::path& out) {
  const Scenario sc = load_with_overrides(scenario_path);
  std::vector<ComparisonRow> rows;
  int code = 0;
  for (PlannerKind p : planners) {
    const EpisodeLog log = run_and_write(sc, p, out);
    rows.push_back(summarize(scenario_path.stem().string(), log));
    code = worst(code, exit_code(log.outcome));
  }
  std::cout << format_comparison_table(rows);
  write_comparison_csv(rows, out / "comparison.csv");
  write_comparison_json(rows, out / "comparison.json");
  return code;
}

int cmd_batch(const fs::path& dir, const std::vector<PlannerKind>& planners, int jobs, const fs::path& out) {
  if (!fs::is_directory(dir)) throw IoError(dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  std::vector<Scenario> scenarios;
  for (const auto& f : files) scenarios.push_back(load_with_overrides(f));

  struct Job {
    std::size_t scenario;
    PlannerKind planner;
  };
  std::vector<Job> work;
  for (std::size_t i = 0; i < scenarios.size(); ++i)
    for (PlannerKind p : planners) work.push_back({i, p});

  std::vector<std::optional<ComparisonRow>> results(work.size());
  std::vector<std::string> errors(work.size());
#ifdef UAVMPC_USE_OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(jobs)
#endif
  for (std::size_t k = 0; k < work.size(); ++k) {
    const auto& job = work[k];
    const std::string label = files[job.scenario].stem().string();
    try {
      const EpisodeLog log = run_and_write(scenarios[job.scenario], job.planner, out / label);
      results[k] = summarize(label, log);
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  }
  (void)jobs;

  std::vector<ComparisonRow> rows;
  int code = 0;
  for (std::size_t k = 0; k < work.size(); ++k) {
    if (results[k]) {
      rows.push_back(*results[k]);
      code = worst(code, exit_code(results[k]->outcome));
    } else {
      std::cerr << "error: " << files[work[k].scenario].string() << " (" << to_string(work[k].planner)
                << "): " << errors[k] << '\n';
      code = worst(code, kExitIoError);
    }
  }
  std::cout << format_comparison_table(rows);
  fs::create_directories(out);
  write_comparison_csv(rows, out / "batch.csv");
  write_comparison_json(rows, out / "batch.json");
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Receding-horizon MPC and APF planner benchmark"};
  app.require_subcommand(1);

  fs::path scenario_path;
  fs::path out = default_out_dir();
  std::vector<std::string> planner_names{"mpc", "apf"};
  fs::path batch_dir;
  int jobs = 1;
#ifdef UAVMPC_USE_OPENMP
  jobs = omp_get_max_threads();
#endif

  auto* run = app.add_subcommand("run", "Run one episode with the scenario's planner");
  run->add_option("scenario", scenario_path, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "Output directory (env UAVMPC_OUT_DIR)");

  auto* compare = app.add_subcommand("compare", "Run several planners on the same world and seed");
  compare->add_option("scenario", scenario_path, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  compare->add_option("--planners", planner_names, "Planners to run")->delimiter(',');
  compare->add_option("--out", out, "Output directory (env UAVMPC_OUT_DIR)");

  auto* batch = app.add_subcommand("batch", "Run every *.json scenario in a directory");
  batch->add_option("dir", batch_dir, "Scenario directory")->required()->check(CLI::ExistingDirectory);
  batch->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  batch->add_option("--planners", planner_names, "Planners to run")->delimiter(',');
  batch->add_option("--out", out, "Output directory (env UAVMPC_OUT_DIR)");

  auto* validate = app.add_subcommand("validate", "Check a scenario file");
  validate->add_option("scenario", scenario_path, "Scenario JSON file")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfigError;
  }

  try {
    if (*run) return cmd_run(scenario_path, out);
    if (*compare) return cmd_compare(scenario_path, parse_planners(planner_names), out);
    if (*batch) return cmd_batch(batch_dir, parse_planners(planner_names), jobs, out);
    if (*validate) {
      const Scenario sc = load_with_overrides(scenario_path);
      std::cout << scenario_path.string() << ": ok (" << materialize_world(sc).cylinders.size()
                << " cylinders, planner " << to_string(sc.planner) << ")\n";
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIoError;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIoError;
  }
  return 0;
}
