// Times the OpenMP kernels against their serial references.
//   bench_kernels [repeats] [batch_episodes]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#ifdef UAVMPC_USE_OPENMP
#include <omp.h>
#endif

#include "uavmpc/scenario.hpp"

using namespace uavmpc;
using Clock = std::chrono::steady_clock;

namespace {

template <typename F>
double best_of(int repeats, F&& f) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = Clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(Clock::now() - t0).count());
  }
  return best;
}

void report(const char* name, double serial, double parallel, bool same) {
  std::printf("%-10s serial %9.3f ms  parallel %9.3f ms  speedup %5.2fx  %s\n", name, 1e3 * serial, 1e3 * parallel,
              serial / parallel, same ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  const int repeats = argc > 1 ? std::atoi(argv[1]) : 20;
  const int episodes = argc > 2 ? std::atoi(argv[2]) : 4;
  int threads = 1;
#ifdef UAVMPC_USE_OPENMP
  threads = omp_get_max_threads();
#endif
  std::printf("threads: %d\n", threads);

  Scenario sc = load_scenario(std::filesystem::path(UAVMPC_SCENARIO_DIR) / "dense_cylinders.json");
  const ObstacleWorld world = materialize_world(sc);
  const EpisodeSettings& s = sc.settings;
  const Vec3 p = s.start + Vec3(0.5, 0.0, 0.0);

  SensorConfig dense = s.sensor;
  dense.azimuth_rays = 360;
  dense.elevation_rays = 90;
  PointCloud a, b;
  const double ts = best_of(repeats, [&] { a = sense_serial(world, p, dense); });
  const double tp = best_of(repeats, [&] { b = sense(world, p, dense); });
  report("sense", ts, tp, a.points == b.points);

  const VoxelGrid frame = local_grid_frame(p, s.sensor, s.mapping);
  const VoxelGrid raw = voxelize(a, frame.origin(), frame.resolution(), frame.dims());
  VoxelGrid ia, ib;
  const double radius = s.mapping.uav_size / 2;
  const double is = best_of(repeats, [&] { ia = inflate_serial(raw, radius); });
  const double ip = best_of(repeats, [&] { ib = inflate(raw, radius); });
  report("inflate", is, ip, ia.occupancy() == ib.occupancy());

  // Independent episodes: one after another, then fanned out across threads.
  std::vector<ObstacleWorld> worlds;
  for (int i = 0; i < episodes; ++i) {
    sc.seed = static_cast<std::uint64_t>(i + 1);
    worlds.push_back(materialize_world(sc));
  }
  EpisodeSettings short_run = s;
  short_run.episode.time_limit = 10.0;
  std::vector<EpisodeLog> serial_logs(episodes), parallel_logs(episodes);
  const double bs = best_of(1, [&] {
    for (int i = 0; i < episodes; ++i) serial_logs[i] = run_episode(worlds[i], PlannerKind::mpc, short_run);
  });
  const double bp = best_of(1, [&] {
#ifdef UAVMPC_USE_OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (int i = 0; i < episodes; ++i) parallel_logs[i] = run_episode(worlds[i], PlannerKind::mpc, short_run);
  });
  bool same = true;
  for (int i = 0; i < episodes; ++i) {
    same = same && serial_logs[i].samples.size() == parallel_logs[i].samples.size();
    for (std::size_t k = 0; same && k < serial_logs[i].samples.size(); ++k)
      same = serial_logs[i].samples[k].state == parallel_logs[i].samples[k].state;
  }
  report("batch", bs, bp, same);
  return 0;
}
