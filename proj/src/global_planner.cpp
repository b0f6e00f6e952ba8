#include "uavmpc/global_planner.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <queue>
#include <tuple>

#include "uavmpc/errors.hpp"

namespace uavmpc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTieEps = 1e-9;
constexpr int kCenter = 13;
constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

// Offsets inside the 3x3x3 neighbourhood are indexed (dx+1) + 3(dy+1) + 9(dz+1).
constexpr int cube_index(int dx, int dy, int dz) { return (dx + 1) + 3 * (dy + 1) + 9 * (dz + 1); }
constexpr int cube_index(const Cell& c) { return cube_index(c.x, c.y, c.z); }
constexpr Cell cube_offset(int i) { return {i % 3 - 1, (i / 3) % 3 - 1, i / 9 - 1}; }

int degree(const Cell& d) { return (d.x != 0) + (d.y != 0) + (d.z != 0); }

bool in_cube(const Cell& c) {
  return c.x >= -1 && c.x <= 1 && c.y >= -1 && c.y <= 1 && c.z >= -1 && c.z <= 1;
}

/// Cells a move by `d` from `from` must find free: the target plus every partial sub-step.
template <typename Fn>
void for_each_swept_cell(const Cell& from, const Cell& d, Fn&& fn) {
  for (int mx = 0; mx <= (d.x != 0); ++mx)
    for (int my = 0; my <= (d.y != 0); ++my)
      for (int mz = 0; mz <= (d.z != 0); ++mz)
        if (mx || my || mz) fn(Cell{from.x + mx * d.x, from.y + my * d.y, from.z + mz * d.z});
}

std::uint32_t swept_mask(const Cell& from, const Cell& d) {
  std::uint32_t m = 0;
  for_each_swept_cell(from, d, [&](const Cell& c) { m |= 1u << cube_index(c); });
  return m;
}

/// Local pruning tables. For a node entered along direction d (parent at -d), a neighbour
/// is pruned when some path from the parent that avoids the node, stays in the 3x3x3
/// neighbourhood and is legal is strictly shorter than parent->node->neighbour, or equally
/// long but starting with a move of higher degree than d.
struct PruneTables {
  std::array<std::uint32_t, 27> move_req{};
  std::array<std::uint32_t, 27> natural{};
  std::array<std::vector<int>, 27> proper_subdirs;
  std::array<std::array<std::vector<std::uint32_t>, 27>, 27> alternatives;

  PruneTables() {
    for (int i = 0; i < 27; ++i) {
      if (i == kCenter) continue;
      const Cell d = cube_offset(i);
      move_req[i] = swept_mask({0, 0, 0}, d);
      for_each_swept_cell({0, 0, 0}, d, [&](const Cell& s) {
        natural[i] |= 1u << cube_index(s);
        if (cube_index(s) != i) proper_subdirs[i].push_back(cube_index(s));
      });
      std::sort(proper_subdirs[i].begin(), proper_subdirs[i].end());
      build_alternatives(i);
    }
  }

  void build_alternatives(int di) {
    const Cell d = cube_offset(di);
    const double len_d = std::sqrt(double(degree(d)));
    const int parent = cube_index(Cell{-d.x, -d.y, -d.z});
    std::array<double, 27> len_pi{};
    for (int t = 0; t < 27; ++t) len_pi[t] = len_d + std::sqrt(double(degree(cube_offset(t))));
    const double bound = len_d + std::sqrt(3.0) + kTieEps;

    std::function<void(int, std::uint32_t, double, int, std::uint32_t)> dfs =
        [&](int at, std::uint32_t visited, double len, int first_deg, std::uint32_t req) {
          const Cell a = cube_offset(at);
          for (int q = 0; q < 27; ++q) {
            if (q == kCenter || (visited >> q & 1u)) continue;
            const Cell step = cube_offset(q) - a;
            if (!in_cube(step) || (step.x == 0 && step.y == 0 && step.z == 0)) continue;
            const double nl = len + std::sqrt(double(degree(step)));
            if (nl > bound) continue;
            const int fd = first_deg == 0 ? degree(step) : first_deg;
            const std::uint32_t nreq = req | swept_mask(a, step);
            const bool shorter = nl < len_pi[q] - kTieEps;
            const bool tie_preferred = std::abs(nl - len_pi[q]) <= kTieEps && fd > degree(d);
            if (shorter || tie_preferred) alternatives[di][q].push_back(nreq);
            dfs(q, visited | (1u << q), nl, fd, nreq);
          }
        };
    dfs(parent, 1u << parent, 0.0, 0, 1u << parent);

    for (auto& alts : alternatives[di]) {
      std::sort(alts.begin(), alts.end(),
                [](std::uint32_t a, std::uint32_t b) { return __builtin_popcount(a) < __builtin_popcount(b); });
      std::vector<std::uint32_t> minimal;
      for (std::uint32_t m : alts) {
        const bool dominated = std::any_of(minimal.begin(), minimal.end(),
                                           [m](std::uint32_t k) { return (k & m) == k; });
        if (!dominated) minimal.push_back(m);
      }
      alts = std::move(minimal);
    }
  }

  bool legal(int t, std::uint32_t free) const { return (move_req[t] & free) == move_req[t]; }

  bool pruned(int di, int t, std::uint32_t free) const {
    const Cell d = cube_offset(di);
    if (t == cube_index(Cell{-d.x, -d.y, -d.z})) return true;
    for (std::uint32_t m : alternatives[di][t])
      if ((m & free) == m) return true;
    return false;
  }

  std::uint32_t successors(int di, std::uint32_t free) const {
    std::uint32_t out = 0;
    for (int t = 0; t < 27; ++t) {
      if (t == kCenter || !legal(t, free)) continue;
      if (di < 0 || !pruned(di, t, free)) out |= 1u << t;
    }
    return out;
  }

  bool has_forced(int di, std::uint32_t free) const {
    for (int t = 0; t < 27; ++t) {
      if (t == kCenter || (natural[di] >> t & 1u) || !legal(t, free)) continue;
      if (!pruned(di, t, free)) return true;
    }
    return false;
  }
};

const PruneTables& prune_tables() {
  static const PruneTables tables;
  return tables;
}

std::uint32_t free_mask(const VoxelGrid& grid, const Cell& c) {
  std::uint32_t m = 0;
  for (int i = 0; i < 27; ++i)
    if (!grid.blocked(c + cube_offset(i))) m |= 1u << i;
  return m;
}

void check_endpoints(const VoxelGrid& grid, const Cell& start, const Cell& goal) {
  if (grid.blocked(start)) throw ArgumentError("planner: start cell is out of bounds or occupied");
  if (grid.blocked(goal)) throw ArgumentError("planner: goal cell is out of bounds or occupied");
}

double octile_distance(const Cell& a, const Cell& b, double res) {
  std::array<int, 3> d{std::abs(a.x - b.x), std::abs(a.y - b.y), std::abs(a.z - b.z)};
  std::sort(d.begin(), d.end());
  return res * (std::sqrt(3.0) * d[0] + std::sqrt(2.0) * (d[1] - d[0]) + (d[2] - d[1]));
}

using QueueEntry = std::tuple<double, std::size_t>;
using OpenList = std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<>>;

Cell sign_of(const Cell& c) {
  auto s = [](int v) { return (v > 0) - (v < 0); };
  return {s(c.x), s(c.y), s(c.z)};
}

class JumpPointSearch {
public:
  JumpPointSearch(const VoxelGrid& grid, const Cell& goal)
      : grid_(grid), goal_(goal), tables_(prune_tables()) {}

  std::optional<Cell> jump(Cell x, int di) const {
    const Cell d = cube_offset(di);
    std::uint32_t free = free_mask(grid_, x);
    while (true) {
      if (!tables_.legal(di, free)) return std::nullopt;
      x = x + d;
      if (x == goal_) return x;
      free = free_mask(grid_, x);
      if (tables_.has_forced(di, free)) return x;
      for (int sub : tables_.proper_subdirs[di])
        if (tables_.legal(sub, free) && jump(x, sub)) return x;
    }
  }

private:
  const VoxelGrid& grid_;
  Cell goal_;
  const PruneTables& tables_;
};

CellPath reconstruct(const VoxelGrid& grid, const std::vector<std::size_t>& parent, std::size_t goal_idx) {
  std::vector<Cell> waypoints;
  for (std::size_t i = goal_idx; i != kNone; i = parent[i]) waypoints.push_back(grid.cell_of(i));
  std::reverse(waypoints.begin(), waypoints.end());

  CellPath path;
  path.cells.push_back(waypoints.front());
  for (std::size_t k = 1; k < waypoints.size(); ++k) {
    const Cell step = sign_of(waypoints[k] - waypoints[k - 1]);
    Cell c = waypoints[k - 1];
    while (c != waypoints[k]) {
      c = c + step;
      path.cells.push_back(c);
    }
  }
  path.cost = path_cost(path.cells, grid.resolution());
  return path;
}

}  // namespace

bool move_allowed(const VoxelGrid& grid, const Cell& from, const Cell& dir) {
  bool ok = true;
  for_each_swept_cell(from, dir, [&](const Cell& c) { ok = ok && !grid.blocked(c); });
  return ok;
}

double step_length(const Cell& dir, double resolution) {
  return resolution * std::sqrt(double(degree(dir)));
}

double path_cost(const std::vector<Cell>& cells, double resolution) {
  double cost = 0.0;
  for (std::size_t k = 1; k < cells.size(); ++k) {
    const Cell d = cells[k] - cells[k - 1];
    cost += resolution * std::sqrt(double(d.x * d.x + d.y * d.y + d.z * d.z));
  }
  return cost;
}

CellPath plan_jps(const VoxelGrid& grid, const Cell& start, const Cell& goal, SearchStats* stats) {
  check_endpoints(grid, start, goal);
  if (start == goal) return CellPath{{start}, 0.0};

  const PruneTables& tables = prune_tables();
  const JumpPointSearch jps(grid, goal);
  const double res = grid.resolution();
  const std::size_t n = grid.size();
  std::vector<double> g(n, kInf);
  std::vector<std::size_t> parent(n, kNone);
  std::vector<std::int8_t> dir(n, -1);
  std::vector<std::uint8_t> closed(n, 0);
  std::vector<Cell> expanded;

  OpenList open;
  const std::size_t s = grid.index(start);
  const std::size_t t = grid.index(goal);
  g[s] = 0.0;
  open.emplace(octile_distance(start, goal, res), s);

  while (!open.empty()) {
    const auto [f, i] = open.top();
    open.pop();
    if (closed[i]) continue;
    closed[i] = 1;
    const Cell c = grid.cell_of(i);
    expanded.push_back(c);
    if (i == t) break;

    const std::uint32_t succ = tables.successors(dir[i], free_mask(grid, c));
    for (int di = 0; di < 27; ++di) {
      if (!(succ >> di & 1u)) continue;
      const auto y = jps.jump(c, di);
      if (!y) continue;
      const std::size_t j = grid.index(*y);
      if (closed[j]) continue;
      const Cell delta = *y - c;
      const int steps = std::max({std::abs(delta.x), std::abs(delta.y), std::abs(delta.z)});
      const double ng = g[i] + steps * step_length(cube_offset(di), res);
      if (ng < g[j] - kTieEps) {
        g[j] = ng;
        parent[j] = i;
        dir[j] = static_cast<std::int8_t>(di);
        open.emplace(ng + octile_distance(*y, goal, res), j);
      }
    }
  }
  if (stats) stats->expanded = expanded.size();
  if (!closed[t]) throw NoPathError("plan_jps: goal unreachable", std::move(expanded));
  return reconstruct(grid, parent, t);
}

CellPath plan_astar(const VoxelGrid& grid, const Cell& start, const Cell& goal, SearchStats* stats,
                    bool use_heuristic) {
  check_endpoints(grid, start, goal);
  const double res = grid.resolution();
  const auto h = [&](const Cell& c) {
    if (!use_heuristic) return 0.0;
    const Cell d = c - goal;
    return res * std::sqrt(double(d.x * d.x + d.y * d.y + d.z * d.z));
  };

  const std::size_t n = grid.size();
  std::vector<double> g(n, kInf);
  std::vector<std::size_t> parent(n, kNone);
  std::vector<std::uint8_t> closed(n, 0);
  std::vector<Cell> expanded;

  OpenList open;
  const std::size_t s = grid.index(start);
  const std::size_t t = grid.index(goal);
  g[s] = 0.0;
  open.emplace(h(start), s);
  while (!open.empty()) {
    const auto [f, i] = open.top();
    open.pop();
    if (closed[i]) continue;
    closed[i] = 1;
    const Cell c = grid.cell_of(i);
    expanded.push_back(c);
    if (i == t) break;
    for (int di = 0; di < 27; ++di) {
      if (di == kCenter) continue;
      const Cell d = cube_offset(di);
      if (!move_allowed(grid, c, d)) continue;
      const Cell y = c + d;
      const std::size_t j = grid.index(y);
      if (closed[j]) continue;
      const double ng = g[i] + step_length(d, res);
      if (ng < g[j] - kTieEps) {
        g[j] = ng;
        parent[j] = i;
        open.emplace(ng + h(y), j);
      }
    }
  }
  if (stats) stats->expanded = expanded.size();
  if (!closed[t]) throw NoPathError("plan_astar: goal unreachable", std::move(expanded));
  return reconstruct(grid, parent, t);
}

std::vector<Vec3> to_world(const CellPath& path, const VoxelGrid& grid) {
  std::vector<Vec3> pts;
  pts.reserve(path.cells.size());
  for (const Cell& c : path.cells) pts.push_back(grid.cell_center(c));
  return pts;
}

std::vector<Cell> reachable_cells(const VoxelGrid& grid, const Cell& start) {
  if (grid.blocked(start)) return {};
  std::vector<std::uint8_t> seen(grid.size(), 0);
  std::vector<Cell> out;
  std::deque<Cell> queue{start};
  seen[grid.index(start)] = 1;
  while (!queue.empty()) {
    const Cell c = queue.front();
    queue.pop_front();
    out.push_back(c);
    for (int di = 0; di < 27; ++di) {
      if (di == kCenter) continue;
      const Cell d = cube_offset(di);
      if (!move_allowed(grid, c, d)) continue;
      const std::size_t j = grid.index(c + d);
      if (seen[j]) continue;
      seen[j] = 1;
      queue.push_back(c + d);
    }
  }
  return out;
}

std::optional<Cell> nearest_free_cell(const VoxelGrid& grid, const Vec3& target,
                                      const std::vector<Cell>& candidates) {
  std::optional<Cell> best;
  double best_d = kInf;
  const auto consider = [&](const Cell& c) {
    if (grid.blocked(c)) return;
    const double d = (grid.cell_center(c) - target).squaredNorm();
    if (d < best_d || (d == best_d && best && c < *best)) {
      best_d = d;
      best = c;
    }
  };
  if (candidates.empty()) {
    for (std::size_t i = 0; i < grid.size(); ++i) consider(grid.cell_of(i));
  } else {
    for (const Cell& c : candidates) consider(c);
  }
  return best;
}

}  // namespace uavmpc
