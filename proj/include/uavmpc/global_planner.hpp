#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "uavmpc/world_mapping.hpp"

namespace uavmpc {

/// Grid path with every intermediate cell listed; consecutive cells are 26-neighbours.
struct CellPath {
  std::vector<Cell> cells;
  double cost = 0.0;
};

struct SearchStats {
  std::size_t expanded = 0;
};

/// Goal not reachable from start. `frontier()` holds the cells the search expanded.
class NoPathError : public std::runtime_error {
public:
  NoPathError(const std::string& what, std::vector<Cell> frontier)
      : std::runtime_error(what), frontier_(std::move(frontier)) {}
  const std::vector<Cell>& frontier() const noexcept { return frontier_; }

private:
  std::vector<Cell> frontier_;
};

/// A move from `from` by unit offset `dir` is legal when the target and every cell
/// the move cuts through (all partial sub-steps) are free and in bounds.
bool move_allowed(const VoxelGrid& grid, const Cell& from, const Cell& dir);

/// Length of a single step along dir: res * sqrt(number of non-zero components).
double step_length(const Cell& dir, double resolution);

/// 26-connected Jump Point Search. Start and goal must be free in `grid`.
CellPath plan_jps(const VoxelGrid& grid, const Cell& start, const Cell& goal,
                  SearchStats* stats = nullptr);

/// Plain 26-connected A* with a Euclidean heuristic; Dijkstra when `use_heuristic` is false.
CellPath plan_astar(const VoxelGrid& grid, const Cell& start, const Cell& goal,
                    SearchStats* stats = nullptr, bool use_heuristic = true);

/// Recomputes the cost of a cell sequence as the sum of its step lengths.
double path_cost(const std::vector<Cell>& cells, double resolution);

/// World-frame cell centers, one per path cell.
std::vector<Vec3> to_world(const CellPath& path, const VoxelGrid& grid);

/// Every free cell connected to start under the legal-move rule.
std::vector<Cell> reachable_cells(const VoxelGrid& grid, const Cell& start);

/// Free cell of `candidates` (or of the whole grid when empty) nearest to target.
/// Ties resolve to the lexicographically smallest cell.
std::optional<Cell> nearest_free_cell(const VoxelGrid& grid, const Vec3& target,
                                      const std::vector<Cell>& candidates = {});

}  // namespace uavmpc
