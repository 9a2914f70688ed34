#pragma once

// Metric local control: traversability mask, pinhole projection to a
// bird's-eye-view grid, distance-transform cost map, grid Dijkstra to the
// sub-goal point and a proportional path follower.
//
// BEV points are Eigen::Vector2d (forward, lateral) in meters in the robot
// frame; lateral is positive toward the image +u side.

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "tango/core.hpp"
#include "tango/simworld.hpp"
#include "tango/topograph.hpp"

namespace tango::metric {

/// Pixel (u, v) with planar depth z -> camera-frame point (lateral, down, forward).
template <class Scalar>
Eigen::Matrix<Scalar, 3, 1> unproject_pixel(Scalar u, Scalar v, Scalar z, const sim::CameraModel& cam) {
  return {(u - Scalar(cam.cx)) * z / Scalar(cam.fx), (v - Scalar(cam.cy)) * z / Scalar(cam.fy), z};
}

/// Camera-frame point (lateral, down, forward) -> pixel (u, v).
template <class Derived>
Eigen::Matrix<typename Derived::Scalar, 2, 1> project_point(const Eigen::MatrixBase<Derived>& p,
                                                            const sim::CameraModel& cam) {
  using Scalar = typename Derived::Scalar;
  return {Scalar(cam.cx) + Scalar(cam.fx) * p(0) / p(2), Scalar(cam.cy) + Scalar(cam.fy) * p(1) / p(2)};
}

/// Ground-plane drop of a camera-frame point.
template <class Derived>
Eigen::Vector2d to_bev(const Eigen::MatrixBase<Derived>& p) {
  return {double(p(2)), double(p(0))};
}

using TraversabilityMask = Grid<std::uint8_t>;

using TraversablePredicate = std::function<bool(const topo::Segment&)>;

TraversabilityMask classify_traversable(std::span<const topo::Segment> segments, int width, int height,
                                        const TraversablePredicate& is_traversable);

struct BevGrid {
  double resolution = 0.05;
  double forward_extent = 6.0;
  double lateral_extent = 3.0;

  int rows() const { return int(std::lround(forward_extent / resolution)) + 1; }
  int cols() const { return 2 * int(std::lround(lateral_extent / resolution)) + 1; }
  int center_col() const { return int(std::lround(lateral_extent / resolution)); }
  /// Robot sits at the center of this cell.
  Cell robot_cell() const { return {0, center_col()}; }
  bool contains(const Eigen::Vector2d& p) const;
  Cell cell_of(const Eigen::Vector2d& p) const;
  Eigen::Vector2d center_of(Cell c) const;
};

/// Unprojects the given pixels; points outside the BEV extent or with
/// non-positive depth are dropped.
std::vector<Eigen::Vector2d> unproject(std::span<const Eigen::Vector2i> pixels, const Grid<float>& depth,
                                       const sim::CameraModel& cam, const BevGrid& grid);

/// Traversable ground points for the cost map: every mask pixel, gap fill
/// between vertically adjacent mask pixels (far rows are sparser than the
/// grid), and the near-field wedge below the image extruded from the
/// bottom image row.
std::vector<Eigen::Vector2d> traversable_points(const TraversabilityMask& mask, const Grid<float>& depth,
                                                const sim::CameraModel& cam, const BevGrid& grid);

/// Same points rasterized straight into a BEV occupancy grid.
Grid<std::uint8_t> traversable_grid(const TraversabilityMask& mask, const Grid<float>& depth,
                                    const sim::CameraModel& cam, const BevGrid& grid);

/// Farthest (max forward) in-extent point of the segment; if no pixel falls
/// inside the extent, the extent-clamped point along the centroid bearing.
Result<Eigen::Vector2d> select_subgoal_point(const topo::Segment& segment, const Grid<float>& depth,
                                             const sim::CameraModel& cam, const BevGrid& grid);

struct CostMapParams {
  double saturation = 0.5;  // meters
  int box_size = 5;         // cells
  double robot_radius = 0.2;
  /// Extra cost on cells closer than `clearance` to an in-grid
  /// non-traversable cell; 0 weight disables it.
  double clearance = 0.25;
  double clearance_weight = 1.0;
};

inline constexpr double kBlocked = std::numeric_limits<double>::infinity();

struct BevCostMap {
  BevGrid grid;
  Grid<std::uint8_t> traversable;
  Grid<double> distance;  // meters to nearest non-traversable cell (outside the grid counts)
  Grid<double> raw_cost;  // saturated inverted distance, before smoothing
  Grid<double> clearance;  // meters to nearest in-grid non-traversable cell
  Grid<double> cost;       // smoothed plus clearance term; kBlocked off traversable cells
  Cell robot_cell;
  std::optional<Cell> goal_cell;
};

/// Exact Euclidean distance transform (meters) to the nearest zero cell;
/// cells outside the grid count as zero cells unless `border_blocked` is false.
Grid<double> distance_transform(const Grid<std::uint8_t>& traversable, double resolution, bool border_blocked = true);

/// Cost map from an explicit traversable grid.
Result<BevCostMap> build_costmap(Grid<std::uint8_t> traversable, const BevGrid& grid, const CostMapParams& params = {});

/// Sets the robot disc traversable when any of its cells already is.
void mark_robot_disc(Grid<std::uint8_t>& traversable, const BevGrid& grid, double robot_radius);

/// Rasterizes points and marks the robot disc traversable when observed
/// traversable ground reaches into it.
Result<BevCostMap> build_costmap(std::span<const Eigen::Vector2d> points, const BevGrid& grid,
                                 const CostMapParams& params = {});

struct LocalPlan {
  std::vector<Cell> cells;
  std::vector<Eigen::Vector2d> waypoints;
  Eigen::Vector2d subgoal_point = Eigen::Vector2d::Zero();
  double path_cost = 0.0;
  bool feasible = false;
};

/// Cost of one 8-neighbour move (in cells, scaled by the mean cell cost).
double step_cost(const BevCostMap& map, Cell a, Cell b);

/// Dijkstra from the robot cell; the goal is the reachable traversable cell
/// nearest to `goal` within `snap_radius` meters.
LocalPlan plan_path(const BevCostMap& map, const Eigen::Vector2d& goal, double snap_radius = 0.5);

struct FollowParams {
  double v_fixed = 0.25;
  double k_p = 1.5;
  double lookahead = 0.5;
  double omega_max = 1.0;
  double turn_in_place = std::numbers::pi / 2;
};

sim::ControlCommand follow_path(const LocalPlan& plan, const FollowParams& params = {});

}  // namespace tango::metric
