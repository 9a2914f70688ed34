#include "tango/metricplanner.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace tango::metric {

TraversabilityMask classify_traversable(std::span<const topo::Segment> segments, int width, int height,
                                        const TraversablePredicate& is_traversable) {
  TraversabilityMask mask = TraversabilityMask::Zero(height, width);
  for (const topo::Segment& s : segments) {
    if (!is_traversable(s)) continue;
    for (const topo::PixelRun& r : s.pixel_runs) mask.row(r.row).segment(r.col_begin, r.length).setConstant(1);
  }
  return mask;
}

bool BevGrid::contains(const Eigen::Vector2d& p) const {
  return p.x() >= 0.0 && p.x() <= forward_extent && std::abs(p.y()) <= lateral_extent;
}

namespace {

// Same as std::lround, without the libm call.
int round_half_away(double v) { return v >= 0 ? int(v + 0.5) : -int(-v + 0.5); }

}  // namespace

Cell BevGrid::cell_of(const Eigen::Vector2d& p) const {
  return {round_half_away(p.x() / resolution), center_col() + round_half_away(p.y() / resolution)};
}

Eigen::Vector2d BevGrid::center_of(Cell c) const {
  return {c.row * resolution, (c.col - center_col()) * resolution};
}

std::vector<Eigen::Vector2d> unproject(std::span<const Eigen::Vector2i> pixels, const Grid<float>& depth,
                                       const sim::CameraModel& cam, const BevGrid& grid) {
  std::vector<Eigen::Vector2d> out;
  out.reserve(pixels.size());
  for (const Eigen::Vector2i& px : pixels) {
    const double z = depth(px.y(), px.x());
    if (!(z > 0)) continue;
    const Eigen::Vector2d p = to_bev(unproject_pixel<double>(px.x(), px.y(), z, cam));
    if (grid.contains(p)) out.push_back(p);
  }
  return out;
}

namespace {

template <class Emit>
void push_segment(const Emit& emit, const Eigen::Vector2d& a, const Eigen::Vector2d& b, double step,
                  const BevGrid& grid) {
  const int n = int(std::ceil((b - a).norm() / step));
  for (int k = 1; k < n; ++k) {
    const Eigen::Vector2d p = a + (b - a) * (double(k) / n);
    if (grid.contains(p)) emit(p);
  }
}

template <class Emit>
void for_each_traversable_point(const TraversabilityMask& mask, const Grid<float>& depth, const sim::CameraModel& cam,
                                const BevGrid& grid, const Emit& emit) {
  const int H = int(mask.rows()), W = int(mask.cols());
  const double step = grid.resolution / 2;
  for (int v = 0; v < H; ++v)
    for (int u = 0; u < W; ++u) {
      if (!mask(v, u) || !(depth(v, u) > 0)) continue;
      const Eigen::Vector2d p = to_bev(unproject_pixel<double>(u, v, depth(v, u), cam));
      if (p.x() > grid.forward_extent + grid.resolution) continue;
      if (grid.contains(p)) emit(p);
      if (v > 0 && mask(v - 1, u) && depth(v - 1, u) > 0) {
        const Eigen::Vector2d q = to_bev(unproject_pixel<double>(u, v - 1, depth(v - 1, u), cam));
        if ((q - p).norm() > step) push_segment(emit, p, q, step, grid);
      }
      if (v == H - 1) push_segment(emit, Eigen::Vector2d::Zero(), p, step, grid);
    }
}

// Grid geometry hoisted out of the per-point loop.
struct Rasterizer {
  Grid<std::uint8_t>& trav;
  double inv_res;
  int rows, cols, center;
  Rasterizer(Grid<std::uint8_t>& t, const BevGrid& g)
      : trav(t), inv_res(1.0 / g.resolution), rows(g.rows()), cols(g.cols()), center(g.center_col()) {}
  void operator()(const Eigen::Vector2d& p) const {
    const int r = round_half_away(p.x() * inv_res), c = center + round_half_away(p.y() * inv_res);
    if (r >= 0 && c >= 0 && r < rows && c < cols) trav(r, c) = 1;
  }
};

}  // namespace

std::vector<Eigen::Vector2d> traversable_points(const TraversabilityMask& mask, const Grid<float>& depth,
                                                const sim::CameraModel& cam, const BevGrid& grid) {
  std::vector<Eigen::Vector2d> out;
  for_each_traversable_point(mask, depth, cam, grid, [&](const Eigen::Vector2d& p) { out.push_back(p); });
  return out;
}

Grid<std::uint8_t> traversable_grid(const TraversabilityMask& mask, const Grid<float>& depth,
                                    const sim::CameraModel& cam, const BevGrid& grid) {
  Grid<std::uint8_t> trav = Grid<std::uint8_t>::Zero(grid.rows(), grid.cols());
  for_each_traversable_point(mask, depth, cam, grid, Rasterizer(trav, grid));
  return trav;
}

Result<Eigen::Vector2d> select_subgoal_point(const topo::Segment& segment, const Grid<float>& depth,
                                             const sim::CameraModel& cam, const BevGrid& grid) {
  if (segment.pixel_runs.empty()) throw Error(Errc::InvalidArgument, "select_subgoal_point: empty segment");
  bool any_depth = false;
  std::optional<Eigen::Vector2d> best;
  for (const topo::PixelRun& r : segment.pixel_runs)
    for (int u = r.col_begin; u < r.col_begin + r.length; ++u) {
      const double z = depth(r.row, u);
      if (!(z > 0)) continue;
      any_depth = true;
      const Eigen::Vector2d p = to_bev(unproject_pixel<double>(u, r.row, z, cam));
      if (grid.contains(p) && (!best || p.x() > best->x())) best = p;
    }
  if (best) return *best;
  if (!any_depth) return Errc::SubgoalProjectionFailed;
  const double slope = (segment.centroid_px.x() - cam.cx) / cam.fx;
  double fwd = grid.forward_extent;
  if (std::abs(slope) * fwd > grid.lateral_extent) fwd = grid.lateral_extent / std::abs(slope);
  return Eigen::Vector2d(fwd, slope * fwd);
}

// ---------------------------------------------------------------------------
// Cost map

namespace {

// 1-D squared distance transform of sampled function f (lower envelope of parabolas).
void edt_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v, std::vector<double>& z) {
  const int n = int(f.size());
  constexpr double inf = std::numeric_limits<double>::infinity();
  int k = 0;
  v[0] = 0;
  z[0] = -inf;
  z[1] = inf;
  for (int q = 1; q < n; ++q) {
    if (f[std::size_t(q)] == inf) continue;
    if (f[std::size_t(v[0])] == inf) {
      v[0] = q;
      continue;
    }
    double s;
    while (true) {
      const int p = v[std::size_t(k)];
      s = ((f[std::size_t(q)] + double(q) * q) - (f[std::size_t(p)] + double(p) * p)) / (2.0 * q - 2.0 * p);
      if (s <= z[std::size_t(k)] && k > 0) --k;
      else break;
    }
    ++k;
    v[std::size_t(k)] = q;
    z[std::size_t(k)] = s;
    z[std::size_t(k + 1)] = inf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[std::size_t(k + 1)] < q) ++k;
    const int p = v[std::size_t(k)];
    d[std::size_t(q)] = f[std::size_t(p)] == inf ? inf : double(q - p) * (q - p) + f[std::size_t(p)];
  }
}

}  // namespace

Grid<double> distance_transform(const Grid<std::uint8_t>& traversable, double resolution, bool border_blocked) {
  const int R = int(traversable.rows()) + 2, C = int(traversable.cols()) + 2;
  constexpr double inf = std::numeric_limits<double>::infinity();
  Grid<double> sq = Grid<double>::Constant(R, C, border_blocked ? 0.0 : inf);
  sq.block(1, 1, R - 2, C - 2) = (traversable != 0).select(Grid<double>::Constant(R - 2, C - 2, inf), 0.0);

  const int n = std::max(R, C);
  std::vector<double> f, d;
  std::vector<int> v(std::size_t(n) + 1);
  std::vector<double> z(std::size_t(n) + 2);
  for (int c = 0; c < C; ++c) {
    f.assign(std::size_t(R), 0.0);
    d.assign(std::size_t(R), 0.0);
    for (int r = 0; r < R; ++r) f[std::size_t(r)] = sq(r, c);
    edt_1d(f, d, v, z);
    for (int r = 0; r < R; ++r) sq(r, c) = d[std::size_t(r)];
  }
  for (int r = 0; r < R; ++r) {
    f.assign(std::size_t(C), 0.0);
    d.assign(std::size_t(C), 0.0);
    for (int c = 0; c < C; ++c) f[std::size_t(c)] = sq(r, c);
    edt_1d(f, d, v, z);
    for (int c = 0; c < C; ++c) sq(r, c) = d[std::size_t(c)];
  }
  return sq.block(1, 1, R - 2, C - 2).sqrt() * resolution;
}

Result<BevCostMap> build_costmap(Grid<std::uint8_t> traversable, const BevGrid& grid, const CostMapParams& params) {
  if (traversable.rows() != grid.rows() || traversable.cols() != grid.cols())
    throw Error(Errc::InvalidArgument, "build_costmap: grid shape mismatch");
  if (params.box_size < 1 || params.box_size % 2 == 0)
    throw Error(Errc::InvalidArgument, "build_costmap: box filter size must be odd");
  if ((traversable == 0).all()) return Errc::EmptyTraversability;

  BevCostMap m;
  m.grid = grid;
  m.robot_cell = grid.robot_cell();
  m.traversable = std::move(traversable);
  m.distance = distance_transform(m.traversable, grid.resolution);
  m.raw_cost = params.saturation - m.distance.min(params.saturation);
  m.clearance = distance_transform(m.traversable, grid.resolution, false);

  // Box filter restricted to traversable cells, via summed-area tables.
  const int R = grid.rows(), C = grid.cols(), h = params.box_size / 2;
  const Grid<double> trav = m.traversable.cast<double>();
  Grid<double> sum = Grid<double>::Zero(R + 1, C + 1);
  Grid<double> cnt = Grid<double>::Zero(R + 1, C + 1);
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < C; ++c) {
      sum(r + 1, c + 1) = sum(r, c + 1) + sum(r + 1, c) - sum(r, c) + trav(r, c) * m.raw_cost(r, c);
      cnt(r + 1, c + 1) = cnt(r, c + 1) + cnt(r + 1, c) - cnt(r, c) + trav(r, c);
    }
  m.cost = Grid<double>::Constant(R, C, kBlocked);
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < C; ++c) {
      if (!m.traversable(r, c)) continue;
      const int r0 = std::max(0, r - h), r1 = std::min(R, r + h + 1);
      const int c0 = std::max(0, c - h), c1 = std::min(C, c + h + 1);
      const double s = sum(r1, c1) - sum(r0, c1) - sum(r1, c0) + sum(r0, c0);
      const double n = cnt(r1, c1) - cnt(r0, c1) - cnt(r1, c0) + cnt(r0, c0);
      m.cost(r, c) = s / n + (m.clearance(r, c) < params.clearance ? params.clearance_weight : 0.0);
    }
  return m;
}

void mark_robot_disc(Grid<std::uint8_t>& trav, const BevGrid& grid, double robot_radius) {
  const Cell rc = grid.robot_cell();
  const int rad = int(std::ceil(robot_radius / grid.resolution));
  std::vector<Cell> disc;
  bool observed = false;
  for (int r = 0; r <= rad && r < grid.rows(); ++r)
    for (int c = rc.col - rad; c <= rc.col + rad; ++c) {
      if (c < 0 || c >= grid.cols()) continue;
      if (std::hypot(r, c - rc.col) * grid.resolution > robot_radius) continue;
      disc.push_back({r, c});
      observed = observed || trav(r, c);
    }
  if (observed)
    for (const Cell& c : disc) trav(c.row, c.col) = 1;
}

Result<BevCostMap> build_costmap(std::span<const Eigen::Vector2d> points, const BevGrid& grid,
                                 const CostMapParams& params) {
  Grid<std::uint8_t> trav = Grid<std::uint8_t>::Zero(grid.rows(), grid.cols());
  const Rasterizer raster(trav, grid);
  for (const Eigen::Vector2d& p : points)
    if (grid.contains(p)) raster(p);
  mark_robot_disc(trav, grid, params.robot_radius);
  return build_costmap(std::move(trav), grid, params);
}

// ---------------------------------------------------------------------------
// Planning

double step_cost(const BevCostMap& map, Cell a, Cell b) {
  const bool diag = a.row != b.row && a.col != b.col;
  return (diag ? std::numbers::sqrt2 : 1.0) * (1.0 + (map.cost(a.row, a.col) + map.cost(b.row, b.col)) / 2.0);
}

LocalPlan plan_path(const BevCostMap& map, const Eigen::Vector2d& goal, double snap_radius) {
  LocalPlan plan;
  plan.subgoal_point = goal;
  const int R = int(map.traversable.rows()), C = int(map.traversable.cols());
  const Cell rc = map.robot_cell;
  if (!map.traversable(rc.row, rc.col)) return plan;

  auto trav = [&](int r, int c) { return r >= 0 && c >= 0 && r < R && c < C && map.traversable(r, c); };
  constexpr int dr[8] = {0, 0, 1, -1, 1, 1, -1, -1};
  constexpr int dc[8] = {1, -1, 0, 0, 1, -1, 1, -1};
  auto for_moves = [&](int r, int c, auto&& fn) {
    for (int k = 0; k < 8; ++k) {
      const int nr = r + dr[k], nc = c + dc[k];
      if (!trav(nr, nc)) continue;
      if (k >= 4 && (!trav(nr, c) || !trav(r, nc))) continue;
      fn(nr, nc);
    }
  };

  // Reachable set first, so the snapped goal is known before the search.
  Grid<std::uint8_t> reach = Grid<std::uint8_t>::Zero(R, C);
  std::vector<int> stack{rc.row * C + rc.col};
  reach(rc.row, rc.col) = 1;
  while (!stack.empty()) {
    const int idx = stack.back();
    stack.pop_back();
    for_moves(idx / C, idx % C, [&](int nr, int nc) {
      if (!reach(nr, nc)) reach(nr, nc) = 1, stack.push_back(nr * C + nc);
    });
  }

  const double res = map.grid.resolution;
  const Cell gc = map.grid.cell_of(goal);
  const int span = int(std::ceil(snap_radius / res)) + 1;
  std::optional<Cell> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (int r = gc.row - span; r <= gc.row + span; ++r)
    for (int c = gc.col - span; c <= gc.col + span; ++c) {
      if (!trav(r, c) || !reach(r, c)) continue;
      const double e = (map.grid.center_of({r, c}) - goal).norm();
      if (e <= snap_radius && e < best_d) best_d = e, best = Cell{r, c};
    }
  if (!best) return plan;

  const int target = best->row * C + best->col;
  Grid<double> dist = Grid<double>::Constant(R, C, std::numeric_limits<double>::infinity());
  std::vector<int> parent(std::size_t(R) * C, -1);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist(rc.row, rc.col) = 0;
  pq.push({0.0, rc.row * C + rc.col});
  while (!pq.empty()) {
    const auto [d, idx] = pq.top();
    pq.pop();
    if (idx == target) break;
    const int r = idx / C, c = idx % C;
    if (d > dist(r, c)) continue;
    for_moves(r, c, [&](int nr, int nc) {
      const double nd = d + step_cost(map, {r, c}, {nr, nc});
      if (nd < dist(nr, nc)) {
        dist(nr, nc) = nd;
        parent[std::size_t(nr * C + nc)] = idx;
        pq.push({nd, nr * C + nc});
      }
    });
  }

  for (int idx = target; idx != -1; idx = parent[std::size_t(idx)]) plan.cells.push_back({idx / C, idx % C});
  std::reverse(plan.cells.begin(), plan.cells.end());
  for (const Cell& c : plan.cells) plan.waypoints.push_back(map.grid.center_of(c));
  plan.path_cost = dist(best->row, best->col);
  plan.feasible = true;
  return plan;
}

sim::ControlCommand follow_path(const LocalPlan& plan, const FollowParams& params) {
  if (!plan.feasible || plan.waypoints.empty()) throw Error(Errc::InvalidArgument, "follow_path: infeasible plan");
  Eigen::Vector2d target = plan.waypoints.back();
  double arc = 0.0;
  for (std::size_t i = 1; i < plan.waypoints.size(); ++i) {
    arc += (plan.waypoints[i] - plan.waypoints[i - 1]).norm();
    if (arc >= params.lookahead) {
      target = plan.waypoints[i];
      break;
    }
  }
  const double bearing = (target.x() == 0 && target.y() == 0) ? 0.0 : std::atan2(target.y(), target.x());
  sim::ControlCommand cmd;
  cmd.yaw_rate = std::clamp(params.k_p * bearing, -params.omega_max, params.omega_max);
  cmd.linear_v = std::abs(bearing) > params.turn_in_place ? 0.0 : params.v_fixed;
  return cmd;
}

}  // namespace tango::metric
