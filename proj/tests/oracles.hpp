#pragma once

// Slow reference implementations the fast code is checked against.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "tango/metricplanner.hpp"
#include "tango/simworld.hpp"
#include "tango/topograph.hpp"

namespace tango::oracle {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Distance to the nearest zero cell by scanning every cell; the ring just
// outside the grid counts as zero cells.
inline Grid<double> brute_distance(const Grid<std::uint8_t>& trav, double res) {
  const int R = int(trav.rows()), C = int(trav.cols());
  Grid<double> out(R, C);
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < C; ++c) {
      double best = kInf;
      for (int rr = -1; rr <= R; ++rr)
        for (int cc = -1; cc <= C; ++cc) {
          const bool outside = rr < 0 || cc < 0 || rr >= R || cc >= C;
          if (!outside && trav(rr, cc)) continue;
          best = std::min(best, double((rr - r) * (rr - r) + (cc - c) * (cc - c)));
        }
      out(r, c) = std::sqrt(best) * res;
    }
  return out;
}

// Bellman-Ford over every 8-neighbour move until no cost improves.
inline Grid<double> relax_plan_costs(const metric::BevCostMap& map) {
  const int R = int(map.traversable.rows()), C = int(map.traversable.cols());
  auto trav = [&](int r, int c) { return r >= 0 && c >= 0 && r < R && c < C && map.traversable(r, c); };
  Grid<double> d = Grid<double>::Constant(R, C, kInf);
  d(map.robot_cell.row, map.robot_cell.col) = 0;
  for (bool changed = true; changed;) {
    changed = false;
    for (int r = 0; r < R; ++r)
      for (int c = 0; c < C; ++c) {
        if (!std::isfinite(d(r, c))) continue;
        for (int dr = -1; dr <= 1; ++dr)
          for (int dc = -1; dc <= 1; ++dc) {
            const int nr = r + dr, nc = c + dc;
            if ((dr == 0 && dc == 0) || !trav(nr, nc)) continue;
            if (dr != 0 && dc != 0 && (!trav(nr, c) || !trav(r, nc))) continue;
            const double nd = d(r, c) + metric::step_cost(map, {r, c}, {nr, nc});
            if (nd < d(nr, nc) - 1e-12) d(nr, nc) = nd, changed = true;
          }
      }
  }
  return d;
}

// Shortest 0/1 path lengths from `goal` by enumerating every simple path.
inline std::vector<int> enumerate_goal_costs(const topo::MapGraph& g, int goal) {
  const int n = int(g.nodes.size());
  const auto adj = g.adjacency();
  std::vector<int> best(std::size_t(n), -1);
  std::vector<char> on_path(std::size_t(n), 0);
  auto dfs = [&](auto&& self, int v, int len) -> void {
    if (best[std::size_t(v)] < 0 || len < best[std::size_t(v)]) best[std::size_t(v)] = len;
    on_path[std::size_t(v)] = 1;
    for (const auto& [w, kind] : adj[std::size_t(v)])
      if (!on_path[std::size_t(w)]) self(self, w, len + topo::edge_weight(kind));
    on_path[std::size_t(v)] = 0;
  };
  dfs(dfs, goal, 0);
  return best;
}

// True if no input point lies strictly inside the circumcircle of (a, b, c).
inline bool empty_circumcircle(const std::vector<Eigen::Vector2d>& pts, int a, int b, int c, double eps = 1e-9) {
  const Eigen::Vector2d& A = pts[std::size_t(a)];
  const Eigen::Vector2d& B = pts[std::size_t(b)];
  const Eigen::Vector2d& C = pts[std::size_t(c)];
  const double orient = (B - A).x() * (C - A).y() - (B - A).y() * (C - A).x();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (int(i) == a || int(i) == b || int(i) == c) continue;
    Eigen::Matrix3d m;
    for (int k = 0; k < 3; ++k) {
      const Eigen::Vector2d& P = k == 0 ? A : k == 1 ? B : C;
      const Eigen::Vector2d d = P - pts[i];
      m.row(k) << d.x(), d.y(), d.squaredNorm();
    }
    const double det = m.determinant() * (orient > 0 ? 1 : -1);
    if (det > eps) return false;
  }
  return true;
}

// Plain softmax without max subtraction.
inline std::vector<double> naive_softmax(const std::vector<double>& l, double tau) {
  double z = 0;
  for (double x : l) z += std::exp(tau * x);
  std::vector<double> w;
  for (double x : l) w.push_back(std::exp(tau * x) / z);
  return w;
}

// Geodesic field by Bellman-Ford over free cells.
inline Grid<double> relax_geodesic(const sim::World& world, const std::vector<Cell>& sources) {
  const int R = world.rows(), C = world.cols();
  Grid<double> d = Grid<double>::Constant(R, C, kInf);
  for (const Cell& s : sources) d(s.row, s.col) = 0;
  for (bool changed = true; changed;) {
    changed = false;
    for (int r = 0; r < R; ++r)
      for (int c = 0; c < C; ++c) {
        if (!std::isfinite(d(r, c))) continue;
        for (int dr = -1; dr <= 1; ++dr)
          for (int dc = -1; dc <= 1; ++dc) {
            const Cell n{r + dr, c + dc};
            if ((dr == 0 && dc == 0) || !world.is_free(n)) continue;
            if (dr != 0 && dc != 0 && (!world.is_free({n.row, c}) || !world.is_free({r, n.col}))) continue;
            const double nd = d(r, c) + ((dr != 0 && dc != 0) ? std::numbers::sqrt2 : 1.0) * world.cell_size;
            if (nd < d(n.row, n.col) - 1e-12) d(n.row, n.col) = nd, changed = true;
          }
      }
  }
  return d;
}

}  // namespace tango::oracle
