#pragma once

// Hand-built worlds for tests.

#include "tango/simworld.hpp"

namespace tango::test {

// rows x cols grid with a one-cell wall border; floor = 1, ceiling = 2.
inline sim::World room_world(int rows, int cols, double cell_size = 0.25, double wall_height = 2.5) {
  sim::World w;
  w.cell_size = cell_size;
  w.wall_height = wall_height;
  w.occupancy = Grid<sim::CellKind>::Constant(rows, cols, sim::CellKind::Free);
  w.cell_instance = Grid<InstanceId>::Constant(rows, cols, 1);
  for (auto& g : w.face_instance) g = Grid<InstanceId>::Zero(rows, cols);
  w.instances.push_back({1, sim::SemanticClass::Floor, {}, 0.0});
  w.instances.push_back({2, sim::SemanticClass::Ceiling, {}, wall_height});
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      if (r == 0 || c == 0 || r == rows - 1 || c == cols - 1) {
        w.occupancy(r, c) = sim::CellKind::Wall;
        w.cell_instance(r, c) = sim::kNoInstance;
      }
  return w;
}

inline void set_wall(sim::World& w, int r, int c) {
  w.occupancy(r, c) = sim::CellKind::Wall;
  w.cell_instance(r, c) = sim::kNoInstance;
}

// One wall-panel instance per exposed face; call after the last set_wall.
inline void add_panels(sim::World& w) {
  constexpr int dr[4] = {0, 0, 1, -1};
  constexpr int dc[4] = {1, -1, 0, 0};
  for (int s = 0; s < 4; ++s) {
    w.face_instance[std::size_t(s)].setZero();
    for (int r = 0; r < w.rows(); ++r)
      for (int c = 0; c < w.cols(); ++c) {
        if (w.occupancy(r, c) != sim::CellKind::Wall) continue;
        const Cell n{r + dr[s], c + dc[s]};
        if (!w.in_bounds(n) || w.occupancy(n.row, n.col) == sim::CellKind::Wall) continue;
        const InstanceId id = InstanceId(w.instances.size()) + 1;
        w.instances.push_back({id, sim::SemanticClass::Wall, {{r, c}}, w.wall_height});
        w.face_instance[std::size_t(s)](r, c) = id;
      }
  }
}

}  // namespace tango::test
