#include "tango/simworld.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "tango/random.hpp"

namespace tango {

const char* to_string(Errc e) {
  switch (e) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::GenerationFailed: return "GenerationFailed";
    case Errc::PoseInSolid: return "PoseInSolid";
    case Errc::Unreachable: return "Unreachable";
    case Errc::LocalizationLost: return "LocalizationLost";
    case Errc::NoViableSubgoal: return "NoViableSubgoal";
    case Errc::SubgoalProjectionFailed: return "SubgoalProjectionFailed";
    case Errc::EmptyTraversability: return "EmptyTraversability";
    case Errc::AltGoalUnavailable: return "AltGoalUnavailable";
    case Errc::Io: return "Io";
    case Errc::Parse: return "Parse";
  }
  return "Unknown";
}

}  // namespace tango

namespace tango::sim {

const char* to_string(SemanticClass c) {
  switch (c) {
    case SemanticClass::Floor: return "Floor";
    case SemanticClass::Wall: return "Wall";
    case SemanticClass::Ceiling: return "Ceiling";
    case SemanticClass::Furniture: return "Furniture";
    case SemanticClass::Fixture: return "Fixture";
    case SemanticClass::Rug: return "Rug";
  }
  return "Unknown";
}

Cell World::cell_at(double x, double y) const {
  return {int(std::floor(y / cell_size)), int(std::floor(x / cell_size))};
}

Eigen::Vector2d World::cell_center(Cell c) const {
  return {(c.col + 0.5) * cell_size, (c.row + 0.5) * cell_size};
}

const ObjectInstance& World::instance(InstanceId id) const {
  if (!has_instance(id)) throw Error(Errc::InvalidArgument, "unknown instance id " + std::to_string(id));
  return instances[std::size_t(id - 1)];
}

bool operator==(const World& a, const World& b) {
  if (a.seed != b.seed || a.cell_size != b.cell_size || a.wall_height != b.wall_height) return false;
  if (a.occupancy.rows() != b.occupancy.rows() || a.occupancy.cols() != b.occupancy.cols()) return false;
  if (!(a.occupancy == b.occupancy).all() || !(a.cell_instance == b.cell_instance).all()) return false;
  for (int s = 0; s < 4; ++s)
    if (!(a.face_instance[s] == b.face_instance[s]).all()) return false;
  if (a.instances.size() != b.instances.size()) return false;
  for (std::size_t i = 0; i < a.instances.size(); ++i) {
    const auto& x = a.instances[i];
    const auto& y = b.instances[i];
    if (x.instance_id != y.instance_id || x.semantic_class != y.semantic_class || x.height != y.height ||
        x.footprint != y.footprint)
      return false;
  }
  return a.floor_instance_id == b.floor_instance_id && a.ceiling_instance_id == b.ceiling_instance_id;
}

Eigen::Vector2d Pose2D::forward() const { return {std::cos(theta), std::sin(theta)}; }
Eigen::Vector2d Pose2D::right() const { return {-std::sin(theta), std::cos(theta)}; }

CameraModel CameraModel::make(int width, int height, double hfov, double cam_height) {
  if (width <= 0 || height <= 0 || !(hfov > 0 && hfov < std::numbers::pi) || !(cam_height > 0))
    throw Error(Errc::InvalidArgument, "invalid camera parameters");
  CameraModel cam;
  cam.width = width;
  cam.height = height;
  cam.hfov = hfov;
  cam.cam_height = cam_height;
  cam.fx = (width / 2.0) / std::tan(hfov / 2.0);
  cam.fy = cam.fx;
  cam.cx = width / 2.0;
  cam.cy = height / 2.0;
  return cam;
}

// ---------------------------------------------------------------------------
// Generation

namespace {

constexpr int kDr[4] = {0, 0, 1, -1};  // indexed by Side
constexpr int kDc[4] = {1, -1, 0, 0};

struct Region {
  int r0, c0, r1, c1;  // inclusive interior bounds
  bool corridor = false;
  int rows() const { return r1 - r0 + 1; }
  int cols() const { return c1 - c0 + 1; }
};

struct WallLine {
  bool horizontal;  // wall along a row
  int fixed;        // row (horizontal) or column
  int lo, hi;       // extent along the line
};

class Generator {
 public:
  Generator(std::uint64_t seed, const WorldGenParams& p) : p_(p), rng_(seed) {
    w_.seed = seed;
    w_.cell_size = p.cell_size;
    w_.wall_height = p.wall_height;
  }

  World run() {
    init_grid();
    split_rooms();
    add_extra_doors();
    if (count_components(navigable_cells(w_)) != 1)
      throw Error(Errc::GenerationFailed, "room layout is not connected");
    place_rugs();
    place_obstacles();
    build_wall_panels();
    return std::move(w_);
  }

 private:
  void init_grid() {
    w_.occupancy = Grid<CellKind>::Constant(p_.rows, p_.cols, CellKind::Free);
    w_.cell_instance = Grid<InstanceId>::Constant(p_.rows, p_.cols, 1);
    for (int r = 0; r < p_.rows; ++r) set_wall(r, 0), set_wall(r, p_.cols - 1);
    for (int c = 0; c < p_.cols; ++c) set_wall(0, c), set_wall(p_.rows - 1, c);
    w_.instances.push_back({1, SemanticClass::Floor, {}, 0.0});
    w_.instances.push_back({2, SemanticClass::Ceiling, {}, p_.wall_height});
    w_.floor_instance_id = 1;
    w_.ceiling_instance_id = 2;
  }

  void set_wall(int r, int c) {
    w_.occupancy(r, c) = CellKind::Wall;
    w_.cell_instance(r, c) = kNoInstance;
  }

  void set_free(int r, int c) {
    w_.occupancy(r, c) = CellKind::Free;
    w_.cell_instance(r, c) = w_.floor_instance_id;
  }

  bool near_door(int r, int c, int margin) const {
    for (const Cell& d : door_cells_)
      if (std::abs(d.row - r) <= margin && std::abs(d.col - c) <= margin) return true;
    return false;
  }

  // Positions for a wall line splitting `reg` across `horizontal`; the line's
  // end cells must not touch an existing door.
  std::vector<int> split_candidates(const Region& reg, bool horizontal, int lo, int hi) const {
    std::vector<int> out;
    for (int pos = lo; pos <= hi; ++pos) {
      bool ok = horizontal ? !near_door(pos, reg.c0 - 1, 1) && !near_door(pos, reg.c1 + 1, 1)
                           : !near_door(reg.r0 - 1, pos, 1) && !near_door(reg.r1 + 1, pos, 1);
      if (ok) out.push_back(pos);
    }
    return out;
  }

  bool try_split(std::size_t idx) {
    const Region reg = regions_[idx];
    if (reg.corridor) return false;
    const int m = p_.min_room_cells;
    const int cw = p_.corridor_width_cells;
    std::vector<bool> axes;  // true = horizontal wall (splits rows)
    const bool rows_first = reg.rows() > reg.cols() || (reg.rows() == reg.cols() && rng_.bernoulli(0.5));
    axes.push_back(rows_first);
    axes.push_back(!rows_first);
    for (bool horizontal : axes) {
      const int lo0 = horizontal ? reg.r0 : reg.c0;
      const int hi0 = horizontal ? reg.r1 : reg.c1;
      const int extent = hi0 - lo0 + 1;
      const int span = horizontal ? reg.cols() : reg.rows();
      if (span < p_.door_width_cells + 2) continue;
      const bool corridor = rng_.bernoulli(p_.corridor_prob) && extent >= cw + 1 + m;
      std::vector<int> cand;
      bool strip_low = false;
      if (corridor) {
        strip_low = rng_.bernoulli(0.5);
        const int pos = strip_low ? lo0 + cw : hi0 - cw;
        cand = split_candidates(reg, horizontal, pos, pos);
      }
      const bool use_corridor = !cand.empty();
      if (!use_corridor) {
        if (extent < 2 * m + 1) continue;
        cand = split_candidates(reg, horizontal, lo0 + m, hi0 - m);
      }
      if (cand.empty()) continue;
      const int pos = cand[std::size_t(rng_.uniform_int(0, int(cand.size()) - 1))];

      WallLine line{horizontal, pos, horizontal ? reg.c0 : reg.r0, horizontal ? reg.c1 : reg.r1};
      for (int k = line.lo; k <= line.hi; ++k) horizontal ? set_wall(pos, k) : set_wall(k, pos);
      carve_door(line);
      lines_.push_back(line);

      Region a = reg, b = reg;
      if (horizontal) a.r1 = pos - 1, b.r0 = pos + 1;
      else a.c1 = pos - 1, b.c0 = pos + 1;
      if (use_corridor) (strip_low ? a : b).corridor = true;
      regions_[idx] = a;
      regions_.push_back(b);
      return true;
    }
    return false;
  }

  void carve_door(const WallLine& line) {
    const int dw = p_.door_width_cells;
    const int start = rng_.uniform_int(line.lo, line.hi - dw + 1);
    for (int k = start; k < start + dw; ++k) {
      const Cell c = line.horizontal ? Cell{line.fixed, k} : Cell{k, line.fixed};
      set_free(c.row, c.col);
      door_cells_.push_back(c);
    }
  }

  void split_rooms() {
    regions_.push_back({1, 1, p_.rows - 2, p_.cols - 2});
    while (int(regions_.size()) < p_.room_count) {
      std::vector<std::size_t> order(regions_.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return regions_[a].rows() * regions_[a].cols() > regions_[b].rows() * regions_[b].cols();
      });
      bool split = false;
      for (std::size_t idx : order)
        if ((split = try_split(idx))) break;
      if (!split) throw Error(Errc::GenerationFailed, "cannot fit requested room count");
    }
  }

  void add_extra_doors() {
    int added = 0;
    for (int attempt = 0; attempt < p_.max_retries && added < p_.extra_doors && !lines_.empty(); ++attempt) {
      const WallLine& line = lines_[std::size_t(rng_.uniform_int(0, int(lines_.size()) - 1))];
      const int dw = p_.door_width_cells;
      if (line.hi - line.lo + 1 < dw + 2) continue;
      const int start = rng_.uniform_int(line.lo + 1, line.hi - dw);
      bool ok = true;
      for (int k = start - 1; k <= start + dw && ok; ++k) {
        const Cell c = line.horizontal ? Cell{line.fixed, k} : Cell{k, line.fixed};
        if (w_.occupancy(c.row, c.col) != CellKind::Wall) ok = false;
        // both sides across the line must be open floor
        const Cell s1 = line.horizontal ? Cell{c.row - 1, c.col} : Cell{c.row, c.col - 1};
        const Cell s2 = line.horizontal ? Cell{c.row + 1, c.col} : Cell{c.row, c.col + 1};
        if (!w_.is_free(s1) || !w_.is_free(s2)) ok = false;
      }
      if (!ok) continue;
      carve_door(WallLine{line.horizontal, line.fixed, start, start + dw - 1});
      ++added;
    }
  }

  bool rect_is_plain_floor(int r0, int c0, int h, int w, int door_margin) const {
    for (int r = r0; r < r0 + h; ++r)
      for (int c = c0; c < c0 + w; ++c) {
        if (!w_.is_free({r, c}) || w_.cell_instance(r, c) != w_.floor_instance_id) return false;
        if (near_door(r, c, door_margin)) return false;
      }
    return true;
  }

  void place_rugs() {
    int placed = 0;
    for (int attempt = 0; attempt < p_.max_retries && placed < p_.rug_count; ++attempt) {
      const int h = rng_.uniform_int(2, 5), w = rng_.uniform_int(2, 5);
      const int r0 = rng_.uniform_int(1, p_.rows - 1 - h), c0 = rng_.uniform_int(1, p_.cols - 1 - w);
      if (!rect_is_plain_floor(r0, c0, h, w, 0)) continue;
      const InstanceId id = InstanceId(w_.instances.size()) + 1;
      ObjectInstance inst{id, SemanticClass::Rug, {}, 0.01};
      for (int r = r0; r < r0 + h; ++r)
        for (int c = c0; c < c0 + w; ++c) {
          w_.cell_instance(r, c) = id;
          inst.footprint.push_back({r, c});
        }
      w_.instances.push_back(std::move(inst));
      ++placed;
    }
  }

  void place_obstacles() {
    for (int k = 0; k < p_.obstacle_count; ++k) {
      bool placed = false;
      for (int attempt = 0; attempt < p_.max_retries && !placed; ++attempt) {
        const int h = rng_.uniform_int(1, 3), w = rng_.uniform_int(1, 3);
        const int r0 = rng_.uniform_int(1, p_.rows - 1 - h), c0 = rng_.uniform_int(1, p_.cols - 1 - w);
        const double height = rng_.uniform(0.4, 1.6);
        if (!rect_is_plain_floor(r0, c0, h, w, 2)) continue;
        placed = try_add_obstacle(w_, {r0, c0}, h, w, height).has_value();
      }
      if (!placed) throw Error(Errc::GenerationFailed, "cannot place obstacle " + std::to_string(k));
    }
  }

  void build_wall_panels() {
    for (auto& g : w_.face_instance) g = Grid<InstanceId>::Zero(p_.rows, p_.cols);
    auto has_face = [&](int r, int c, int side) {
      if (w_.occupancy(r, c) != CellKind::Wall) return false;
      const Cell n{r + kDr[side], c + kDc[side]};
      return w_.in_bounds(n) && w_.occupancy(n.row, n.col) != CellKind::Wall;
    };
    auto emit_run = [&](int side, const std::vector<Cell>& run) {
      if (run.empty()) return;
      const int n = int(run.size());
      const int chunks = (n + p_.panel_max_cells - 1) / p_.panel_max_cells;
      for (int k = 0; k < chunks; ++k) {
        const int a = k * n / chunks, b = (k + 1) * n / chunks;
        const InstanceId id = InstanceId(w_.instances.size()) + 1;
        ObjectInstance inst{id, SemanticClass::Wall, {}, p_.wall_height};
        for (int i = a; i < b; ++i) {
          inst.footprint.push_back(run[std::size_t(i)]);
          w_.face_instance[std::size_t(side)](run[std::size_t(i)].row, run[std::size_t(i)].col) = id;
        }
        w_.instances.push_back(std::move(inst));
      }
    };
    for (int side = 0; side < 4; ++side) {
      const bool vertical_face = side == int(Side::East) || side == int(Side::West);
      const int outer = vertical_face ? p_.cols : p_.rows;
      const int inner = vertical_face ? p_.rows : p_.cols;
      for (int o = 0; o < outer; ++o) {
        std::vector<Cell> run;
        for (int i = 0; i < inner; ++i) {
          const int r = vertical_face ? i : o, c = vertical_face ? o : i;
          if (has_face(r, c, side)) {
            run.push_back({r, c});
          } else {
            emit_run(side, run);
            run.clear();
          }
        }
        emit_run(side, run);
      }
    }
  }

  const WorldGenParams& p_;
  Rng rng_;
  World w_;
  std::vector<Region> regions_;
  std::vector<WallLine> lines_;
  std::vector<Cell> door_cells_;
};

void validate(const WorldGenParams& p) {
  if (p.rows < 20 || p.cols < 20) throw Error(Errc::InvalidArgument, "world grid must be at least 20x20");
  if (p.room_count < 1) throw Error(Errc::InvalidArgument, "room_count must be >= 1");
  if (p.obstacle_count < 0 || p.rug_count < 0 || p.extra_doors < 0)
    throw Error(Errc::InvalidArgument, "counts must be non-negative");
  if (!(p.cell_size > 0) || p.door_width_cells < 3 || p.min_room_cells < 4 || p.panel_max_cells < 1)
    throw Error(Errc::InvalidArgument, "invalid world generation parameters");
}

}  // namespace

World generate_world(std::uint64_t seed, const WorldGenParams& params) {
  validate(params);
  return Generator(seed, params).run();
}

std::optional<InstanceId> try_add_obstacle(World& world, Cell corner, int rows, int cols, double height) {
  if (rows < 1 || cols < 1 || !(height > 0)) throw Error(Errc::InvalidArgument, "invalid obstacle shape");
  for (int r = corner.row; r < corner.row + rows; ++r)
    for (int c = corner.col; c < corner.col + cols; ++c)
      if (!world.is_free({r, c}) || world.cell_instance(r, c) != world.floor_instance_id) return std::nullopt;

  const InstanceId id = InstanceId(world.instances.size()) + 1;
  ObjectInstance inst{id, rows * cols >= 4 ? SemanticClass::Furniture : SemanticClass::Fixture, {}, height};
  for (int r = corner.row; r < corner.row + rows; ++r)
    for (int c = corner.col; c < corner.col + cols; ++c) {
      world.occupancy(r, c) = CellKind::Obstacle;
      world.cell_instance(r, c) = id;
      inst.footprint.push_back({r, c});
    }
  if (count_components(navigable_cells(world)) != 1) {
    for (const Cell& c : inst.footprint) {
      world.occupancy(c.row, c.col) = CellKind::Free;
      world.cell_instance(c.row, c.col) = world.floor_instance_id;
    }
    return std::nullopt;
  }
  world.instances.push_back(std::move(inst));
  return id;
}

Grid<std::uint8_t> navigable_cells(const World& world) {
  const int R = world.rows(), C = world.cols();
  Grid<std::uint8_t> out = Grid<std::uint8_t>::Zero(R, C);
  for (int r = 1; r + 1 < R; ++r)
    for (int c = 1; c + 1 < C; ++c) {
      bool ok = true;
      for (int dr = -1; dr <= 1 && ok; ++dr)
        for (int dc = -1; dc <= 1 && ok; ++dc) ok = world.occupancy(r + dr, c + dc) == CellKind::Free;
      out(r, c) = ok ? 1 : 0;
    }
  return out;
}

int count_components(const Grid<std::uint8_t>& mask) {
  const int R = int(mask.rows()), C = int(mask.cols());
  Grid<std::uint8_t> seen = Grid<std::uint8_t>::Zero(R, C);
  int count = 0;
  std::vector<Cell> stack;
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < C; ++c) {
      if (!mask(r, c) || seen(r, c)) continue;
      ++count;
      seen(r, c) = 1;
      stack.push_back({r, c});
      while (!stack.empty()) {
        const Cell cur = stack.back();
        stack.pop_back();
        for (int s = 0; s < 4; ++s) {
          const int nr = cur.row + kDr[s], nc = cur.col + kDc[s];
          if (nr < 0 || nc < 0 || nr >= R || nc >= C || !mask(nr, nc) || seen(nr, nc)) continue;
          seen(nr, nc) = 1;
          stack.push_back({nr, nc});
        }
      }
    }
  return count;
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

// Column-major scratch images; each ray writes one contiguous column.
template <class T>
using ColImage = Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>;

struct ColumnPainter {
  ColImage<InstanceId>& inst;
  ColImage<float>& depth;
  int u;
  int height;

  void paint(int v_lo, int v_hi, InstanceId id, float z) {
    v_lo = std::max(v_lo, 0);
    v_hi = std::min(v_hi, height - 1);
    for (int v = v_lo; v <= v_hi; ++v)
      if (inst(v, u) == kNoInstance) inst(v, u) = id, depth(v, u) = z;
  }
  // Horizontal plane at vertical offset `drop` below the camera (negative =
  // above), visible over depths [t0, t1].
  void paint_plane(double cy, double fy, double drop, double t0, double t1, InstanceId id) {
    if (drop > 0) {
      const int v_lo = int(std::ceil(cy + drop * fy / t1));
      const int v_hi = t0 > 0 ? int(std::floor(cy + drop * fy / t0)) : height - 1;
      const int first = std::max(v_lo, int(std::floor(cy)) + 1);
      for (int v = std::max(first, 0); v <= std::min(v_hi, height - 1); ++v)
        if (inst(v, u) == kNoInstance) inst(v, u) = id, depth(v, u) = float(drop * fy / (v - cy));
    } else if (drop < 0) {
      const double up = -drop;
      const int v_lo = t0 > 0 ? int(std::ceil(cy - up * fy / t0)) : 0;
      const int v_hi = int(std::floor(cy - up * fy / t1));
      const int last = int(std::ceil(cy)) - 1;
      for (int v = std::max(v_lo, 0); v <= std::min(v_hi, last); ++v)
        if (inst(v, u) == kNoInstance) inst(v, u) = id, depth(v, u) = float(up * fy / (cy - v));
    }
  }
};

}  // namespace

Observation render(const World& world, const CameraModel& cam, const Pose2D& pose) {
  const Cell start = world.cell_at(pose.x, pose.y);
  if (!world.is_free(start)) throw Error(Errc::PoseInSolid, "render: camera pose is not in free space");

  Observation obs;
  obs.pose = pose;
  ColImage<InstanceId> inst_img = ColImage<InstanceId>::Zero(cam.height, cam.width);
  ColImage<float> depth_img = ColImage<float>::Zero(cam.height, cam.width);

  const double cs = world.cell_size;
  const double hc = cam.cam_height;
  const double wh = world.wall_height;
  const Eigen::Vector2d f = pose.forward();
  const Eigen::Vector2d rt = pose.right();
  const double px = pose.x / cs, py = pose.y / cs;
  constexpr double kInf = std::numeric_limits<double>::infinity();

  for (int u = 0; u < cam.width; ++u) {
    ColumnPainter col{inst_img, depth_img, u, cam.height};
    // Ray with unit forward component, so the ray parameter is planar z-depth.
    const Eigen::Vector2d d = f + ((u - cam.cx) / cam.fx) * rt;
    int mx = start.col, my = start.row;
    const int step_x = d.x() < 0 ? -1 : 1;
    const int step_y = d.y() < 0 ? -1 : 1;
    const double dtx = d.x() != 0 ? cs / std::abs(d.x()) : kInf;
    const double dty = d.y() != 0 ? cs / std::abs(d.y()) : kInf;
    double next_x = d.x() != 0 ? (step_x > 0 ? (mx + 1 - px) : (px - mx)) * dtx : kInf;
    double next_y = d.y() != 0 ? (step_y > 0 ? (my + 1 - py) : (py - my)) * dty : kInf;
    double t_enter = 0.0;
    int entered_side = -1;

    while (true) {
      const double t_exit = std::min(next_x, next_y);
      const CellKind kind = world.occupancy(my, mx);
      if (kind == CellKind::Wall) {
        InstanceId face = entered_side >= 0 ? world.face_instance[std::size_t(entered_side)](my, mx) : kNoInstance;
        for (int s = 0; s < 4 && face == kNoInstance; ++s) face = world.face_instance[std::size_t(s)](my, mx);
        const int v_lo = int(std::ceil(cam.cy + (hc - wh) * cam.fy / t_enter));
        const int v_hi = int(std::floor(cam.cy + hc * cam.fy / t_enter));
        col.paint(v_lo, v_hi, face, float(t_enter));
        break;
      }
      if (kind == CellKind::Obstacle) {
        const InstanceId id = world.cell_instance(my, mx);
        const double h = world.instance(id).height;
        if (t_enter > 0) {
          const int v_lo = int(std::ceil(cam.cy + (hc - h) * cam.fy / t_enter));
          const int v_hi = int(std::floor(cam.cy + hc * cam.fy / t_enter));
          col.paint(v_lo, v_hi, id, float(t_enter));
        }
        if (h < hc) {
          // top face (paint_plane returns its own depth per row)
          ColumnPainter top = col;
          top.paint_plane(cam.cy, cam.fy, hc - h, t_enter, t_exit, id);
        }
      } else {
        col.paint_plane(cam.cy, cam.fy, hc, t_enter, t_exit, world.cell_instance(my, mx));
      }
      col.paint_plane(cam.cy, cam.fy, hc - wh, t_enter, t_exit, world.ceiling_instance_id);

      t_enter = t_exit;
      if (next_x < next_y) {
        mx += step_x;
        next_x += dtx;
        entered_side = step_x > 0 ? int(Side::West) : int(Side::East);
      } else {
        my += step_y;
        next_y += dty;
        entered_side = step_y > 0 ? int(Side::North) : int(Side::South);
      }
      if (!world.in_bounds({my, mx})) break;
    }
  }
  obs.instance_image = inst_img;
  obs.depth_image = depth_img;
  return obs;
}

// ---------------------------------------------------------------------------
// Kinematics

bool disc_collides(const World& world, double x, double y, double radius) {
  const double cs = world.cell_size;
  const int r0 = int(std::floor((y - radius) / cs)), r1 = int(std::floor((y + radius) / cs));
  const int c0 = int(std::floor((x - radius) / cs)), c1 = int(std::floor((x + radius) / cs));
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c) {
      if (!world.in_bounds({r, c})) return true;
      if (world.occupancy(r, c) == CellKind::Free) continue;
      const double nx = std::clamp(x, c * cs, (c + 1) * cs);
      const double ny = std::clamp(y, r * cs, (r + 1) * cs);
      if ((nx - x) * (nx - x) + (ny - y) * (ny - y) < radius * radius) return true;
    }
  return false;
}

namespace {

// Largest fraction of the straight move from (x, y) by (dx, dy) that stays collision free.
double sweep(const World& world, double x, double y, double dx, double dy, double radius) {
  const double len = std::hypot(dx, dy);
  if (len == 0.0) return 0.0;
  const int substeps = std::max(1, int(std::ceil(len / (world.cell_size * 0.2))));
  for (int k = 1; k <= substeps; ++k)
    if (disc_collides(world, x + dx * k / substeps, y + dy * k / substeps, radius)) return double(k - 1) / substeps;
  return 1.0;
}

}  // namespace

StepOutcome step_agent(const World& world, const Pose2D& pose, const ControlCommand& cmd, double dt,
                       double agent_radius, bool slide) {
  if (!(dt > 0)) throw Error(Errc::InvalidArgument, "step_agent: dt must be positive");
  StepOutcome out{pose, false};
  const double dist = cmd.linear_v * dt;
  const double dx = dist * std::cos(pose.theta), dy = dist * std::sin(pose.theta);
  out.pose.theta = wrap_angle(pose.theta + cmd.yaw_rate * dt);
  if (dist == 0.0) return out;

  if (sweep(world, pose.x, pose.y, dx, dy, agent_radius) == 1.0) {
    out.pose.x += dx;
    out.pose.y += dy;
    return out;
  }
  out.collided = true;
  if (!slide) return out;
  // Axis-aligned slide along whichever component makes more progress.
  const double fx = sweep(world, pose.x, pose.y, dx, 0.0, agent_radius);
  const double fy = sweep(world, pose.x, pose.y, 0.0, dy, agent_radius);
  if (std::abs(fx * dx) >= std::abs(fy * dy)) out.pose.x += fx * dx;
  else out.pose.y += fy * dy;
  return out;
}

// ---------------------------------------------------------------------------
// Geodesics

namespace {

constexpr int kDr8[8] = {0, 0, 1, -1, 1, 1, -1, -1};
constexpr int kDc8[8] = {1, -1, 0, 0, 1, -1, 1, -1};

struct Node {
  double d;
  int idx;
  bool operator>(const Node& o) const { return d > o.d || (d == o.d && idx > o.idx); }
};

// Dijkstra over free cells; fills `dist` and optionally `parent` (flat indices).
void grid_dijkstra(const World& world, std::span<const Cell> sources, Grid<double>& dist, std::vector<int>* parent,
                   int stop_idx = -1) {
  const int R = world.rows(), C = world.cols();
  const double cs = world.cell_size;
  dist = Grid<double>::Constant(R, C, std::numeric_limits<double>::infinity());
  if (parent) parent->assign(std::size_t(R) * C, -1);
  std::priority_queue<Node, std::vector<Node>, std::greater<>> pq;
  for (const Cell& s : sources) {
    if (!world.in_bounds(s)) continue;
    dist(s.row, s.col) = 0.0;
    pq.push({0.0, s.row * C + s.col});
  }
  while (!pq.empty()) {
    const Node n = pq.top();
    pq.pop();
    const int r = n.idx / C, c = n.idx % C;
    if (n.d > dist(r, c)) continue;
    if (n.idx == stop_idx) break;
    for (int k = 0; k < 8; ++k) {
      const int nr = r + kDr8[k], nc = c + kDc8[k];
      if (!world.is_free({nr, nc})) continue;
      const bool diag = k >= 4;
      if (diag && (!world.is_free({r + kDr8[k], c}) || !world.is_free({r, c + kDc8[k]}))) continue;
      const double nd = n.d + (diag ? std::numbers::sqrt2 : 1.0) * cs;
      if (nd < dist(nr, nc)) {
        dist(nr, nc) = nd;
        if (parent) (*parent)[std::size_t(nr * C + nc)] = n.idx;
        pq.push({nd, nr * C + nc});
      }
    }
  }
}

Cell require_free(const World& world, const Pose2D& p) {
  const Cell c = world.cell_at(p.x, p.y);
  if (!world.is_free(c)) throw Error(Errc::PoseInSolid, "pose is not in free space");
  return c;
}

bool segment_is_free(const World& world, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  const double len = (b - a).norm();
  const int n = std::max(1, int(std::ceil(len / (world.cell_size * 0.125))));
  for (int k = 0; k <= n; ++k) {
    const Eigen::Vector2d p = a + (b - a) * (double(k) / n);
    if (!world.is_free(world.cell_at(p.x(), p.y()))) return false;
  }
  return true;
}

}  // namespace

Grid<double> geodesic_field(const World& world, std::span<const Cell> sources) {
  Grid<double> dist;
  grid_dijkstra(world, sources, dist, nullptr);
  return dist;
}

Result<double> geodesic_distance(const World& world, const Pose2D& a, const Pose2D& b) {
  const Cell ca = require_free(world, a);
  const Cell cb = require_free(world, b);
  if (ca == cb) return 0.0;
  Grid<double> dist;
  const Cell src[1] = {ca};
  grid_dijkstra(world, src, dist, nullptr, cb.row * world.cols() + cb.col);
  const double d = dist(cb.row, cb.col);
  if (!std::isfinite(d)) return Errc::Unreachable;
  return d;
}

Result<double> geodesic_to_instance(const World& world, const Pose2D& a, InstanceId id) {
  const Cell ca = require_free(world, a);
  const Grid<double> field = geodesic_field(world, world.instance(id).footprint);
  const double d = field(ca.row, ca.col);
  if (!std::isfinite(d)) return Errc::Unreachable;
  return d;
}

double distance_to_instance(const World& world, const Eigen::Vector2d& p, InstanceId id) {
  const double cs = world.cell_size;
  double best = std::numeric_limits<double>::infinity();
  for (const Cell& c : world.instance(id).footprint) {
    const double nx = std::clamp(p.x(), c.col * cs, (c.col + 1) * cs);
    const double ny = std::clamp(p.y(), c.row * cs, (c.row + 1) * cs);
    best = std::min(best, std::hypot(nx - p.x(), ny - p.y()));
  }
  return best;
}

Result<std::vector<Pose2D>> shortest_pose_path(const World& world, const Pose2D& a, const Pose2D& b,
                                               double spacing) {
  if (!(spacing > 0)) throw Error(Errc::InvalidArgument, "spacing must be positive");
  const Cell ca = require_free(world, a);
  const Cell cb = require_free(world, b);
  const int C = world.cols();
  if (ca == cb && a.position() == b.position()) return std::vector<Pose2D>{a};

  Grid<double> dist;
  std::vector<int> parent;
  const Cell src[1] = {ca};
  grid_dijkstra(world, src, dist, &parent, cb.row * C + cb.col);
  if (!std::isfinite(dist(cb.row, cb.col))) return Errc::Unreachable;

  std::vector<Eigen::Vector2d> cells;
  for (int idx = cb.row * C + cb.col; idx != -1; idx = parent[std::size_t(idx)])
    cells.push_back(world.cell_center({idx / C, idx % C}));
  std::reverse(cells.begin(), cells.end());
  cells.front() = a.position();
  cells.back() = b.position();

  // any-angle shortcut: keep the farthest vertex in free line of sight
  std::vector<Eigen::Vector2d> poly{cells.front()};
  std::size_t i = 0;
  while (i + 1 < cells.size()) {
    std::size_t j = cells.size() - 1;
    while (j > i + 1 && !segment_is_free(world, cells[i], cells[j])) --j;
    poly.push_back(cells[j]);
    i = j;
  }

  std::vector<double> arc{0.0};
  for (std::size_t k = 1; k < poly.size(); ++k) arc.push_back(arc.back() + (poly[k] - poly[k - 1]).norm());
  const double total = arc.back();
  const int count = int(std::floor(total / spacing + 1e-9)) + 1;

  std::vector<Pose2D> out;
  std::size_t seg = 0;
  for (int k = 0; k < count; ++k) {
    const double s = k * spacing;
    while (seg + 2 < poly.size() && arc[seg + 1] <= s + 1e-12) ++seg;
    const Eigen::Vector2d dir = poly[seg + 1] - poly[seg];
    const double len = arc[seg + 1] - arc[seg];
    const Eigen::Vector2d p = len > 0 ? Eigen::Vector2d(poly[seg] + dir * ((s - arc[seg]) / len)) : poly[seg];
    const double theta = len > 0 ? std::atan2(dir.y(), dir.x()) : a.theta;
    out.push_back({p.x(), p.y(), wrap_angle(theta)});
  }
  return out;
}

}  // namespace tango::sim
