#pragma once

// Procedural 2.5D indoor worlds, a raycast renderer for instance/depth
// images, unicycle kinematics with disc collision and geodesic queries.
//
// World frame: x grows with grid column, y grows with grid row (a top-down
// raster view). Heading theta rotates from +x toward +y, so a positive yaw
// rate turns the camera toward its +u (right) image side.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "tango/core.hpp"

namespace tango::sim {

enum class CellKind : std::uint8_t { Free = 0, Wall = 1, Obstacle = 2 };

enum class SemanticClass : std::uint8_t { Floor, Wall, Ceiling, Furniture, Fixture, Rug };

const char* to_string(SemanticClass c);

inline constexpr InstanceId kNoInstance = 0;

struct ObjectInstance {
  InstanceId instance_id = kNoInstance;
  SemanticClass semantic_class = SemanticClass::Furniture;
  std::vector<Cell> footprint;
  double height = 0.0;
};

/// Wall faces are addressed by the side of the wall cell they look out of.
enum class Side : std::uint8_t { East = 0, West = 1, South = 2, North = 3 };

struct World {
  std::uint64_t seed = 0;
  double cell_size = 0.25;
  double wall_height = 2.5;
  Grid<CellKind> occupancy;
  /// Obstacle cells: owning instance. Free cells: floor or rug instance. Walls: kNoInstance.
  Grid<InstanceId> cell_instance;
  /// Per wall cell and side, the wall-panel instance of that face (kNoInstance if hidden).
  std::array<Grid<InstanceId>, 4> face_instance;
  std::vector<ObjectInstance> instances;  // instances[k].instance_id == k + 1
  InstanceId floor_instance_id = 1;
  InstanceId ceiling_instance_id = 2;

  int rows() const { return int(occupancy.rows()); }
  int cols() const { return int(occupancy.cols()); }
  bool in_bounds(Cell c) const { return c.row >= 0 && c.col >= 0 && c.row < rows() && c.col < cols(); }
  bool is_free(Cell c) const { return in_bounds(c) && occupancy(c.row, c.col) == CellKind::Free; }
  Cell cell_at(double x, double y) const;
  Eigen::Vector2d cell_center(Cell c) const;
  const ObjectInstance& instance(InstanceId id) const;
  bool has_instance(InstanceId id) const { return id >= 1 && id <= InstanceId(instances.size()); }
  SemanticClass class_of(InstanceId id) const { return instance(id).semantic_class; }

  friend bool operator==(const World& a, const World& b);
};

struct WorldGenParams {
  int rows = 48;
  int cols = 64;
  double cell_size = 0.25;
  double wall_height = 2.5;
  int room_count = 6;
  int min_room_cells = 12;
  int door_width_cells = 4;
  /// Probability that a split carves a narrow corridor strip instead of a room.
  double corridor_prob = 0.25;
  int corridor_width_cells = 5;
  int extra_doors = 2;
  int obstacle_count = 10;
  int rug_count = 2;
  int panel_max_cells = 8;
  double agent_radius = 0.2;
  /// Used by the bench when stepping the agent.
  bool slide_on_collision = true;
  int max_retries = 200;
};

struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Eigen::Vector2d position() const { return {x, y}; }
  Eigen::Vector2d forward() const;
  Eigen::Vector2d right() const;
};

struct CameraModel {
  int width = 640;
  int height = 480;
  double hfov = std::numbers::pi / 2;
  double cam_height = 1.0;
  double fx = 320.0;
  double fy = 320.0;
  double cx = 320.0;
  double cy = 240.0;

  /// Square pixels, principal point at the image center, fx from hfov.
  static CameraModel make(int width, int height, double hfov, double cam_height);
};

struct Observation {
  Grid<InstanceId> instance_image;
  Grid<float> depth_image;
  Pose2D pose;  // ground truth; harness-only
  int width() const { return int(instance_image.cols()); }
  int height() const { return int(instance_image.rows()); }
};

/// linear_v in m/s along heading, yaw_rate in rad/s (positive turns right).
struct ControlCommand {
  double linear_v = 0.0;
  double yaw_rate = 0.0;
  friend bool operator==(const ControlCommand&, const ControlCommand&) = default;
};

struct StepOutcome {
  Pose2D pose;
  bool collided = false;
};

World generate_world(std::uint64_t seed, const WorldGenParams& params);

/// Places a rows x cols furniture prism with its top-left cell at `corner`
/// (e.g. furniture moved in after mapping). Rolls back and returns nullopt if
/// any target cell is not plain floor or navigable space would split.
std::optional<InstanceId> try_add_obstacle(World& world, Cell corner, int rows, int cols, double height);

/// Free cells whose whole 3x3 neighbourhood is free; a disc of radius
/// <= 1.5 cells fits at their centers.
Grid<std::uint8_t> navigable_cells(const World& world);

/// Number of 4-connected components of cells with mask != 0.
int count_components(const Grid<std::uint8_t>& mask);

Observation render(const World& world, const CameraModel& camera, const Pose2D& pose);

/// Blocked moves hold position; with `slide` the disc instead moves along
/// the free axis component of the blocked displacement.
StepOutcome step_agent(const World& world, const Pose2D& pose, const ControlCommand& cmd, double dt,
                       double agent_radius = 0.2, bool slide = false);

/// True iff a disc at (x, y) overlaps any non-free cell or leaves the grid.
bool disc_collides(const World& world, double x, double y, double radius);

/// Multi-source geodesic field on the 8-connected free grid (no corner
/// cutting), meters between cell centers. Sources may be non-free cells
/// (object footprints); expansion only enters free cells. Unreached = +inf.
Grid<double> geodesic_field(const World& world, std::span<const Cell> sources);

Result<double> geodesic_distance(const World& world, const Pose2D& a, const Pose2D& b);

/// Geodesic from a pose to the nearest footprint cell of an instance.
Result<double> geodesic_to_instance(const World& world, const Pose2D& a, InstanceId id);

/// Euclidean distance from a point to the nearest footprint cell (as a square).
double distance_to_instance(const World& world, const Eigen::Vector2d& p, InstanceId id);

/// Poses every `spacing` meters along the shortest free-space path, headings
/// tangent to the path.
Result<std::vector<Pose2D>> shortest_pose_path(const World& world, const Pose2D& a, const Pose2D& b,
                                               double spacing);

}  // namespace tango::sim
