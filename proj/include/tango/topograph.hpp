#pragma once

// Object-level topological map: image segments as nodes, Delaunay edges
// between segments of one frame (weight 1) and association edges between
// frames (weight 0).

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "tango/core.hpp"
#include "tango/simworld.hpp"

namespace tango::topo {

struct PixelRun {
  int row = 0;
  int col_begin = 0;
  int length = 0;
  friend bool operator==(const PixelRun&, const PixelRun&) = default;
};

struct Segment {
  int frame_index = 0;
  int local_id = 0;
  InstanceId instance_id = sim::kNoInstance;
  Eigen::Vector2d centroid_px = Eigen::Vector2d::Zero();  // (u, v)
  int area_px = 0;
  std::vector<PixelRun> pixel_runs;
};

struct SegmentParams {
  /// Minimum component area at 640x480; scaled with image area.
  int min_area = 50;
};

/// One segment per 4-connected component of equal instance id.
std::vector<Segment> extract_segments(const sim::Observation& obs, int frame_index = 0,
                                      const SegmentParams& params = {});

using Edge = std::pair<int, int>;

/// Edges of the Delaunay triangulation of the centroids (indices into
/// `segments`, i < j, sorted).
std::vector<Edge> delaunay_intra_edges(std::span<const Segment> segments);

/// Delaunay edges of arbitrary points; same conventions.
std::vector<Edge> delaunay_edges(std::span<const Eigen::Vector2d> points);

enum class AssociationMode : std::uint8_t { GroundTruth, Noisy };

struct AssociationModel {
  AssociationMode mode = AssociationMode::GroundTruth;
  double p_drop = 0.0;
  double p_swap = 0.0;
  std::uint64_t rng_seed = 0;

  static AssociationModel ground_truth() { return {}; }
  static AssociationModel noisy(double p_drop, double p_swap, std::uint64_t seed);
  void validate() const;
};

using Match = std::pair<int, int>;  // (index in frame_a, index in frame_b)

/// Partial matching between two frames' segments. The noisy stream is seeded
/// from (rng_seed, frame indices of both sides) so repeated calls agree.
std::vector<Match> associate(std::span<const Segment> frame_a, std::span<const Segment> frame_b,
                             const AssociationModel& model);

enum class EdgeKind : std::uint8_t { Intra, Inter };

constexpr int edge_weight(EdgeKind k) { return k == EdgeKind::Intra ? 1 : 0; }

struct GraphEdge {
  int a = 0;
  int b = 0;
  EdgeKind kind = EdgeKind::Intra;
  friend bool operator==(const GraphEdge&, const GraphEdge&) = default;
};

struct MapGraph {
  std::vector<Segment> nodes;
  std::vector<GraphEdge> edges;
  std::optional<int> goal_node;

  int frame_count() const;
  /// Node indices of one frame, in local_id order.
  std::vector<int> frame_nodes(int frame_index) const;
  /// Adjacency lists (neighbor, kind), built on demand.
  std::vector<std::vector<std::pair<int, EdgeKind>>> adjacency() const;
};

/// Node filter applied before segments enter the graph (e.g. drop floor/ceiling).
using NodePredicate = std::function<bool(const Segment&)>;

struct MapParams {
  int window = 1;
  SegmentParams segments;
};

MapGraph build_map(std::span<const sim::Observation> frames, const AssociationModel& assoc,
                   const MapParams& params = {}, const NodePredicate& keep = {});

/// Same as build_map for frames already segmented (frame_index must be 0..n-1).
MapGraph build_map_from_segments(std::vector<std::vector<Segment>> frames, const AssociationModel& assoc,
                                 int window = 1);

struct GoalCostField {
  static constexpr int kUnreachable = -1;
  std::vector<int> cost;  // kUnreachable for disconnected nodes
  bool reachable(int node) const { return cost[std::size_t(node)] != kUnreachable; }
};

/// Exact shortest path lengths to `goal_node` under {Intra: 1, Inter: 0}.
GoalCostField compute_goal_costs(const MapGraph& graph, int goal_node);

/// Versioned text format (`tango-map 1`).
void write_map(std::ostream& os, const MapGraph& graph);
MapGraph read_map(std::istream& is);

}  // namespace tango::topo
