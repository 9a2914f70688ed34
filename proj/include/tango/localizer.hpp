#pragma once

// Localization of the live frame against the map within a temporal window,
// and the per-segment sub-goal cost mask.

#include <optional>
#include <span>
#include <vector>

#include "tango/core.hpp"
#include "tango/topograph.hpp"

namespace tango::loc {

struct LocalizationState {
  int ref_index = 0;
  int window_radius = 3;
};

/// Query segment `query` corresponds to map node `node`.
struct Correspondence {
  int query = 0;
  int node = 0;
  friend bool operator==(const Correspondence&, const Correspondence&) = default;
};

struct Localization {
  LocalizationState state;
  std::vector<Correspondence> correspondences;
};

/// Candidate frames are [ref - r, ref + r] clamped to the map. The frame
/// with most matches wins (ties: nearest to the previous ref, then lower
/// index); its matches are returned plus matches of still-unmatched query
/// segments against the winner's neighbouring frames.
Result<Localization> localize(std::span<const topo::Segment> query, const topo::MapGraph& map,
                              const LocalizationState& state, const topo::AssociationModel& assoc);

struct SubGoalEntry {
  int query = 0;  // index into the query segment list
  int node = -1;  // matched map node; -1 when costs come from elsewhere
  double raw_cost = 0.0;
  double norm_cost = 0.0;
};

struct SubGoalMask {
  std::vector<SubGoalEntry> entries;
  int best = -1;  // index into entries
  bool empty() const { return entries.empty(); }
};

/// Raw cost = goal cost of the matched node + 1 (one intra hop from the live
/// frame into the map). Unreachable matches are dropped.
Result<SubGoalMask> subgoal_mask(std::span<const Correspondence> correspondences, const topo::GoalCostField& costs,
                                 std::span<const topo::Segment> query);

/// Builds the mask from already-known raw costs (query index, cost); applies
/// the same normalization and best-entry rule.
Result<SubGoalMask> make_subgoal_mask(std::vector<SubGoalEntry> entries, std::span<const topo::Segment> query);

}  // namespace tango::loc
