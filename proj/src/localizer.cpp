#include "tango/localizer.hpp"

#include <algorithm>
#include <cstdlib>

namespace tango::loc {

namespace {

// Map segments of one frame, in node order, plus their node indices.
struct FrameView {
  std::vector<topo::Segment> segments;
  std::vector<int> nodes;
};

FrameView frame_view(const topo::MapGraph& map, int frame) {
  FrameView v;
  v.nodes = map.frame_nodes(frame);
  for (int n : v.nodes) v.segments.push_back(map.nodes[std::size_t(n)]);
  return v;
}

}  // namespace

Result<Localization> localize(std::span<const topo::Segment> query, const topo::MapGraph& map,
                              const LocalizationState& state, const topo::AssociationModel& assoc) {
  const int frames = map.frame_count();
  if (map.nodes.empty() || frames == 0) throw Error(Errc::InvalidArgument, "localize: empty map");
  if (state.window_radius < 1) throw Error(Errc::InvalidArgument, "localize: window radius must be >= 1");
  const int prev = std::clamp(state.ref_index, 0, frames - 1);
  const int lo = std::max(0, prev - state.window_radius);
  const int hi = std::min(frames - 1, prev + state.window_radius);

  std::vector<FrameView> views;
  std::vector<std::vector<topo::Match>> matches;
  int best = -1;
  for (int f = lo; f <= hi; ++f) {
    views.push_back(frame_view(map, f));
    matches.push_back(views.back().segments.empty() ? std::vector<topo::Match>{}
                                                    : topo::associate(query, views.back().segments, assoc));
    const int k = f - lo;
    if (best < 0) {
      best = k;
      continue;
    }
    const auto& cur = matches[std::size_t(k)];
    const auto& bst = matches[std::size_t(best)];
    const int dc = std::abs(f - prev), db = std::abs(best + lo - prev);
    if (cur.size() > bst.size() || (cur.size() == bst.size() && dc < db)) best = k;
  }
  if (matches[std::size_t(best)].empty()) return Errc::LocalizationLost;

  Localization out;
  out.state = {best + lo, state.window_radius};
  std::vector<bool> matched(query.size(), false);
  for (const auto& [q, m] : matches[std::size_t(best)]) {
    out.correspondences.push_back({q, views[std::size_t(best)].nodes[std::size_t(m)]});
    matched[std::size_t(q)] = true;
  }
  for (int k : {best - 1, best + 1}) {
    if (k < 0 || k >= int(views.size())) continue;
    for (const auto& [q, m] : matches[std::size_t(k)]) {
      if (matched[std::size_t(q)]) continue;
      out.correspondences.push_back({q, views[std::size_t(k)].nodes[std::size_t(m)]});
      matched[std::size_t(q)] = true;
    }
  }
  std::sort(out.correspondences.begin(), out.correspondences.end(),
            [](const Correspondence& a, const Correspondence& b) { return a.query < b.query; });
  return out;
}

Result<SubGoalMask> make_subgoal_mask(std::vector<SubGoalEntry> entries, std::span<const topo::Segment> query) {
  if (entries.empty()) return Errc::NoViableSubgoal;
  double lo = entries.front().raw_cost, hi = lo;
  for (const SubGoalEntry& e : entries) lo = std::min(lo, e.raw_cost), hi = std::max(hi, e.raw_cost);
  SubGoalMask mask;
  for (SubGoalEntry& e : entries) e.norm_cost = hi > lo ? (e.raw_cost - lo) / (hi - lo) : 0.0;
  mask.entries = std::move(entries);

  // lowest raw cost; ties -> larger area, then lower local id
  auto better = [&](const SubGoalEntry& a, const SubGoalEntry& b) {
    if (a.raw_cost != b.raw_cost) return a.raw_cost < b.raw_cost;
    const topo::Segment& sa = query[std::size_t(a.query)];
    const topo::Segment& sb = query[std::size_t(b.query)];
    if (sa.area_px != sb.area_px) return sa.area_px > sb.area_px;
    return sa.local_id < sb.local_id;
  };
  mask.best = 0;
  for (std::size_t i = 1; i < mask.entries.size(); ++i)
    if (better(mask.entries[i], mask.entries[std::size_t(mask.best)])) mask.best = int(i);
  return mask;
}

Result<SubGoalMask> subgoal_mask(std::span<const Correspondence> correspondences, const topo::GoalCostField& costs,
                                 std::span<const topo::Segment> query) {
  std::vector<SubGoalEntry> entries;
  for (const Correspondence& c : correspondences) {
    if (!costs.reachable(c.node)) continue;
    entries.push_back({c.query, c.node, double(costs.cost[std::size_t(c.node)] + 1), 0.0});
  }
  return make_subgoal_mask(std::move(entries), query);
}

}  // namespace tango::loc
