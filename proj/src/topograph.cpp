#include "tango/topograph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "tango/random.hpp"

namespace tango::topo {

// ---------------------------------------------------------------------------
// Segmentation

std::vector<Segment> extract_segments(const sim::Observation& obs, int frame_index, const SegmentParams& params) {
  const int H = obs.height(), W = obs.width();
  const auto& img = obs.instance_image;
  const double scale = double(W) * H / (640.0 * 480.0);
  const int min_area = std::max(1, int(std::lround(params.min_area * scale)));

  // Label runs, then union runs that overlap vertically with the same id.
  struct Run {
    int row, c0, c1;
    InstanceId id;
  };
  std::vector<Run> runs;
  std::vector<int> row_start(std::size_t(H) + 1, 0);
  for (int r = 0; r < H; ++r) {
    row_start[std::size_t(r)] = int(runs.size());
    int c = 0;
    while (c < W) {
      const InstanceId id = img(r, c);
      int e = c;
      while (e + 1 < W && img(r, e + 1) == id) ++e;
      if (id != sim::kNoInstance) runs.push_back({r, c, e, id});
      c = e + 1;
    }
  }
  row_start[std::size_t(H)] = int(runs.size());

  std::vector<int> parent(runs.size());
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = int(i);
  auto find = [&](int x) {
    while (parent[std::size_t(x)] != x) x = parent[std::size_t(x)] = parent[std::size_t(parent[std::size_t(x)])];
    return x;
  };
  for (int r = 1; r < H; ++r) {
    int j = row_start[std::size_t(r - 1)];
    const int j_end = row_start[std::size_t(r)];
    for (int i = row_start[std::size_t(r)]; i < row_start[std::size_t(r + 1)]; ++i) {
      const Run& cur = runs[std::size_t(i)];
      while (j < j_end && runs[std::size_t(j)].c1 < cur.c0) ++j;
      for (int k = j; k < j_end && runs[std::size_t(k)].c0 <= cur.c1; ++k)
        if (runs[std::size_t(k)].id == cur.id) {
          const int a = find(i), b = find(k);
          if (a != b) parent[std::size_t(std::max(a, b))] = std::min(a, b);
        }
    }
  }

  // Roots are the first run (raster order) of each component.
  std::vector<int> comp_of_root(runs.size(), -1);
  std::vector<Segment> comps;
  std::vector<double> su, sv;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const int root = find(int(i));
    int& ci = comp_of_root[std::size_t(root)];
    if (ci < 0) {
      ci = int(comps.size());
      Segment s;
      s.frame_index = frame_index;
      s.instance_id = runs[i].id;
      comps.push_back(std::move(s));
      su.push_back(0);
      sv.push_back(0);
    }
    Segment& s = comps[std::size_t(ci)];
    const Run& run = runs[i];
    const int len = run.c1 - run.c0 + 1;
    s.pixel_runs.push_back({run.row, run.c0, len});
    s.area_px += len;
    su[std::size_t(ci)] += double(len) * (run.c0 + run.c1) / 2.0;
    sv[std::size_t(ci)] += double(len) * run.row;
  }

  std::vector<Segment> out;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    Segment& s = comps[i];
    if (s.area_px < min_area) continue;
    s.centroid_px = {su[i] / s.area_px, sv[i] / s.area_px};
    s.local_id = int(out.size());
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Delaunay (Bowyer-Watson)

namespace {

using Vec2 = Eigen::Vector2d;

long double orient(const Vec2& a, const Vec2& b, const Vec2& c) {
  return (static_cast<long double>(b.x()) - a.x()) * (static_cast<long double>(c.y()) - a.y()) -
         (static_cast<long double>(b.y()) - a.y()) * (static_cast<long double>(c.x()) - a.x());
}

// > 0 iff d lies strictly inside the circumcircle of counter-clockwise (a, b, c).
long double incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const long double adx = a.x() - d.x(), ady = a.y() - d.y();
  const long double bdx = b.x() - d.x(), bdy = b.y() - d.y();
  const long double cdx = c.x() - d.x(), cdy = c.y() - d.y();
  const long double ad = adx * adx + ady * ady;
  const long double bd = bdx * bdx + bdy * bdy;
  const long double cd = cdx * cdx + cdy * cdy;
  return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx);
}

struct Tri {
  int v[3];
};

std::vector<Edge> triangulate_unique(const std::vector<Vec2>& pts) {
  const int n = int(pts.size());
  std::vector<Edge> edges;
  if (n < 2) return edges;

  double minx = pts[0].x(), maxx = minx, miny = pts[0].y(), maxy = miny;
  for (const Vec2& p : pts) {
    minx = std::min(minx, p.x()), maxx = std::max(maxx, p.x());
    miny = std::min(miny, p.y()), maxy = std::max(maxy, p.y());
  }
  const double span = std::max({maxx - minx, maxy - miny, 1e-9});

  // Collinear sets: chain neighbours in lexicographic order.
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[std::size_t(i)] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return pts[std::size_t(a)].x() < pts[std::size_t(b)].x() ||
           (pts[std::size_t(a)].x() == pts[std::size_t(b)].x() && pts[std::size_t(a)].y() < pts[std::size_t(b)].y());
  });
  const Vec2& p0 = pts[std::size_t(order.front())];
  const Vec2& p1 = pts[std::size_t(order.back())];
  bool collinear = true;
  for (const Vec2& p : pts)
    if (std::abs(double(orient(p0, p1, p))) > 1e-12 * span * span) collinear = false;
  if (n == 2 || collinear) {
    for (int i = 0; i + 1 < n; ++i)
      edges.emplace_back(std::min(order[std::size_t(i)], order[std::size_t(i + 1)]),
                         std::max(order[std::size_t(i)], order[std::size_t(i + 1)]));
    return edges;
  }

  std::vector<Vec2> v = pts;
  const double cxm = (minx + maxx) / 2, cym = (miny + maxy) / 2, big = 1e5 * span;
  v.emplace_back(cxm - big, cym - big);
  v.emplace_back(cxm + big, cym - big);
  v.emplace_back(cxm, cym + big);
  std::vector<Tri> tris{{{n, n + 1, n + 2}}};
  auto ccw = [&](Tri t) {
    if (orient(v[std::size_t(t.v[0])], v[std::size_t(t.v[1])], v[std::size_t(t.v[2])]) < 0) std::swap(t.v[1], t.v[2]);
    return t;
  };
  tris[0] = ccw(tris[0]);

  for (int idx : order) {
    const Vec2& p = v[std::size_t(idx)];
    std::vector<Tri> keep;
    std::map<Edge, int> boundary;
    for (const Tri& t : tris) {
      if (incircle(v[std::size_t(t.v[0])], v[std::size_t(t.v[1])], v[std::size_t(t.v[2])], p) > 0) {
        for (int k = 0; k < 3; ++k) {
          const int a = t.v[k], b = t.v[(k + 1) % 3];
          ++boundary[{std::min(a, b), std::max(a, b)}];
        }
      } else {
        keep.push_back(t);
      }
    }
    for (const auto& [e, count] : boundary)
      if (count == 1 && orient(v[std::size_t(e.first)], v[std::size_t(e.second)], p) != 0)
        keep.push_back(ccw(Tri{{e.first, e.second, idx}}));
    tris = std::move(keep);
  }

  std::set<Edge> es;
  for (const Tri& t : tris)
    for (int k = 0; k < 3; ++k) {
      const int a = t.v[k], b = t.v[(k + 1) % 3];
      if (a < n && b < n) es.insert({std::min(a, b), std::max(a, b)});
    }

  // Hull edges can be lost to the finite super triangle; restore them.
  std::vector<int> hull;
  for (int pass = 0; pass < 2; ++pass) {
    const std::size_t base = hull.size();
    for (int k = 0; k < n; ++k) {
      const int i = pass == 0 ? order[std::size_t(k)] : order[std::size_t(n - 1 - k)];
      while (hull.size() >= base + 2 &&
             orient(pts[std::size_t(hull[hull.size() - 2])], pts[std::size_t(hull.back())], pts[std::size_t(i)]) < 0)
        hull.pop_back();
      hull.push_back(i);
    }
    hull.pop_back();
  }
  for (std::size_t k = 0; k < hull.size(); ++k) {
    const int a = hull[k], b = hull[(k + 1) % hull.size()];
    es.insert({std::min(a, b), std::max(a, b)});
  }
  return {es.begin(), es.end()};
}

}  // namespace

std::vector<Edge> delaunay_edges(std::span<const Eigen::Vector2d> points) {
  // Collapse coincident points onto their first occurrence.
  std::vector<Vec2> unique;
  std::vector<int> rep(points.size());
  std::vector<int> unique_src;
  std::map<std::pair<double, double>, int> seen;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto key = std::make_pair(points[i].x(), points[i].y());
    auto it = seen.find(key);
    if (it == seen.end()) {
      seen.emplace(key, int(unique.size()));
      rep[i] = int(unique.size());
      unique.push_back(points[i]);
      unique_src.push_back(int(i));
    } else {
      rep[i] = it->second;
    }
  }
  std::set<Edge> out;
  for (const auto& [a, b] : triangulate_unique(unique)) {
    const int x = unique_src[std::size_t(a)], y = unique_src[std::size_t(b)];
    out.insert({std::min(x, y), std::max(x, y)});
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    const int src = unique_src[std::size_t(rep[i])];
    if (src != int(i)) out.insert({std::min(src, int(i)), std::max(src, int(i))});
  }
  return {out.begin(), out.end()};
}

std::vector<Edge> delaunay_intra_edges(std::span<const Segment> segments) {
  std::vector<Eigen::Vector2d> pts;
  pts.reserve(segments.size());
  for (const Segment& s : segments) {
    if (s.frame_index != segments.front().frame_index)
      throw Error(Errc::InvalidArgument, "delaunay_intra_edges: segments span several frames");
    pts.push_back(s.centroid_px);
  }
  return delaunay_edges(pts);
}

// ---------------------------------------------------------------------------
// Association

AssociationModel AssociationModel::noisy(double p_drop, double p_swap, std::uint64_t seed) {
  AssociationModel m{AssociationMode::Noisy, p_drop, p_swap, seed};
  m.validate();
  return m;
}

void AssociationModel::validate() const {
  if (!(p_drop >= 0 && p_drop <= 1 && p_swap >= 0 && p_swap <= 1))
    throw Error(Errc::InvalidArgument, "association probabilities must lie in [0, 1]");
  if (mode == AssociationMode::GroundTruth && (p_drop != 0 || p_swap != 0))
    throw Error(Errc::InvalidArgument, "ground-truth association cannot carry noise");
}

std::vector<Match> associate(std::span<const Segment> frame_a, std::span<const Segment> frame_b,
                             const AssociationModel& model) {
  model.validate();
  auto by_instance = [](std::span<const Segment> f) {
    std::map<InstanceId, std::vector<int>> groups;
    for (std::size_t i = 0; i < f.size(); ++i) groups[f[i].instance_id].push_back(int(i));
    for (auto& [id, idx] : groups)
      std::sort(idx.begin(), idx.end(), [&](int x, int y) {
        const Segment& a = f[std::size_t(x)];
        const Segment& b = f[std::size_t(y)];
        return a.area_px > b.area_px || (a.area_px == b.area_px && a.local_id < b.local_id);
      });
    return groups;
  };
  const auto ga = by_instance(frame_a);
  const auto gb = by_instance(frame_b);

  std::vector<Match> truth;
  for (const auto& [id, ia] : ga) {
    auto it = gb.find(id);
    if (it == gb.end()) continue;
    for (std::size_t k = 0; k < std::min(ia.size(), it->second.size()); ++k) truth.emplace_back(ia[k], it->second[k]);
  }
  std::sort(truth.begin(), truth.end());
  if (model.mode == AssociationMode::GroundTruth || truth.empty()) return truth;

  const int fa = frame_a.empty() ? 0 : frame_a.front().frame_index;
  const int fb = frame_b.empty() ? 0 : frame_b.front().frame_index;
  Rng rng(mix_seed(mix_seed(model.rng_seed, std::uint64_t(std::uint32_t(fa))), std::uint64_t(std::uint32_t(fb))));
  std::vector<Match> out;
  std::vector<bool> used_b(frame_b.size(), false);
  for (const auto& [a, b] : truth) {
    const bool drop = rng.bernoulli(model.p_drop);
    const bool swap = rng.bernoulli(model.p_swap);
    const int target = rng.uniform_int(0, int(frame_b.size()) - 1);
    if (drop) continue;
    const int bb = swap ? target : b;
    if (used_b[std::size_t(bb)]) continue;
    used_b[std::size_t(bb)] = true;
    out.emplace_back(a, bb);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Graph

int MapGraph::frame_count() const {
  int m = 0;
  for (const Segment& s : nodes) m = std::max(m, s.frame_index + 1);
  return m;
}

std::vector<int> MapGraph::frame_nodes(int frame_index) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].frame_index == frame_index) out.push_back(int(i));
  return out;
}

std::vector<std::vector<std::pair<int, EdgeKind>>> MapGraph::adjacency() const {
  std::vector<std::vector<std::pair<int, EdgeKind>>> adj(nodes.size());
  for (const GraphEdge& e : edges) {
    adj[std::size_t(e.a)].emplace_back(e.b, e.kind);
    adj[std::size_t(e.b)].emplace_back(e.a, e.kind);
  }
  return adj;
}

MapGraph build_map_from_segments(std::vector<std::vector<Segment>> frames, const AssociationModel& assoc,
                                 int window) {
  if (frames.empty()) throw Error(Errc::InvalidArgument, "build_map: need at least one frame");
  if (window < 1) throw Error(Errc::InvalidArgument, "build_map: window must be >= 1");
  MapGraph g;
  std::vector<int> offset;
  for (std::size_t t = 0; t < frames.size(); ++t) {
    offset.push_back(int(g.nodes.size()));
    for (Segment& s : frames[t]) {
      s.frame_index = int(t);
      g.nodes.push_back(s);
    }
  }
  std::set<std::pair<int, int>> seen;
  auto add = [&](int a, int b, EdgeKind kind) {
    if (a == b) return;
    if (a > b) std::swap(a, b);
    if (seen.insert({a, b}).second) g.edges.push_back({a, b, kind});
  };
  for (std::size_t t = 0; t < frames.size(); ++t)
    for (const auto& [i, j] : delaunay_intra_edges(frames[t])) add(offset[t] + i, offset[t] + j, EdgeKind::Intra);
  for (std::size_t t = 0; t < frames.size(); ++t)
    for (int k = 1; k <= window && t + std::size_t(k) < frames.size(); ++k) {
      const std::size_t u = t + std::size_t(k);
      for (const auto& [i, j] : associate(frames[t], frames[u], assoc))
        add(offset[t] + i, offset[u] + j, EdgeKind::Inter);
    }
  return g;
}

MapGraph build_map(std::span<const sim::Observation> frames, const AssociationModel& assoc, const MapParams& params,
                   const NodePredicate& keep) {
  std::vector<std::vector<Segment>> segs;
  for (std::size_t t = 0; t < frames.size(); ++t) {
    auto all = extract_segments(frames[t], int(t), params.segments);
    if (keep) std::erase_if(all, [&](const Segment& s) { return !keep(s); });
    segs.push_back(std::move(all));
  }
  return build_map_from_segments(std::move(segs), assoc, params.window);
}

GoalCostField compute_goal_costs(const MapGraph& graph, int goal_node) {
  if (goal_node < 0 || goal_node >= int(graph.nodes.size()))
    throw Error(Errc::InvalidArgument, "compute_goal_costs: goal node out of range");
  const auto adj = graph.adjacency();
  GoalCostField f;
  f.cost.assign(graph.nodes.size(), GoalCostField::kUnreachable);
  // 0-1 BFS: weight-0 relaxations go to the front of the deque.
  std::deque<int> dq{goal_node};
  f.cost[std::size_t(goal_node)] = 0;
  std::vector<bool> done(graph.nodes.size(), false);
  while (!dq.empty()) {
    const int n = dq.front();
    dq.pop_front();
    if (done[std::size_t(n)]) continue;
    done[std::size_t(n)] = true;
    for (const auto& [m, kind] : adj[std::size_t(n)]) {
      const int nd = f.cost[std::size_t(n)] + edge_weight(kind);
      int& cur = f.cost[std::size_t(m)];
      if (cur == GoalCostField::kUnreachable || nd < cur) {
        cur = nd;
        if (edge_weight(kind) == 0) dq.push_front(m);
        else dq.push_back(m);
      }
    }
  }
  return f;
}

// ---------------------------------------------------------------------------
// Text format

void write_map(std::ostream& os, const MapGraph& g) {
  std::ostringstream buf;
  buf.precision(17);
  buf << "tango-map 1\n";
  buf << "nodes " << g.nodes.size() << '\n';
  for (const Segment& s : g.nodes) {
    buf << s.frame_index << ' ' << s.local_id << ' ' << s.instance_id << ' ' << s.centroid_px.x() << ' '
        << s.centroid_px.y() << ' ' << s.area_px << ' ' << s.pixel_runs.size();
    for (const PixelRun& r : s.pixel_runs) buf << ' ' << r.row << ' ' << r.col_begin << ' ' << r.length;
    buf << '\n';
  }
  buf << "edges " << g.edges.size() << '\n';
  for (const GraphEdge& e : g.edges) buf << e.a << ' ' << e.b << ' ' << (e.kind == EdgeKind::Intra ? "intra" : "inter") << '\n';
  buf << "goal " << (g.goal_node ? *g.goal_node : -1) << '\n';
  os << buf.str();
}

MapGraph read_map(std::istream& is) {
  auto fail = [](const std::string& what) { return Error(Errc::Parse, "read_map: " + what); };
  std::string tag;
  int version = 0;
  if (!(is >> tag >> version) || tag != "tango-map") throw fail("missing header");
  if (version != 1) throw fail("unsupported version " + std::to_string(version));
  MapGraph g;
  std::size_t n = 0;
  if (!(is >> tag >> n) || tag != "nodes") throw fail("expected node count");
  g.nodes.resize(n);
  for (Segment& s : g.nodes) {
    double u = 0, v = 0;
    std::size_t runs = 0;
    if (!(is >> s.frame_index >> s.local_id >> s.instance_id >> u >> v >> s.area_px >> runs)) throw fail("bad node");
    s.centroid_px = {u, v};
    s.pixel_runs.resize(runs);
    for (PixelRun& r : s.pixel_runs)
      if (!(is >> r.row >> r.col_begin >> r.length)) throw fail("bad pixel run");
  }
  std::size_t m = 0;
  if (!(is >> tag >> m) || tag != "edges") throw fail("expected edge count");
  g.edges.resize(m);
  for (GraphEdge& e : g.edges) {
    std::string kind;
    if (!(is >> e.a >> e.b >> kind)) throw fail("bad edge");
    if (kind != "intra" && kind != "inter") throw fail("bad edge kind " + kind);
    e.kind = kind == "intra" ? EdgeKind::Intra : EdgeKind::Inter;
    if (e.a < 0 || e.b < 0 || std::size_t(e.a) >= n || std::size_t(e.b) >= n) throw fail("edge endpoint out of range");
  }
  int goal = -1;
  if (!(is >> tag >> goal) || tag != "goal") throw fail("expected goal");
  if (goal >= 0) g.goal_node = goal;
  return g;
}

}  // namespace tango::topo
