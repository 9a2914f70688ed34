#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "tango/random.hpp"
#include "tango/topograph.hpp"

using namespace tango;
using namespace tango::topo;

namespace {

sim::Observation image_obs(const Grid<InstanceId>& ids) {
  sim::Observation o;
  o.instance_image = ids;
  o.depth_image = Grid<float>::Constant(ids.rows(), ids.cols(), 1.0f);
  return o;
}

Segment point_segment(double u, double v, InstanceId id, int frame = 0, int area = 100) {
  Segment s;
  s.frame_index = frame;
  s.instance_id = id;
  s.centroid_px = {u, v};
  s.area_px = area;
  return s;
}

}  // namespace

TEST_CASE("extract_segments") {
  SUBCASE("one instance filling the image") {
    const auto segs = extract_segments(image_obs(Grid<InstanceId>::Constant(480, 640, 7)));
    REQUIRE(segs.size() == 1);
    CHECK(segs[0].instance_id == 7);
    CHECK(segs[0].area_px == 640 * 480);
    CHECK(segs[0].centroid_px.x() == doctest::Approx(319.5));
    CHECK(segs[0].centroid_px.y() == doctest::Approx(239.5));
  }
  SUBCASE("occluder splits one instance in two") {
    Grid<InstanceId> img = Grid<InstanceId>::Constant(480, 640, 3);
    img.block(0, 300, 480, 40).setConstant(4);
    const auto segs = extract_segments(image_obs(img));
    REQUIRE(segs.size() == 3);
    int threes = 0;
    for (const auto& s : segs) threes += s.instance_id == 3;
    CHECK(threes == 2);
    CHECK(segs[0].local_id != segs[2].local_id);
  }
  SUBCASE("small components are filtered") {
    Grid<InstanceId> img = Grid<InstanceId>::Constant(480, 640, 1);
    img.block(10, 10, 5, 6).setConstant(2);  // 30 px
    const auto segs = extract_segments(image_obs(img), 0, {50});
    REQUIRE(segs.size() == 1);
    CHECK(segs[0].instance_id == 1);
  }
  SUBCASE("pixel runs cover exactly the segment area") {
    Grid<InstanceId> img = Grid<InstanceId>::Zero(48, 64);
    img.block(5, 5, 10, 20).setConstant(9);
    img.block(14, 20, 10, 10).setConstant(9);
    const auto segs = extract_segments(image_obs(img), 3, {1});
    REQUIRE(segs.size() == 1);
    int sum = 0;
    for (const auto& r : segs[0].pixel_runs) sum += r.length;
    CHECK(sum == segs[0].area_px);
    CHECK(segs[0].frame_index == 3);
  }
}

TEST_CASE("delaunay edges") {
  SUBCASE("triangle") {
    const std::vector<Segment> s{point_segment(0, 0, 1), point_segment(10, 0, 2), point_segment(0, 10, 3)};
    CHECK(delaunay_intra_edges(s) == std::vector<Edge>{{0, 1}, {0, 2}, {1, 2}});
  }
  SUBCASE("square corners give hull plus one diagonal") {
    const std::vector<Eigen::Vector2d> pts{{0, 0}, {10, 0}, {10, 10}, {0, 10}};
    const auto e = delaunay_edges(pts);
    CHECK(e.size() == 5);
    const bool d02 = std::count(e.begin(), e.end(), Edge{0, 2}) == 1;
    const bool d13 = std::count(e.begin(), e.end(), Edge{1, 3}) == 1;
    CHECK(d02 != d13);
  }
  SUBCASE("degenerate counts") {
    CHECK(delaunay_intra_edges(std::vector<Segment>{point_segment(1, 1, 1), point_segment(5, 5, 2)}).size() == 1);
    CHECK(delaunay_intra_edges(std::vector<Segment>{point_segment(1, 1, 1)}).empty());
    CHECK(delaunay_intra_edges(std::vector<Segment>{}).empty());
  }
  SUBCASE("collinear points chain in coordinate order") {
    const std::vector<Eigen::Vector2d> pts{{3, 3}, {1, 1}, {2, 2}, {0, 0}};
    CHECK(delaunay_edges(pts) == std::vector<Edge>{{0, 2}, {1, 2}, {1, 3}});
  }
  SUBCASE("random point sets match the empty-circumcircle triangulation") {
    Rng rng(11);
    for (int t = 0; t < 30; ++t) {
      std::vector<Eigen::Vector2d> pts;
      const int n = rng.uniform_int(3, 14);
      for (int i = 0; i < n; ++i) pts.emplace_back(rng.uniform(0, 640), rng.uniform(0, 480));
      std::set<Edge> brute;
      for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b)
          for (int c = b + 1; c < n; ++c)
            if (oracle::empty_circumcircle(pts, a, b, c)) brute.insert({{a, b}, {a, c}, {b, c}});
      const auto e = delaunay_edges(pts);
      CHECK(std::set<Edge>(e.begin(), e.end()) == brute);
    }
  }
}

TEST_CASE("associate") {
  std::vector<Segment> a{point_segment(10, 10, 1, 0), point_segment(50, 10, 2, 0), point_segment(90, 10, 3, 0)};
  std::vector<Segment> b{point_segment(12, 10, 2, 1), point_segment(52, 10, 3, 1), point_segment(92, 10, 4, 1)};
  for (int i = 0; i < 3; ++i) a[std::size_t(i)].local_id = b[std::size_t(i)].local_id = i;

  SUBCASE("ground truth matches co-visible instances") {
    CHECK(associate(a, b, AssociationModel::ground_truth()) == std::vector<Match>{{1, 0}, {2, 1}});
  }
  SUBCASE("p_drop = 1 empties the matching") {
    CHECK(associate(a, b, AssociationModel::noisy(1.0, 0.0, 3)).empty());
  }
  SUBCASE("noisy stream is reproducible") {
    const auto m = AssociationModel::noisy(0.2, 0.5, 99);
    CHECK(associate(a, b, m) == associate(a, b, m));
  }
  SUBCASE("invalid probabilities") {
    CHECK_THROWS_AS(AssociationModel::noisy(1.5, 0, 1), Error);
  }
}

TEST_CASE("build_map") {
  auto frame = [](std::initializer_list<std::pair<int, InstanceId>> cols) {
    Grid<InstanceId> img = Grid<InstanceId>::Zero(48, 64);
    for (const auto& [c, id] : cols) img.block(10 + c * c, c * 10, 10, 8).setConstant(id);
    return image_obs(img);
  };
  SUBCASE("one frame, three segments") {
    const std::vector<sim::Observation> f{frame({{0, 1}, {2, 2}, {4, 3}})};
    const auto g = build_map(f, AssociationModel::ground_truth(), {1, {1}});
    CHECK(g.nodes.size() == 3);
    CHECK(g.edges.size() == 3);
    for (const auto& e : g.edges) CHECK(e.kind == EdgeKind::Intra);
  }
  SUBCASE("two identical single-instance frames") {
    const std::vector<sim::Observation> f{frame({{1, 5}}), frame({{1, 5}})};
    const auto g = build_map(f, AssociationModel::ground_truth(), {1, {1}});
    CHECK(g.nodes.size() == 2);
    REQUIRE(g.edges.size() == 1);
    CHECK(g.edges[0] == GraphEdge{0, 1, EdgeKind::Inter});
  }
  SUBCASE("tracked instance chains at zero cost") {
    std::vector<sim::Observation> f;
    for (int t = 0; t < 10; ++t) f.push_back(frame({{0, 1}, {2, 2}, {4, InstanceId(10 + t)}}));
    const auto g = build_map(f, AssociationModel::ground_truth(), {1, {1}});
    int goal = -1;
    for (std::size_t n = 0; n < g.nodes.size(); ++n)
      if (g.nodes[n].instance_id == 1 && g.nodes[n].frame_index == 9) goal = int(n);
    const auto costs = compute_goal_costs(g, goal);
    for (std::size_t n = 0; n < g.nodes.size(); ++n)
      if (g.nodes[n].instance_id == 1) CHECK(costs.cost[n] == 0);
  }
  SUBCASE("node filter drops segments before the graph") {
    const std::vector<sim::Observation> f{frame({{0, 1}, {2, 2}, {4, 3}})};
    const auto g = build_map(f, AssociationModel::ground_truth(), {1, {1}},
                             [](const Segment& s) { return s.instance_id != 2; });
    CHECK(g.nodes.size() == 2);
  }
}

TEST_CASE("compute_goal_costs") {
  MapGraph g;
  for (int i = 0; i < 6; ++i) g.nodes.push_back(point_segment(i, 0, i + 1));
  // 0 -1- 1 -1- 2 -1- 3 (goal), 4 -0- 2, 5 isolated
  g.edges = {{0, 1, EdgeKind::Intra}, {1, 2, EdgeKind::Intra}, {2, 3, EdgeKind::Intra}, {2, 4, EdgeKind::Inter}};
  const auto f = compute_goal_costs(g, 3);
  CHECK(f.cost[0] == 3);
  CHECK(f.cost[2] == 1);
  CHECK(f.cost[4] == 1);
  CHECK_FALSE(f.reachable(5));
  CHECK(f.cost == std::vector<int>{3, 2, 1, 0, 1, -1});
  CHECK_THROWS_AS(compute_goal_costs(g, 9), Error);
}

TEST_CASE("goal costs agree with path enumeration on small graphs") {
  Rng rng(21);
  for (int t = 0; t < 50; ++t) {
    MapGraph g;
    const int n = rng.uniform_int(1, 8);
    for (int i = 0; i < n; ++i) g.nodes.push_back(point_segment(i, 0, i + 1));
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b)
        if (rng.bernoulli(0.3)) g.edges.push_back({a, b, rng.bernoulli(0.5) ? EdgeKind::Intra : EdgeKind::Inter});
    const int goal = rng.uniform_int(0, n - 1);
    CHECK(compute_goal_costs(g, goal).cost == oracle::enumerate_goal_costs(g, goal));
  }
}

TEST_CASE("map text format round trips") {
  MapGraph g;
  Segment s = point_segment(10.25, 3.5, 4, 0, 3);
  s.pixel_runs = {{3, 9, 3}};
  g.nodes = {s, point_segment(1.0 / 3.0, 2, 5, 1)};
  g.edges = {{0, 1, EdgeKind::Inter}};
  g.goal_node = 1;
  std::stringstream ss;
  write_map(ss, g);
  const MapGraph h = read_map(ss);
  CHECK(h.nodes.size() == 2);
  CHECK(h.nodes[1].centroid_px.x() == g.nodes[1].centroid_px.x());
  CHECK(h.nodes[0].pixel_runs == g.nodes[0].pixel_runs);
  CHECK(h.edges == g.edges);
  CHECK(h.goal_node == g.goal_node);

  std::stringstream bad("tango-map 2\n");
  CHECK_THROWS_AS(read_map(bad), Error);
}
