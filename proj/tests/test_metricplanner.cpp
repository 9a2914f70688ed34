#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "tango/metricplanner.hpp"
#include "tango/random.hpp"

using namespace tango;
using namespace tango::metric;

namespace {

const sim::CameraModel kCam = sim::CameraModel::make(640, 480, std::numbers::pi / 2, 1.0);

topo::Segment run_segment(std::initializer_list<topo::PixelRun> runs, InstanceId id = 5) {
  topo::Segment s;
  s.instance_id = id;
  s.pixel_runs = runs;
  double su = 0, sv = 0;
  for (const auto& r : runs) {
    s.area_px += r.length;
    su += r.length * (r.col_begin + (r.length - 1) / 2.0);
    sv += double(r.length) * r.row;
  }
  s.centroid_px = {su / s.area_px, sv / s.area_px};
  return s;
}

BevGrid small_grid(double fwd = 1.0, double lat = 0.5) {
  BevGrid g;
  g.forward_extent = fwd;
  g.lateral_extent = lat;
  return g;
}

}  // namespace

TEST_CASE("classify_traversable") {
  const auto floor = run_segment({{400, 0, 640}}, 1);
  const auto chair = run_segment({{300, 10, 50}}, 7);
  const auto table = run_segment({{200, 100, 50}}, 8);
  const std::vector<topo::Segment> segs{floor, chair, table};
  auto is_floor = [](const topo::Segment& s) { return s.instance_id == 1; };
  const auto mask = classify_traversable(segs, 640, 480, is_floor);
  CHECK(mask.cast<int>().sum() == 640);
  CHECK((mask.row(400) == 1).all());

  SUBCASE("wall close-up gives an empty mask") {
    const std::vector<topo::Segment> wall{run_segment({{0, 0, 640}}, 30)};
    CHECK((classify_traversable(wall, 640, 480, is_floor) == 0).all());
  }
  SUBCASE("configured extra classes are included") {
    auto floor_or_rug = [](const topo::Segment& s) { return s.instance_id == 1 || s.instance_id == 7; };
    CHECK(classify_traversable(segs, 640, 480, floor_or_rug).cast<int>().sum() == 690);
  }
}

TEST_CASE("pinhole projection") {
  const BevGrid grid;
  SUBCASE("principal column") {
    const Grid<float> depth = Grid<float>::Constant(480, 640, 2.0f);
    const std::vector<Eigen::Vector2i> px{{320, 300}};
    const auto pts = unproject(px, depth, kCam, grid);
    REQUIRE(pts.size() == 1);
    CHECK(pts[0].x() == 2.0);
    CHECK(pts[0].y() == 0.0);
  }
  SUBCASE("one focal length right") {
    const Eigen::Vector2d p = to_bev(unproject_pixel(kCam.cx + kCam.fx, 300.0, 2.0, kCam));
    CHECK(p.x() == 2.0);
    CHECK(p.y() == doctest::Approx(2.0));
  }
  SUBCASE("invalid and out-of-extent depths are dropped") {
    Grid<float> depth = Grid<float>::Constant(480, 640, 2.0f);
    depth(300, 10) = 0.0f;
    depth(300, 11) = 50.0f;
    const std::vector<Eigen::Vector2i> px{{10, 300}, {11, 300}};
    CHECK(unproject(px, depth, kCam, grid).empty());
  }
  SUBCASE("round trip") {
    const Eigen::Vector3d p = unproject_pixel(123.25, 400.5, 3.5, kCam);
    const Eigen::Vector2d uv = project_point(p, kCam);
    CHECK(uv.x() == doctest::Approx(123.25));
    CHECK(uv.y() == doctest::Approx(400.5));
  }
}

TEST_CASE("bev grid cells") {
  const BevGrid g;
  CHECK(g.rows() == 121);
  CHECK(g.cols() == 121);
  CHECK(g.robot_cell() == Cell{0, 60});
  CHECK(g.cell_of({1.0, -0.5}) == Cell{20, 50});
  CHECK(g.center_of({20, 50}).isApprox(Eigen::Vector2d(1.0, -0.5)));
}

TEST_CASE("select_subgoal_point") {
  const BevGrid grid;
  SUBCASE("farthest point wins") {
    Grid<float> depth = Grid<float>::Zero(480, 640);
    for (int v = 0; v < 10; ++v) depth(300 + v, 320) = float(1.5 + 2.5 * v / 9.0);
    const auto s = run_segment({{300, 320, 1}, {301, 320, 1}, {302, 320, 1}, {303, 320, 1}, {304, 320, 1},
                                {305, 320, 1}, {306, 320, 1}, {307, 320, 1}, {308, 320, 1}, {309, 320, 1}});
    const auto p = select_subgoal_point(s, depth, kCam, grid);
    REQUIRE(p.ok());
    CHECK(p->x() == doctest::Approx(4.0));
  }
  SUBCASE("single pixel") {
    Grid<float> depth = Grid<float>::Constant(480, 640, 2.5f);
    const auto p = select_subgoal_point(run_segment({{250, 400, 1}}), depth, kCam, grid);
    REQUIRE(p.ok());
    CHECK(p->isApprox(to_bev(unproject_pixel(400.0, 250.0, 2.5, kCam))));
  }
  SUBCASE("beyond the extent clamps along the centroid bearing") {
    Grid<float> depth = Grid<float>::Constant(480, 640, 9.0f);
    const auto s = run_segment({{200, 350, 11}});
    const auto p = select_subgoal_point(s, depth, kCam, grid);
    REQUIRE(p.ok());
    CHECK(p->x() == doctest::Approx(6.0));
    CHECK(p->y() / p->x() == doctest::Approx((s.centroid_px.x() - kCam.cx) / kCam.fx));
  }
  SUBCASE("no valid depth") {
    const Grid<float> depth = Grid<float>::Zero(480, 640);
    CHECK(select_subgoal_point(run_segment({{200, 350, 11}}), depth, kCam, grid).error() ==
          Errc::SubgoalProjectionFailed);
  }
}

TEST_CASE("distance transform matches brute force") {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    Grid<std::uint8_t> trav(20, 20);
    const double p = rng.uniform(0.5, 0.95);
    for (int r = 0; r < 20; ++r)
      for (int c = 0; c < 20; ++c) trav(r, c) = rng.bernoulli(p) ? 1 : 0;
    const auto fast = distance_transform(trav, 0.05);
    const auto slow = oracle::brute_distance(trav, 0.05);
    CHECK((fast - slow).abs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("build_costmap") {
  const BevGrid g = small_grid();
  const CostMapParams params;
  SUBCASE("all traversable: cost only near the border") {
    const auto m = build_costmap(Grid<std::uint8_t>::Ones(g.rows(), g.cols()), g, params);
    REQUIRE(m.ok());
    for (int r = 0; r < g.rows(); ++r)
      for (int c = 0; c < g.cols(); ++c) {
        const bool inner = m->distance(r, c) >= params.saturation;
        CHECK((m->raw_cost(r, c) == 0.0) == inner);
      }
  }
  SUBCASE("single blocked cell") {
    BevGrid big = small_grid(3.0, 1.5);
    Grid<std::uint8_t> trav = Grid<std::uint8_t>::Ones(big.rows(), big.cols());
    trav(30, 30) = 0;
    CostMapParams raw = params;
    raw.clearance_weight = 0;
    const auto m = build_costmap(trav, big, raw);
    REQUIRE(m.ok());
    CHECK(std::isinf(m->cost(30, 30)));
    CHECK(m->raw_cost(30, 31) == doctest::Approx(0.45));
    CHECK(m->raw_cost(30, 31) > m->raw_cost(30, 33));
    CHECK(m->raw_cost(30, 41) == 0.0);
    CHECK(m->cost(30, 31) > m->cost(30, 36));
  }
  SUBCASE("nothing traversable") {
    CHECK(build_costmap(Grid<std::uint8_t>::Zero(g.rows(), g.cols()), g, params).error() == Errc::EmptyTraversability);
  }
  SUBCASE("even box size rejected") {
    CostMapParams bad = params;
    bad.box_size = 4;
    CHECK_THROWS_AS(build_costmap(Grid<std::uint8_t>::Ones(g.rows(), g.cols()), g, bad), Error);
  }
  SUBCASE("robot disc is marked only when observed") {
    const std::vector<Eigen::Vector2d> far{{0.8, 0.0}};
    const auto m = build_costmap(far, g, params);
    REQUIRE(m.ok());
    CHECK(m->traversable(0, g.center_col()) == 0);
    const std::vector<Eigen::Vector2d> near{{0.1, 0.0}};
    const auto n = build_costmap(near, g, params);
    REQUIRE(n.ok());
    CHECK(n->traversable(0, g.center_col()) == 1);
    CHECK(n->traversable(4, g.center_col()) == 1);
  }
}

TEST_CASE("plan_path") {
  const BevGrid g = small_grid(2.0, 1.0);
  SUBCASE("open grid, goal ahead") {
    const auto m = build_costmap(Grid<std::uint8_t>::Ones(g.rows(), g.cols()), g);
    const auto plan = plan_path(*m, {1.5, 0.0});
    REQUIRE(plan.feasible);
    for (const auto& w : plan.waypoints) CHECK(w.y() == 0.0);
    CHECK(plan.waypoints.back().x() == doctest::Approx(1.5));
    CHECK(plan.cells.front() == g.robot_cell());
  }
  SUBCASE("obstacle in the way is avoided at minimum cost") {
    Grid<std::uint8_t> trav = Grid<std::uint8_t>::Ones(g.rows(), g.cols());
    trav.block(12, 14, 4, 13).setZero();
    const auto m = build_costmap(trav, g);
    const auto plan = plan_path(*m, {1.5, 0.0});
    REQUIRE(plan.feasible);
    for (const Cell& c : plan.cells) CHECK(trav(c.row, c.col) == 1);
    const auto oracle_cost = oracle::relax_plan_costs(*m);
    const Cell goal = plan.cells.back();
    CHECK(plan.path_cost == doctest::Approx(oracle_cost(goal.row, goal.col)).epsilon(1e-12));
  }
  SUBCASE("blocked island beyond the snap radius") {
    Grid<std::uint8_t> trav = Grid<std::uint8_t>::Ones(g.rows(), g.cols());
    trav.block(20, 0, 21, g.cols()).setZero();
    trav(35, 20) = 1;
    const auto m = build_costmap(trav, g);
    CHECK_FALSE(plan_path(*m, {1.75, 0.0}).feasible);
  }
  SUBCASE("goal just off free space snaps") {
    Grid<std::uint8_t> trav = Grid<std::uint8_t>::Ones(g.rows(), g.cols());
    trav.block(20, 0, 21, g.cols()).setZero();
    const auto m = build_costmap(trav, g);
    const auto plan = plan_path(*m, {1.2, 0.0});
    REQUIRE(plan.feasible);
    CHECK(plan.cells.back().row == 19);
  }
}

TEST_CASE("follow_path") {
  const FollowParams p;
  auto plan_to = [](double bearing) {
    LocalPlan plan;
    plan.feasible = true;
    plan.waypoints = {{0, 0}, {std::cos(bearing), std::sin(bearing)}};
    return plan;
  };
  SUBCASE("dead ahead") {
    const auto cmd = follow_path(plan_to(0.0), p);
    CHECK(cmd.yaw_rate == 0.0);
    CHECK(cmd.linear_v == p.v_fixed);
  }
  SUBCASE("proportional turn") {
    CHECK(follow_path(plan_to(0.4), p).yaw_rate == doctest::Approx(0.6));
  }
  SUBCASE("turn in place") {
    const auto cmd = follow_path(plan_to(2.0), p);
    CHECK(cmd.linear_v == 0.0);
    CHECK(cmd.yaw_rate == p.omega_max);
  }
  SUBCASE("infeasible plans are rejected") {
    CHECK_THROWS_AS(follow_path(LocalPlan{}, p), Error);
  }
}
