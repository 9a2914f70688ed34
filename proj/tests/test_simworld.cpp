#include <doctest.h>

#include <cmath>
#include <set>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "tango/random.hpp"
#include "tango/simworld.hpp"

using namespace tango;
using namespace tango::sim;

namespace {

WorldGenParams small_params() {
  WorldGenParams p;
  p.rows = 32;
  p.cols = 40;
  p.room_count = 4;
  p.obstacle_count = 5;
  return p;
}

// Wall face at x = 7.5 m across the whole room.
World wall_ahead_world() {
  World w = test::room_world(20, 40);
  for (int r = 1; r < 19; ++r) test::set_wall(w, r, 30);
  test::add_panels(w);
  return w;
}

}  // namespace

TEST_CASE("generate_world is deterministic per seed") {
  const auto p = small_params();
  CHECK(generate_world(7, p) == generate_world(7, p));
}

TEST_CASE("no obstacles leaves only walls as solid cells") {
  auto p = small_params();
  p.obstacle_count = 0;
  const World w = generate_world(7, p);
  CHECK((w.occupancy != CellKind::Obstacle).all());
}

TEST_CASE("different seeds give different connected layouts") {
  const auto p = small_params();
  const World a = generate_world(7, p);
  const World b = generate_world(8, p);
  CHECK_FALSE(a == b);
  for (const World* w : {&a, &b}) {
    CHECK(count_components(navigable_cells(*w)) == 1);
    for (const auto& inst : w->instances) CHECK(inst.instance_id == InstanceId(&inst - w->instances.data()) + 1);
  }
}

TEST_CASE("overcrowded parameters fail loudly") {
  auto p = small_params();
  p.obstacle_count = 400;
  p.max_retries = 3;
  CHECK_THROWS_AS(generate_world(1, p), Error);
}

TEST_CASE("render: wall ahead has planar depth in every column it spans") {
  const World w = wall_ahead_world();
  const auto cam = CameraModel::make(640, 480, std::numbers::pi / 2, 1.0);
  const Observation obs = render(w, cam, {5.5, 2.5, 0.0});
  CHECK(std::abs(obs.depth_image(240, 320) - 2.0) <= w.cell_size);
  // z-depth, not ray length: the edge columns sit at 45 degrees
  for (int u : {0, 100, 320, 500, 639}) CHECK(std::abs(obs.depth_image(240, u) - 2.0) <= w.cell_size);
}

TEST_CASE("render: floor row depth follows the flat-ground relation") {
  const World w = wall_ahead_world();
  const auto cam = CameraModel::make(640, 480, std::numbers::pi / 2, 1.0);
  const Observation obs = render(w, cam, {3.5, 2.5, 0.0});
  const int v = int(std::lround(cam.cy + cam.fy * cam.cam_height / 3.0));
  CHECK(w.class_of(obs.instance_image(v, 320)) == SemanticClass::Floor);
  CHECK(std::abs(obs.depth_image(v, 320) - 3.0) <= w.cell_size);
}

TEST_CASE("render rejects poses inside solid cells") {
  const World w = wall_ahead_world();
  const auto cam = CameraModel::make(64, 48, std::numbers::pi / 2, 1.0);
  CHECK_THROWS_AS(render(w, cam, {0.1, 0.1, 0.0}), Error);
}

TEST_CASE("step_agent kinematics") {
  const World w = test::room_world(20, 20);
  const Pose2D p{2.5, 2.5, 0.0};
  SUBCASE("zero command holds") {
    const auto out = step_agent(w, p, {0, 0}, 0.1);
    CHECK(out.pose.x == p.x);
    CHECK(out.pose.y == p.y);
    CHECK(out.pose.theta == p.theta);
    CHECK_FALSE(out.collided);
  }
  SUBCASE("straight advance is exact") {
    const auto out = step_agent(w, p, {1, 0}, 0.1);
    CHECK(out.pose.x == doctest::Approx(2.6).epsilon(1e-12));
    CHECK(out.pose.y == p.y);
    CHECK_FALSE(out.collided);
  }
  SUBCASE("positive yaw turns toward +y") {
    const auto out = step_agent(w, p, {0, 1}, 0.5);
    CHECK(out.pose.theta == doctest::Approx(0.5));
  }
  SUBCASE("blocked move holds position") {
    // east wall starts at x = 19 * 0.25; disc edge 0.05 m from it
    const Pose2D near{19 * 0.25 - 0.25, 2.5, 0.0};
    const auto out = step_agent(w, near, {1, 0}, 0.1);
    CHECK(out.collided);
    CHECK(out.pose.x == near.x);
    CHECK(out.pose.y == near.y);
  }
  SUBCASE("slide keeps the free component") {
    const Pose2D near{19 * 0.25 - 0.25, 2.5, std::numbers::pi / 4};
    const auto out = step_agent(w, near, {1, 0}, 0.1, 0.2, true);
    CHECK(out.collided);
    CHECK(out.pose.y > near.y);
    CHECK_FALSE(disc_collides(w, out.pose.x, out.pose.y, 0.2));
  }
}

TEST_CASE("geodesic distance") {
  World w = test::room_world(40, 40);
  const Pose2D a{1.125, 1.125, 0};
  CHECK(*geodesic_distance(w, a, a) == 0.0);
  const Pose2D b{a.x + 3.0, a.y + 4.0, 0};
  const double d = *geodesic_distance(w, a, b);
  CHECK(d >= 5.0 - 1e-9);
  CHECK(d <= 5.0 * 1.08);

  SUBCASE("two rooms through one door") {
    for (int r = 1; r < 39; ++r)
      if (r < 30 || r > 34) test::set_wall(w, r, 20);
    const Pose2D l{3.0, 3.0, 0}, rr{7.0, 3.0, 0};
    CHECK(*geodesic_distance(w, l, rr) > 4.0 + 1.0);
  }
  SUBCASE("sealed room is unreachable") {
    for (int r = 1; r < 39; ++r) test::set_wall(w, r, 20);
    CHECK(geodesic_distance(w, {3, 3, 0}, {7, 3, 0}).error() == Errc::Unreachable);
  }
}

TEST_CASE("geodesic field matches relaxation oracle") {
  Rng rng(5);
  for (int t = 0; t < 5; ++t) {
    World w = test::room_world(16, 16);
    for (int k = 0; k < 30; ++k) test::set_wall(w, rng.uniform_int(1, 14), rng.uniform_int(1, 14));
    Cell src{rng.uniform_int(1, 14), rng.uniform_int(1, 14)};
    w.occupancy(src.row, src.col) = CellKind::Free;
    const Cell s[1] = {src};
    const auto fast = geodesic_field(w, s);
    const auto slow = oracle::relax_geodesic(w, {src});
    for (int r = 0; r < 16; ++r)
      for (int c = 0; c < 16; ++c) {
        if (std::isinf(slow(r, c))) CHECK(std::isinf(fast(r, c)));
        else CHECK(fast(r, c) == doctest::Approx(slow(r, c)).epsilon(1e-12));
      }
  }
}

TEST_CASE("shortest_pose_path") {
  World w = test::room_world(5, 30);
  SUBCASE("straight corridor") {
    const Pose2D a{1.0, 0.625, 0}, b{6.0, 0.625, 0};
    const auto path = *shortest_pose_path(w, a, b, 0.5);
    REQUIRE(path.size() == 11);
    for (const auto& p : path) CHECK(p.theta == doctest::Approx(0.0));
    CHECK(path.back().x == doctest::Approx(6.0));
  }
  SUBCASE("a equals b") {
    const Pose2D a{1.0, 0.625, 0.3};
    CHECK(shortest_pose_path(w, a, a, 0.5)->size() == 1);
  }
  SUBCASE("L shape turns once") {
    World l = test::room_world(30, 30);
    for (int r = 5; r < 29; ++r)
      for (int c = 5; c < 29; ++c) test::set_wall(l, r, c);
    const Pose2D a{6.0, 0.625, 0}, b{0.625, 6.0, 0};
    const auto path = *shortest_pose_path(l, a, b, 0.3);
    std::set<long> headings;
    int changes = 0;
    for (std::size_t i = 0; i < path.size(); ++i) {
      headings.insert(std::lround(path[i].theta * 1e6));
      if (i && std::abs(path[i].theta - path[i - 1].theta) > 1e-9) ++changes;
      CHECK(l.is_free(l.cell_at(path[i].x, path[i].y)));
    }
    CHECK(changes <= 2);
    CHECK(headings.size() <= 3);
  }
}

TEST_CASE("try_add_obstacle refuses to split free space") {
  World w = test::room_world(10, 20);
  for (int r = 1; r < 9; ++r)
    if (r < 4 || r > 6) test::set_wall(w, r, 10);
  CHECK_FALSE(try_add_obstacle(w, {4, 10}, 3, 1, 1.0).has_value());
  CHECK(w.is_free({5, 10}));
  const auto id = try_add_obstacle(w, {2, 3}, 2, 2, 1.0);
  REQUIRE(id.has_value());
  CHECK(w.class_of(*id) == SemanticClass::Furniture);
  CHECK(w.occupancy(3, 4) == CellKind::Obstacle);
}
