#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "tango/servocontrol.hpp"

using namespace tango;
using namespace tango::servo;

namespace {

std::vector<topo::Segment> segs_at(std::initializer_list<double> us) {
  std::vector<topo::Segment> out;
  for (double u : us) {
    topo::Segment s;
    s.local_id = int(out.size());
    s.centroid_px = {u, 240.0};
    s.area_px = 100;
    out.push_back(s);
  }
  return out;
}

loc::SubGoalMask mask_of(std::initializer_list<double> norm) {
  loc::SubGoalMask m;
  for (double l : norm) m.entries.push_back({int(m.entries.size()), -1, l, l});
  m.best = 0;
  return m;
}

}  // namespace

TEST_CASE("segment_servo") {
  const ServoParams p;  // tau 5, G 0.4, W 640
  CHECK(p.tau == 5.0);
  CHECK(p.gain == 0.4);

  SUBCASE("centered segment gives zero yaw") {
    CHECK(segment_servo(mask_of({0.0}), segs_at({320}), p).yaw_rate == 0.0);
  }
  SUBCASE("worked example") {
    const auto cmd = segment_servo(mask_of({0.0}), segs_at({480}), p);
    CHECK(cmd.yaw_rate == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(cmd.linear_v > 0);
  }
  SUBCASE("yaw is clamped") {
    ServoParams q = p;
    q.gain = 100;
    CHECK(segment_servo(mask_of({0.0}), segs_at({639}), q).yaw_rate == q.omega_max);
    CHECK(segment_servo(mask_of({0.0}), segs_at({0}), q).yaw_rate == -q.omega_max);
  }
  SUBCASE("empty mask is an error") {
    CHECK_THROWS_AS(segment_servo(loc::SubGoalMask{}, segs_at({}), p), Error);
  }
  SUBCASE("bad parameters") {
    ServoParams q = p;
    q.gain = 0;
    CHECK_THROWS_AS(q.validate(), Error);
  }
}

TEST_CASE("softmax weights") {
  SUBCASE("two segments, tau 5") {
    const std::vector<double> l{0.0, 1.0};
    const auto w = softmax_weights(l, 5.0);
    CHECK(w[0] == doctest::Approx(1.0 / (1.0 + std::exp(5.0))));
    CHECK(w[1] == doctest::Approx(std::exp(5.0) / (1.0 + std::exp(5.0))));
    CHECK(w[0] == doctest::Approx(0.0067).epsilon(0.01));
    CHECK(w[1] == doctest::Approx(0.9933).epsilon(0.001));
  }
  SUBCASE("matches the plain formula and sums to one") {
    const std::vector<double> l{0.0, 0.25, 0.5, 1.0, 1.0};
    const auto w = softmax_weights(l, 5.0);
    const auto o = oracle::naive_softmax(l, 5.0);
    double sum = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      CHECK(w[i] == doctest::Approx(o[i]).epsilon(1e-12));
      sum += w[i];
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);
  }
  SUBCASE("large temperatures stay finite") {
    const std::vector<double> l{0.0, 1.0};
    const auto w = softmax_weights(l, 5000.0);
    CHECK(w[1] == 1.0);
    CHECK(w[0] == 0.0);
  }
}

TEST_CASE("choose_controller") {
  CHECK(choose_controller(true, true, true, true) == ControllerChoice{ControllerMode::Metric, SwitchReason::Ok});
  CHECK(choose_controller(false, true, true, true) ==
        ControllerChoice{ControllerMode::Fallback, SwitchReason::EmptyTraversability});
  CHECK(choose_controller(true, true, false, true) ==
        ControllerChoice{ControllerMode::Fallback, SwitchReason::PlanInfeasible});
  CHECK(choose_controller(true, false, false, true) ==
        ControllerChoice{ControllerMode::Fallback, SwitchReason::SubgoalProjectionFailed});
  CHECK(choose_controller(true, true, true, false) ==
        ControllerChoice{ControllerMode::Fallback, SwitchReason::LocalizationDegraded});
  CHECK(std::string(to_string(SwitchReason::PlanInfeasible)) == "plan_infeasible");
}
