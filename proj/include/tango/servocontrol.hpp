#pragma once

// Topological segment-servoing fallback and the metric/fallback arbiter.

#include <cstdint>
#include <span>
#include <vector>

#include "tango/localizer.hpp"
#include "tango/simworld.hpp"
#include "tango/topograph.hpp"

namespace tango::servo {

struct ServoParams {
  /// Softmax temperature over normalized path lengths. Applied as printed,
  /// e^{tau * l}; a negative value favours low-cost segments instead.
  double tau = 5.0;
  double gain = 0.4;
  int image_width = 640;
  double v_fixed = 0.25;
  double omega_max = 1.0;
  /// Forward speed while servoing, as a fraction of v_fixed.
  double speed_fraction = 0.5;

  void validate() const;
};

/// Softmax of tau * l with max subtraction.
std::vector<double> softmax_weights(std::span<const double> norm_costs, double tau);

/// yaw = (G / W) * sum_i w_i (u_i - W/2), clamped to +-omega_max.
sim::ControlCommand segment_servo(const loc::SubGoalMask& mask, std::span<const topo::Segment> query,
                                  const ServoParams& params);

enum class ControllerMode : std::uint8_t { Metric, Fallback };

enum class SwitchReason : std::uint8_t { Ok, EmptyTraversability, SubgoalProjectionFailed, PlanInfeasible, LocalizationDegraded };

const char* to_string(ControllerMode m);
const char* to_string(SwitchReason r);

struct ControllerChoice {
  ControllerMode mode = ControllerMode::Metric;
  SwitchReason reason = SwitchReason::Ok;
  friend bool operator==(const ControllerChoice&, const ControllerChoice&) = default;
};

/// Metric iff every input is healthy; otherwise Fallback with the first
/// failing reason in argument order.
ControllerChoice choose_controller(bool traversability_ok, bool subgoal_ok, bool plan_feasible, bool localization_ok);

}  // namespace tango::servo
