#include "tango/servocontrol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tango::servo {

void ServoParams::validate() const {
  if (!std::isfinite(tau) || !(gain > 0) || image_width <= 0)
    throw Error(Errc::InvalidArgument, "servo parameters: tau finite, gain > 0, image_width > 0 required");
}

std::vector<double> softmax_weights(std::span<const double> norm_costs, double tau) {
  std::vector<double> w(norm_costs.size());
  if (w.empty()) return w;
  double peak = -std::numeric_limits<double>::infinity();
  for (double l : norm_costs) peak = std::max(peak, tau * l);
  double sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) sum += (w[i] = std::exp(tau * norm_costs[i] - peak));
  for (double& x : w) x /= sum;
  return w;
}

sim::ControlCommand segment_servo(const loc::SubGoalMask& mask, std::span<const topo::Segment> query,
                                  const ServoParams& params) {
  params.validate();
  if (mask.empty()) throw Error(Errc::NoViableSubgoal, "segment_servo: empty sub-goal mask");
  std::vector<double> l;
  for (const loc::SubGoalEntry& e : mask.entries) l.push_back(e.norm_cost);
  const std::vector<double> w = softmax_weights(l, params.tau);
  const double center = params.image_width / 2.0;
  double offset = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i)
    offset += w[i] * (query[std::size_t(mask.entries[i].query)].centroid_px.x() - center);
  const double yaw = params.gain / params.image_width * offset;
  return {params.v_fixed * params.speed_fraction, std::clamp(yaw, -params.omega_max, params.omega_max)};
}

const char* to_string(ControllerMode m) { return m == ControllerMode::Metric ? "metric" : "fallback"; }

const char* to_string(SwitchReason r) {
  switch (r) {
    case SwitchReason::Ok: return "ok";
    case SwitchReason::EmptyTraversability: return "empty_traversability";
    case SwitchReason::SubgoalProjectionFailed: return "subgoal_projection_failed";
    case SwitchReason::PlanInfeasible: return "plan_infeasible";
    case SwitchReason::LocalizationDegraded: return "localization_degraded";
  }
  return "unknown";
}

ControllerChoice choose_controller(bool traversability_ok, bool subgoal_ok, bool plan_feasible, bool localization_ok) {
  if (!traversability_ok) return {ControllerMode::Fallback, SwitchReason::EmptyTraversability};
  if (!subgoal_ok) return {ControllerMode::Fallback, SwitchReason::SubgoalProjectionFailed};
  if (!plan_feasible) return {ControllerMode::Fallback, SwitchReason::PlanInfeasible};
  if (!localization_ok) return {ControllerMode::Fallback, SwitchReason::LocalizationDegraded};
  return {};
}

}  // namespace tango::servo
