#pragma once

// Benchmark configuration: one JSON document; every field has a default and
// missing fields keep it.

#include <cstdint>
#include <string>

#include "tango/metricplanner.hpp"
#include "tango/servocontrol.hpp"
#include "tango/simworld.hpp"

namespace tango::bench {

struct CameraConfig {
  int width = 640;
  int height = 480;
  double hfov_deg = 90.0;
  double cam_height = 1.0;
  sim::CameraModel model() const;
};

struct NoiseConfig {
  double p_drop = 0.2;
  double p_swap = 0.1;
};

struct SuiteConfig {
  std::uint64_t seed = 2024;
  int worlds = 12;
  int goals_per_world = 3;
  bool easy = true;
  bool hard = true;
  bool full = true;
  int budget = 500;
  int ablation_budget = 250;
  double dt = 0.2;
  double success_radius = 1.0;
  double teach_spacing = 0.3;
  int teach_min_goal_px = 100;
  double alt_goal_tail = 0.3;
  /// Furniture added on the teach path after mapping (obstacle-augmented set).
  int augment_size_cells = 2;
  double augment_height = 0.8;
  /// World generation overrides for the corridor-heavy ablation set.
  double corridor_prob = 0.7;
  int corridor_width_cells = 5;
};

struct Config {
  CameraConfig camera;
  sim::WorldGenParams world;
  int min_segment_area = 50;
  int map_window = 1;
  int localization_radius = 3;
  metric::BevGrid bev;
  metric::CostMapParams costmap;
  double snap_radius = 0.5;
  metric::FollowParams follow;
  servo::ServoParams servo;
  double omega_search = 0.5;
  NoiseConfig noise;
  SuiteConfig suite;
};

Config load_config(const std::string& path);
Config parse_config(const std::string& json_text);
std::string dump_config(const Config& config);

}  // namespace tango::bench
