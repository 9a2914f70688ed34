#include "tango/config.hpp"

#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

namespace tango::bench {

using nlohmann::json;

sim::CameraModel CameraConfig::model() const {
  return sim::CameraModel::make(width, height, hfov_deg * std::numbers::pi / 180.0, cam_height);
}

namespace {

// Reads `key` into `out` when present; the visitor is shared by load and dump.
struct Reader {
  const json& j;
  template <class T>
  void operator()(const char* key, T& out) const {
    if (j.contains(key)) out = j.at(key).get<T>();
  }
  Reader at(const char* key) const {
    static const json empty = json::object();
    return Reader{j.contains(key) ? j.at(key) : empty};
  }
};

struct Writer {
  json& j;
  template <class T>
  void operator()(const char* key, T& out) const {
    j[key] = out;
  }
  Writer at(const char* key) const {
    j[key] = json::object();
    return Writer{j[key]};
  }
};

template <class V>
void visit(Config& c, const V& v) {
  {
    const auto s = v.at("camera");
    s("width", c.camera.width);
    s("height", c.camera.height);
    s("hfov_deg", c.camera.hfov_deg);
    s("cam_height", c.camera.cam_height);
  }
  {
    const auto s = v.at("world");
    auto& w = c.world;
    s("rows", w.rows);
    s("cols", w.cols);
    s("cell_size", w.cell_size);
    s("wall_height", w.wall_height);
    s("room_count", w.room_count);
    s("min_room_cells", w.min_room_cells);
    s("door_width_cells", w.door_width_cells);
    s("corridor_prob", w.corridor_prob);
    s("corridor_width_cells", w.corridor_width_cells);
    s("extra_doors", w.extra_doors);
    s("obstacle_count", w.obstacle_count);
    s("rug_count", w.rug_count);
    s("panel_max_cells", w.panel_max_cells);
    s("agent_radius", w.agent_radius);
    s("slide_on_collision", w.slide_on_collision);
    s("max_retries", w.max_retries);
  }
  {
    const auto s = v.at("topology");
    s("min_segment_area", c.min_segment_area);
    s("map_window", c.map_window);
    s("localization_radius", c.localization_radius);
  }
  {
    const auto s = v.at("bev");
    s("resolution", c.bev.resolution);
    s("forward_extent", c.bev.forward_extent);
    s("lateral_extent", c.bev.lateral_extent);
    s("saturation", c.costmap.saturation);
    s("box_size", c.costmap.box_size);
    s("robot_radius", c.costmap.robot_radius);
    s("clearance", c.costmap.clearance);
    s("clearance_weight", c.costmap.clearance_weight);
    s("snap_radius", c.snap_radius);
  }
  {
    const auto s = v.at("follow");
    s("v_fixed", c.follow.v_fixed);
    s("k_p", c.follow.k_p);
    s("lookahead", c.follow.lookahead);
    s("omega_max", c.follow.omega_max);
    s("turn_in_place", c.follow.turn_in_place);
  }
  {
    const auto s = v.at("servo");
    s("tau", c.servo.tau);
    s("gain", c.servo.gain);
    s("speed_fraction", c.servo.speed_fraction);
    s("omega_search", c.omega_search);
  }
  {
    const auto s = v.at("noise");
    s("p_drop", c.noise.p_drop);
    s("p_swap", c.noise.p_swap);
  }
  {
    const auto s = v.at("bench");
    auto& b = c.suite;
    s("seed", b.seed);
    s("worlds", b.worlds);
    s("goals_per_world", b.goals_per_world);
    s("easy", b.easy);
    s("hard", b.hard);
    s("full", b.full);
    s("budget", b.budget);
    s("ablation_budget", b.ablation_budget);
    s("dt", b.dt);
    s("success_radius", b.success_radius);
    s("teach_spacing", b.teach_spacing);
    s("teach_min_goal_px", b.teach_min_goal_px);
    s("alt_goal_tail", b.alt_goal_tail);
    s("augment_size_cells", b.augment_size_cells);
    s("augment_height", b.augment_height);
    s("corridor_prob", b.corridor_prob);
    s("corridor_width_cells", b.corridor_width_cells);
  }
}

void finalize(Config& c) {
  c.servo.image_width = c.camera.width;
  c.servo.v_fixed = c.follow.v_fixed;
  c.servo.omega_max = c.follow.omega_max;
  c.servo.validate();
  (void)c.camera.model();
  if (c.suite.worlds < 1 || c.suite.goals_per_world < 1)
    throw Error(Errc::InvalidArgument, "config: bench.worlds and bench.goals_per_world must be >= 1");
  if (!(c.suite.dt > 0)) throw Error(Errc::InvalidArgument, "config: bench.dt must be positive");
}

}  // namespace

Config parse_config(const std::string& json_text) {
  Config c;
  try {
    const json j = json::parse(json_text);
    visit(c, Reader{j});
  } catch (const json::exception& e) {
    throw Error(Errc::Parse, std::string("config: ") + e.what());
  }
  finalize(c);
  return c;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const Config& config) {
  Config c = config;
  json j = json::object();
  visit(c, Writer{j});
  return j.dump(2) + "\n";
}

}  // namespace tango::bench
