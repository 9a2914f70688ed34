#include "tango/bench.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>

#include <json.hpp>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "tango/io.hpp"
#include "tango/random.hpp"

namespace tango::bench {

namespace {

constexpr int kQueryFrameBase = 1'000'000;
constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

const char* to_string(Category c) {
  switch (c) {
    case Category::Easy: return "easy";
    case Category::Hard: return "hard";
    case Category::Full: return "full";
  }
  return "?";
}

const char* to_string(Regime r) {
  switch (r) {
    case Regime::GtMetric: return "gt_metric";
    case Regime::GtTopological: return "gt_topological";
    case Regime::Noisy: return "noisy";
  }
  return "?";
}

const char* to_string(ControllerKind c) { return c == ControllerKind::Tango ? "tango" : "fallback_only"; }

Category parse_category(const std::string& s) {
  if (s == "easy") return Category::Easy;
  if (s == "hard") return Category::Hard;
  if (s == "full") return Category::Full;
  throw Error(Errc::Parse, "unknown category " + s);
}

Regime parse_regime(const std::string& s) {
  if (s == "gt_metric") return Regime::GtMetric;
  if (s == "gt_topological") return Regime::GtTopological;
  if (s == "noisy") return Regime::Noisy;
  throw Error(Errc::Parse, "unknown regime " + s);
}

ControllerKind parse_controller(const std::string& s) {
  if (s == "tango") return ControllerKind::Tango;
  if (s == "fallback_only") return ControllerKind::FallbackOnly;
  throw Error(Errc::Parse, "unknown controller " + s);
}

std::pair<double, double> category_band(Category c) {
  switch (c) {
    case Category::Easy: return {1.0, 3.0};
    case Category::Hard: return {3.0, 5.0};
    case Category::Full: return {8.0, 10.0};
  }
  return {0, 0};
}

RegimeConfig RegimeConfig::make(Regime regime, const NoiseConfig& noise, std::uint64_t seed) {
  RegimeConfig r;
  r.regime = regime;
  switch (regime) {
    case Regime::GtMetric:
      r.association = topo::AssociationModel::ground_truth();
      r.cost_source = CostSource::MetricGeodesic;
      break;
    case Regime::GtTopological:
      r.association = topo::AssociationModel::ground_truth();
      r.cost_source = CostSource::TopologicalGraph;
      break;
    case Regime::Noisy:
      r.association = topo::AssociationModel::noisy(noise.p_drop, noise.p_swap, seed);
      r.cost_source = CostSource::TopologicalGraph;
      break;
  }
  return r;
}

bool is_object_class(sim::SemanticClass c) {
  return c != sim::SemanticClass::Floor && c != sim::SemanticClass::Ceiling;
}

namespace {

bool is_goal_class(sim::SemanticClass c) {
  return c == sim::SemanticClass::Furniture || c == sim::SemanticClass::Fixture;
}

bool is_traversable_class(sim::SemanticClass c) {
  return c == sim::SemanticClass::Floor || c == sim::SemanticClass::Rug;
}

std::vector<topo::Segment> object_segments(const sim::World& world, std::vector<topo::Segment> segs) {
  std::erase_if(segs, [&](const topo::Segment& s) { return !is_object_class(world.class_of(s.instance_id)); });
  return segs;
}

}  // namespace

std::vector<double> metric_goal_costs(const sim::World& world, InstanceId goal) {
  const auto& goal_fp = world.instance(goal).footprint;
  const Grid<double> field = sim::geodesic_field(world, goal_fp);
  const double cs = world.cell_size;
  std::vector<double> costs(world.instances.size() + 1, kInf);
  for (const sim::ObjectInstance& inst : world.instances) {
    double best = kInf;
    for (const Cell& c : inst.footprint) {
      if (world.is_free(c)) {
        best = std::min(best, field(c.row, c.col));
        continue;
      }
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          const Cell n{c.row + dr, c.col + dc};
          if ((dr == 0 && dc == 0) || !world.is_free(n)) continue;
          best = std::min(best, field(n.row, n.col) + ((dr != 0 && dc != 0) ? std::numbers::sqrt2 : 1.0) * cs);
        }
    }
    costs[std::size_t(inst.instance_id)] = best;
  }
  costs[std::size_t(goal)] = 0.0;
  return costs;
}

sim::World make_world(std::uint64_t seed, const sim::WorldGenParams& params) {
  std::uint64_t s = seed;
  for (int attempt = 0; attempt < 32; ++attempt) {
    try {
      return sim::generate_world(s, params);
    } catch (const Error& e) {
      if (e.code() != Errc::GenerationFailed) throw;
      s = mix_seed(seed, std::uint64_t(attempt) + 1);
    }
  }
  throw Error(Errc::GenerationFailed, "world generation failed repeatedly for seed " + std::to_string(seed));
}

namespace {

std::vector<Category> categories(const SuiteConfig& s) {
  std::vector<Category> out;
  if (s.easy) out.push_back(Category::Easy);
  if (s.hard) out.push_back(Category::Hard);
  if (s.full) out.push_back(Category::Full);
  return out;
}

int goal_pixels(const sim::Observation& obs, InstanceId id) { return int((obs.instance_image == id).count()); }

Eigen::Vector2d footprint_centroid(const sim::World& world, InstanceId id) {
  Eigen::Vector2d c = Eigen::Vector2d::Zero();
  const auto& fp = world.instance(id).footprint;
  for (const Cell& cell : fp) c += world.cell_center(cell);
  return c / double(fp.size());
}

// Teach traverse from `start` toward the goal: stop at the first pose within
// the success radius that sees the goal, else finish facing the goal.
std::vector<sim::Pose2D> teach_traverse(const sim::World& world, const sim::Pose2D& start, Cell approach,
                                        InstanceId goal, const Config& cfg) {
  const Eigen::Vector2d ap = world.cell_center(approach);
  auto path = sim::shortest_pose_path(world, start, {ap.x(), ap.y(), 0.0}, cfg.suite.teach_spacing);
  if (!path) throw Error(Errc::Unreachable, "teach path unreachable");
  std::vector<sim::Pose2D> poses = std::move(path).value();
  const sim::CameraModel cam = cfg.camera.model();
  for (std::size_t i = 0; i < poses.size(); ++i) {
    if (sim::distance_to_instance(world, poses[i].position(), goal) > cfg.suite.success_radius) continue;
    if (goal_pixels(sim::render(world, cam, poses[i]), goal) >= cfg.suite.teach_min_goal_px) {
      poses.resize(i + 1);
      return poses;
    }
  }
  const Eigen::Vector2d to_goal = footprint_centroid(world, goal) - ap;
  poses.push_back({ap.x(), ap.y(), std::atan2(to_goal.y(), to_goal.x())});
  return poses;
}

}  // namespace

std::vector<Episode> make_episodes(const Config& cfg) {
  const auto cats = categories(cfg.suite);
  std::vector<Episode> out;
  for (int w = 0; w < cfg.suite.worlds; ++w) {
    const sim::World world = make_world(mix_seed(cfg.suite.seed, std::uint64_t(w)), cfg.world);
    const Grid<std::uint8_t> nav = sim::navigable_cells(world);
    Rng rng(mix_seed(world.seed, 0xE915));

    std::vector<InstanceId> goals;
    for (const auto& inst : world.instances)
      if (is_goal_class(inst.semantic_class)) goals.push_back(inst.instance_id);
    for (std::size_t i = goals.size(); i > 1; --i)
      std::swap(goals[i - 1], goals[std::size_t(rng.uniform_int(0, int(i) - 1))]);

    int accepted = 0;
    for (InstanceId goal : goals) {
      if (accepted >= cfg.suite.goals_per_world) break;
      const Grid<double> field = sim::geodesic_field(world, world.instance(goal).footprint);
      std::optional<Cell> approach;
      for (int r = 0; r < world.rows(); ++r)
        for (int c = 0; c < world.cols(); ++c)
          if (nav(r, c) && std::isfinite(field(r, c)) && (!approach || field(r, c) < field(approach->row, approach->col)))
            approach = Cell{r, c};
      if (!approach || sim::distance_to_instance(world, world.cell_center(*approach), goal) > cfg.suite.success_radius)
        continue;

      std::vector<std::vector<Cell>> candidates;
      for (Category cat : cats) {
        const auto [lo, hi] = category_band(cat);
        std::vector<Cell> cells;
        for (int r = 0; r < world.rows(); ++r)
          for (int c = 0; c < world.cols(); ++c) {
            if (!nav(r, c) || field(r, c) < lo || field(r, c) > hi) continue;
            if (sim::distance_to_instance(world, world.cell_center({r, c}), goal) <= cfg.suite.success_radius) continue;
            cells.push_back({r, c});
          }
        candidates.push_back(std::move(cells));
      }
      if (std::any_of(candidates.begin(), candidates.end(), [](const auto& v) { return v.empty(); })) {
        std::clog << "warning: world " << w << " goal " << goal << " cannot satisfy every category band; skipped\n";
        continue;
      }
      for (std::size_t k = 0; k < cats.size(); ++k) {
        const auto& cells = candidates[k];
        const Cell sc = cells[std::size_t(rng.uniform_int(0, int(cells.size()) - 1))];
        const Eigen::Vector2d sp = world.cell_center(sc);
        Episode ep;
        ep.index = int(out.size());
        ep.world_index = w;
        ep.world_seed = world.seed;
        ep.goal_instance = goal;
        ep.category = cats[k];
        ep.start_geodesic = field(sc.row, sc.col);
        ep.teach_path = teach_traverse(world, {sp.x(), sp.y(), 0.0}, *approach, goal, cfg);
        ep.start = ep.teach_path.front();
        out.push_back(std::move(ep));
      }
      ++accepted;
    }
    if (accepted < cfg.suite.goals_per_world)
      std::clog << "warning: world " << w << " yielded " << accepted << " of " << cfg.suite.goals_per_world
                << " goals\n";
  }
  return out;
}

std::map<int, sim::World> episode_worlds(const Config& cfg, const std::vector<Episode>& episodes) {
  std::map<int, sim::World> out;
  for (const Episode& ep : episodes)
    if (!out.contains(ep.world_index))
      out.emplace(ep.world_index, make_world(mix_seed(cfg.suite.seed, std::uint64_t(ep.world_index)), cfg.world));
  return out;
}

TeachRun render_teach(const sim::World& world, const Episode& episode, const Config& cfg) {
  const sim::CameraModel cam = cfg.camera.model();
  TeachRun run;
  for (std::size_t t = 0; t < episode.teach_path.size(); ++t) {
    run.frames.push_back(sim::render(world, cam, episode.teach_path[t]));
    run.segments.push_back(
        object_segments(world, topo::extract_segments(run.frames.back(), int(t), {cfg.min_segment_area})));
  }
  return run;
}

TeachMap build_teach_map(const TeachRun& teach, InstanceId goal, const RegimeConfig& regime, const Config& cfg) {
  TeachMap m;
  m.graph = topo::build_map_from_segments(teach.segments, regime.association, cfg.map_window);
  for (int t = int(teach.segments.size()) - 1; t >= 0 && m.goal_node < 0; --t)
    for (int n : m.graph.frame_nodes(t)) {
      const topo::Segment& s = m.graph.nodes[std::size_t(n)];
      if (s.instance_id == goal && (m.goal_node < 0 || s.area_px > m.graph.nodes[std::size_t(m.goal_node)].area_px))
        m.goal_node = n;
    }
  if (m.goal_node < 0) throw Error(Errc::InvalidArgument, "goal instance never segmented in the teach run");
  m.graph.goal_node = m.goal_node;
  m.costs = topo::compute_goal_costs(m.graph, m.goal_node);
  return m;
}

Result<InstanceId> select_alt_goal(const sim::World& world, const Episode& episode, const TeachRun& teach,
                                   const Config& cfg) {
  const int n = int(teach.frames.size());
  if (n == 0) return Errc::AltGoalUnavailable;
  const int tail = std::max(1, int(std::ceil(cfg.suite.alt_goal_tail * n)));
  const std::vector<double> geo = metric_goal_costs(world, episode.goal_instance);

  double best_score = -kInf;
  InstanceId best = sim::kNoInstance;
  for (int t = n - tail; t < n; ++t) {
    const sim::Observation& obs = teach.frames[std::size_t(t)];
    std::map<InstanceId, std::pair<double, int>> depth_sum;
    for (int v = 0; v < obs.height(); ++v)
      for (int u = 0; u < obs.width(); ++u) {
        const InstanceId id = obs.instance_image(v, u);
        if (id == sim::kNoInstance || id == episode.goal_instance) continue;
        const auto cls = world.class_of(id);
        if (cls == sim::SemanticClass::Wall || cls == sim::SemanticClass::Ceiling || cls == sim::SemanticClass::Floor)
          continue;
        auto& acc = depth_sum[id];
        acc.first += obs.depth_image(v, u);
        acc.second += 1;
      }
    for (const auto& [id, acc] : depth_sum) {
      if (acc.second < cfg.suite.teach_min_goal_px || !std::isfinite(geo[std::size_t(id)])) continue;
      const double score = acc.first / acc.second + geo[std::size_t(id)];
      if (score > best_score || (score == best_score && id < best)) best_score = score, best = id;
    }
  }
  if (best == sim::kNoInstance) return Errc::AltGoalUnavailable;
  return best;
}

EpisodeResult run_episode(const sim::World& world, const Episode& episode, const TeachMap& map,
                          const RegimeConfig& regime, const RunOptions& opt, const Config& cfg) {
  const sim::CameraModel cam = cfg.camera.model();
  const InstanceId goal = map.graph.nodes[std::size_t(map.goal_node)].instance_id;
  std::vector<double> metric_costs;
  if (regime.cost_source == CostSource::MetricGeodesic) metric_costs = metric_goal_costs(world, goal);
  const auto semantic = [&](const topo::Segment& s) { return is_traversable_class(world.class_of(s.instance_id)); };

  EpisodeResult res;
  loc::LocalizationState state{0, cfg.localization_radius};
  sim::Pose2D pose = episode.start;
  res.final_distance = sim::distance_to_instance(world, pose.position(), goal);
  std::optional<servo::ControllerMode> prev_mode;

  for (int step = 0; step < opt.budget; ++step) {
    const sim::Observation obs = sim::render(world, cam, pose);
    const auto all = topo::extract_segments(obs, kQueryFrameBase + step, {cfg.min_segment_area});
    const auto objects = object_segments(world, all);

    StepRecord rec;
    rec.step = step;
    Result<loc::SubGoalMask> mask = Errc::NoViableSubgoal;
    if (regime.cost_source == CostSource::MetricGeodesic) {
      std::vector<loc::SubGoalEntry> entries;
      for (std::size_t i = 0; i < objects.size(); ++i) {
        const double c = metric_costs[std::size_t(objects[i].instance_id)];
        if (std::isfinite(c)) entries.push_back({int(i), -1, c, 0.0});
      }
      mask = loc::make_subgoal_mask(std::move(entries), objects);
      rec.localized = mask.ok();
    } else if (!objects.empty()) {
      auto located = loc::localize(objects, map.graph, state, regime.association);
      if (!located) {
        loc::LocalizationState wide = state;
        wide.window_radius *= 2;
        located = loc::localize(objects, map.graph, wide, regime.association);
      }
      if (located) {
        state.ref_index = located->state.ref_index;
        rec.localized = true;
        rec.ref_index = state.ref_index;
        mask = loc::subgoal_mask(located->correspondences, map.costs, objects);
      }
    }

    sim::ControlCommand cmd;
    if (!mask) {
      rec.choice = {servo::ControllerMode::Fallback, servo::SwitchReason::LocalizationDegraded};
      const bool search = opt.controller == ControllerKind::FallbackOnly || opt.switch_enabled;
      cmd = {0.0, search ? cfg.omega_search : 0.0};
    } else {
      for (const auto& e : mask->entries) rec.raw_costs.push_back(e.raw_cost), rec.norm_costs.push_back(e.norm_cost);
      const topo::Segment& best = objects[std::size_t(mask->entries[std::size_t(mask->best)].query)];
      rec.best_instance = best.instance_id;
      if (opt.controller == ControllerKind::FallbackOnly) {
        rec.choice = {servo::ControllerMode::Fallback, servo::SwitchReason::Ok};
        cmd = servo::segment_servo(*mask, objects, cfg.servo);
      } else {
        const auto trav = metric::classify_traversable(all, obs.width(), obs.height(), semantic);
        auto bev = metric::traversable_grid(trav, obs.depth_image, cam, cfg.bev);
        metric::mark_robot_disc(bev, cfg.bev, cfg.costmap.robot_radius);
        const auto costmap = metric::build_costmap(std::move(bev), cfg.bev, cfg.costmap);
        const auto target = metric::select_subgoal_point(best, obs.depth_image, cam, cfg.bev);
        metric::LocalPlan plan;
        if (costmap && target) plan = metric::plan_path(*costmap, *target, cfg.snap_radius);
        rec.choice = servo::choose_controller(costmap.ok(), target.ok(), plan.feasible, true);
        if (rec.choice.mode == servo::ControllerMode::Metric) cmd = metric::follow_path(plan, cfg.follow);
        else if (opt.switch_enabled) cmd = servo::segment_servo(*mask, objects, cfg.servo);
      }
    }

    const sim::StepOutcome moved = sim::step_agent(world, pose, cmd, cfg.suite.dt, cfg.world.agent_radius, cfg.world.slide_on_collision);
    pose = moved.pose;
    rec.pose = pose;
    rec.command = cmd;
    rec.collided = moved.collided;
    rec.goal_distance = sim::distance_to_instance(world, pose.position(), goal);
    res.collisions += moved.collided ? 1 : 0;
    if (prev_mode && *prev_mode != rec.choice.mode) ++res.switch_count;
    prev_mode = rec.choice.mode;
    res.steps = step + 1;
    res.final_distance = rec.goal_distance;
    if (opt.keep_trace) res.trace.push_back(std::move(rec));
    if (res.final_distance <= cfg.suite.success_radius) {
      res.success = true;
      break;
    }
  }
  return res;
}

std::optional<sim::World> augment_world(const sim::World& world, const Episode& episode, const Config& cfg) {
  const auto& path = episode.teach_path;
  const int n = int(path.size());
  std::vector<int> order;
  for (int i = 0; i < n; ++i) order.push_back(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return std::abs(2 * a - n) < std::abs(2 * b - n); });
  const int size = cfg.suite.augment_size_cells;
  for (int i : order) {
    const Eigen::Vector2d p = path[std::size_t(i)].position();
    if ((p - episode.start.position()).norm() < 0.75) continue;
    if (sim::distance_to_instance(world, p, episode.goal_instance) <= cfg.suite.success_radius) continue;
    sim::World w = world;
    const Cell c = w.cell_at(p.x(), p.y());
    if (!sim::try_add_obstacle(w, {c.row - size / 2, c.col - size / 2}, size, size, cfg.suite.augment_height)) continue;
    if (sim::disc_collides(w, episode.start.x, episode.start.y, cfg.world.agent_radius)) continue;
    if (!sim::geodesic_to_instance(w, episode.start, episode.goal_instance)) continue;
    return w;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Aggregation

std::map<ResultKey, GroupStats> aggregate(const std::vector<LabeledResult>& results) {
  std::map<ResultKey, GroupStats> table;
  for (const LabeledResult& r : results) {
    GroupStats& g = table[r.key];
    ++g.episodes;
    g.successes += r.success ? 1 : 0;
    g.mean_steps += r.steps;
    g.mean_switches += r.switch_count;
  }
  for (auto& [key, g] : table) {
    g.success_rate = 100.0 * g.successes / g.episodes;
    g.mean_steps /= g.episodes;
    g.mean_switches /= g.episodes;
  }
  return table;
}

std::string format_table(const std::map<ResultKey, GroupStats>& table) {
  std::ostringstream os;
  os << std::left << std::setw(18) << "suite" << std::setw(16) << "regime" << std::setw(16) << "controller"
     << std::setw(8) << "category" << std::right << std::setw(6) << "n" << std::setw(9) << "success" << std::setw(11)
     << "mean_steps" << std::setw(14) << "mean_switches" << '\n';
  os << std::fixed;
  for (const auto& [k, g] : table) {
    os << std::left << std::setw(18) << k.suite << std::setw(16) << k.regime << std::setw(16) << k.controller
       << std::setw(8) << k.category << std::right << std::setw(6) << g.episodes << std::setw(9)
       << std::setprecision(2) << g.success_rate << std::setw(11) << std::setprecision(1) << g.mean_steps
       << std::setw(14) << std::setprecision(2) << g.mean_switches << '\n';
  }
  return os.str();
}

std::string summary_json(const std::map<ResultKey, GroupStats>& table) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& [k, g] : table) {
    nlohmann::ordered_json r;
    r["suite"] = k.suite;
    r["regime"] = k.regime;
    r["controller"] = k.controller;
    r["category"] = k.category;
    r["episodes"] = g.episodes;
    r["successes"] = g.successes;
    r["success_rate"] = g.success_rate;
    r["mean_steps"] = g.mean_steps;
    r["mean_switches"] = g.mean_switches;
    rows.push_back(std::move(r));
  }
  nlohmann::ordered_json doc;
  doc["schema"] = "tango-summary";
  doc["version"] = 1;
  doc["groups"] = std::move(rows);
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Full bench

namespace {

class TraceSink {
 public:
  explicit TraceSink(const std::string& dir) : dir_(dir) {}

  void write(const std::string& suite, const io::TraceHeader& header, const EpisodeResult& res) {
    if (dir_.empty()) return;
    auto it = files_.find(suite);
    if (it == files_.end()) {
      std::filesystem::create_directories(std::filesystem::path(dir_) / "traces");
      it = files_.emplace(suite, std::ofstream(std::filesystem::path(dir_) / "traces" / (suite + ".jsonl"))).first;
      if (!it->second) throw Error(Errc::Io, "cannot write traces for suite " + suite);
    }
    io::write_trace(it->second, header, res.trace);
  }

 private:
  std::string dir_;
  std::map<std::string, std::ofstream> files_;
};

io::TraceHeader header_for(const std::string& suite, const Episode& ep, bool augmented, InstanceId goal,
                           Regime regime, ControllerKind controller, const RunOptions& opt, const EpisodeResult& r) {
  io::TraceHeader h;
  h.suite = suite;
  h.episode = ep.index;
  h.world_index = ep.world_index;
  h.world_seed = ep.world_seed;
  h.augmented = augmented;
  h.goal_instance = goal;
  h.regime = to_string(regime);
  h.controller = to_string(controller);
  h.switch_enabled = opt.switch_enabled;
  h.budget = opt.budget;
  h.success = r.success;
  h.steps = r.steps;
  h.final_distance = r.final_distance;
  h.switch_count = r.switch_count;
  return h;
}

}  // namespace

std::uint64_t episode_noise_seed(const Config& cfg, const std::string& suite, int episode) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char ch : suite) h = (h ^ std::uint64_t(std::uint8_t(ch))) * 1099511628211ULL;
  return mix_seed(mix_seed(cfg.suite.seed, h), std::uint64_t(episode));
}

Config ablation_config(const Config& cfg) {
  Config ac = cfg;
  ac.world.corridor_prob = cfg.suite.corridor_prob;
  ac.world.corridor_width_cells = cfg.suite.corridor_width_cells;
  ac.suite.seed = mix_seed(cfg.suite.seed, 0xAB1A);
  ac.suite.easy = ac.suite.full = false;
  ac.suite.hard = true;
  return ac;
}

BenchOutput run_bench(const Config& cfg, const BenchSuites& suites, const std::string& out_dir, std::ostream* progress) {
  BenchOutput out;
  TraceSink sink(out_dir);
  auto record = [&](const std::string& suite, const std::string& table_suite, const Episode& ep, bool augmented,
                    InstanceId goal, Regime regime, ControllerKind controller, const std::string& controller_label,
                    const RunOptions& opt, const EpisodeResult& r) {
    sink.write(suite, header_for(suite, ep, augmented, goal, regime, controller, opt, r), r);
    out.results.push_back({{table_suite, to_string(regime), controller_label, to_string(ep.category)}, r.success,
                           r.steps, r.switch_count});
  };

  const std::vector<Episode> episodes = make_episodes(cfg);
  const auto worlds = episode_worlds(cfg, episodes);
  const std::array<Regime, 3> regimes{Regime::GtMetric, Regime::GtTopological, Regime::Noisy};
  const RunOptions main_opt{ControllerKind::Tango, cfg.suite.budget, true, !out_dir.empty()};

  if (suites.main || suites.fallback || suites.alt_goals) {
    for (const Episode& ep : episodes) {
      const sim::World& world = worlds.at(ep.world_index);
      const TeachRun teach = render_teach(world, ep, cfg);
      std::map<Regime, EpisodeResult> main_results;
      std::map<Regime, RegimeConfig> regime_cfgs;
      for (Regime rg : regimes) regime_cfgs.emplace(rg, RegimeConfig::make(rg, cfg.noise, episode_noise_seed(cfg, "main", ep.index)));

      if (suites.main || suites.alt_goals) {
        for (Regime rg : regimes) {
          const TeachMap map = build_teach_map(teach, ep.goal_instance, regime_cfgs.at(rg), cfg);
          EpisodeResult r = run_episode(world, ep, map, regime_cfgs.at(rg), main_opt, cfg);
          if (suites.main) record("main", "main", ep, false, ep.goal_instance, rg, ControllerKind::Tango, "tango", main_opt, r);
          r.trace.clear();
          main_results.emplace(rg, std::move(r));
        }
      }

      if (suites.fallback) {
        const RegimeConfig& rc = regime_cfgs.at(Regime::GtMetric);
        const TeachMap map = build_teach_map(teach, ep.goal_instance, rc, cfg);
        RunOptions fb = main_opt;
        fb.controller = ControllerKind::FallbackOnly;
        record("main_fallback", "main", ep, false, ep.goal_instance, Regime::GtMetric, ControllerKind::FallbackOnly,
               "fallback_only", fb, run_episode(world, ep, map, rc, fb, cfg));
        if (ep.category != Category::Full) {
          if (auto aug = augment_world(world, ep, cfg)) {
            for (ControllerKind ck : {ControllerKind::Tango, ControllerKind::FallbackOnly}) {
              RunOptions o = main_opt;
              o.controller = ck;
              record("augmented", "augmented", ep, true, ep.goal_instance, Regime::GtMetric, ck, to_string(ck), o,
                     run_episode(*aug, ep, map, rc, o, cfg));
            }
          } else {
            std::clog << "warning: episode " << ep.index << " has no obstacle placement; skipped from augmented set\n";
          }
        }
      }

      if (suites.alt_goals && ep.category != Category::Easy) {
        const Regime rg = Regime::Noisy;
        const auto alt = select_alt_goal(world, ep, teach, cfg);
        if (alt) {
          const RegimeConfig& rc = regime_cfgs.at(rg);
          const TeachMap map = build_teach_map(teach, *alt, rc, cfg);
          const EpisodeResult r = run_episode(world, ep, map, rc, main_opt, cfg);
          record("alt_goals", "alt_goals", ep, false, *alt, rg, ControllerKind::Tango, "alt", main_opt, r);
          const EpisodeResult& t = main_results.at(rg);
          out.results.push_back({{"alt_goals", to_string(rg), "teach", to_string(ep.category)}, t.success, t.steps,
                                 t.switch_count});
        } else {
          std::clog << "warning: episode " << ep.index << " has no alternate goal\n";
        }
      }
      if (progress) *progress << "episode " << ep.index + 1 << "/" << episodes.size() << " done\n" << std::flush;
    }
  }

  if (suites.ablation) {
    const Config ac = ablation_config(cfg);
    const auto abl_eps = make_episodes(ac);
    const auto abl_worlds = episode_worlds(ac, abl_eps);
    for (const Episode& ep : abl_eps) {
      const sim::World& world = abl_worlds.at(ep.world_index);
      const TeachRun teach = render_teach(world, ep, ac);
      const RegimeConfig rc = RegimeConfig::make(Regime::GtMetric, cfg.noise, episode_noise_seed(cfg, "ablation", ep.index));
      const TeachMap map = build_teach_map(teach, ep.goal_instance, rc, ac);
      for (bool sw : {true, false}) {
        const RunOptions o{ControllerKind::Tango, cfg.suite.ablation_budget, sw, !out_dir.empty()};
        record("ablation", "ablation", ep, false, ep.goal_instance, Regime::GtMetric, ControllerKind::Tango,
               sw ? "auto_switch" : "no_switch", o, run_episode(world, ep, map, rc, o, ac));
      }
      if (progress) *progress << "ablation episode " << ep.index + 1 << "/" << abl_eps.size() << " done\n" << std::flush;
    }
  }

  out.table = aggregate(out.results);
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream(std::filesystem::path(out_dir) / "summary.txt") << format_table(out.table);
    std::ofstream(std::filesystem::path(out_dir) / "summary.json") << summary_json(out.table);
  }
  return out;
}

void retain_heap_buffers() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

}  // namespace tango::bench
