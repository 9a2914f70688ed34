#pragma once

// Teach-and-repeat benchmark: episode sampling, teach-run mapping,
// closed-loop evaluation under the ground-truth and noisy regimes, the
// alternate-goal task and result aggregation.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tango/config.hpp"
#include "tango/localizer.hpp"
#include "tango/metricplanner.hpp"
#include "tango/servocontrol.hpp"
#include "tango/simworld.hpp"
#include "tango/topograph.hpp"

namespace tango::bench {

enum class Category : std::uint8_t { Easy, Hard, Full };
enum class Regime : std::uint8_t { GtMetric, GtTopological, Noisy };
enum class ControllerKind : std::uint8_t { Tango, FallbackOnly };
enum class CostSource : std::uint8_t { MetricGeodesic, TopologicalGraph };

const char* to_string(Category c);
const char* to_string(Regime r);
const char* to_string(ControllerKind c);
Category parse_category(const std::string& s);
Regime parse_regime(const std::string& s);
ControllerKind parse_controller(const std::string& s);

/// Inclusive geodesic start-to-goal band in meters.
std::pair<double, double> category_band(Category c);

struct Episode {
  int index = 0;
  int world_index = 0;
  std::uint64_t world_seed = 0;
  sim::Pose2D start;
  InstanceId goal_instance = sim::kNoInstance;
  Category category = Category::Easy;
  double start_geodesic = 0.0;
  std::vector<sim::Pose2D> teach_path;
};

struct RegimeConfig {
  Regime regime = Regime::GtMetric;
  topo::AssociationModel association;
  CostSource cost_source = CostSource::MetricGeodesic;

  static RegimeConfig make(Regime regime, const NoiseConfig& noise, std::uint64_t seed);
};

struct StepRecord {
  int step = 0;
  sim::Pose2D pose;  // after the command
  servo::ControllerChoice choice;
  bool localized = false;
  int ref_index = -1;
  std::vector<double> raw_costs;
  std::vector<double> norm_costs;
  int best_instance = -1;
  sim::ControlCommand command;
  bool collided = false;
  double goal_distance = 0.0;
};

struct EpisodeResult {
  bool success = false;
  int steps = 0;
  double final_distance = 0.0;
  int switch_count = 0;
  int collisions = 0;
  std::vector<StepRecord> trace;
};

/// Per-instance geodesic cost (meters) from each footprint to the goal
/// footprint; indexed by instance id, +inf where unreachable, [0] unused.
std::vector<double> metric_goal_costs(const sim::World& world, InstanceId goal);

/// True for classes that become map nodes (objects, not floor/ceiling).
bool is_object_class(sim::SemanticClass c);

/// World generation with deterministic reseeding on failure.
sim::World make_world(std::uint64_t seed, const sim::WorldGenParams& params);

std::vector<Episode> make_episodes(const Config& config);

/// Worlds referenced by `episodes`, keyed by world index.
std::map<int, sim::World> episode_worlds(const Config& config, const std::vector<Episode>& episodes);

/// Rendered and segmented teach run (object segments only).
struct TeachRun {
  std::vector<sim::Observation> frames;
  std::vector<std::vector<topo::Segment>> segments;
};

TeachRun render_teach(const sim::World& world, const Episode& episode, const Config& config);

struct TeachMap {
  topo::MapGraph graph;
  int goal_node = -1;
  topo::GoalCostField costs;
};

/// Graph over the teach run under the regime's association; the goal node is
/// the largest goal segment of the last frame that shows the goal.
TeachMap build_teach_map(const TeachRun& teach, InstanceId goal, const RegimeConfig& regime, const Config& config);

Result<InstanceId> select_alt_goal(const sim::World& world, const Episode& episode, const TeachRun& teach,
                                   const Config& config);

struct RunOptions {
  ControllerKind controller = ControllerKind::Tango;
  int budget = 500;
  bool switch_enabled = true;
  bool keep_trace = true;
};

EpisodeResult run_episode(const sim::World& world, const Episode& episode, const TeachMap& map,
                          const RegimeConfig& regime, const RunOptions& options, const Config& config);

/// Obstacle dropped on the teach path after mapping; nullopt if no spot
/// keeps start and goal connected.
std::optional<sim::World> augment_world(const sim::World& world, const Episode& episode, const Config& config);

struct ResultKey {
  std::string suite;
  std::string regime;
  std::string controller;
  std::string category;
  auto operator<=>(const ResultKey&) const = default;
};

struct GroupStats {
  int episodes = 0;
  int successes = 0;
  double success_rate = 0.0;  // percent
  double mean_steps = 0.0;
  double mean_switches = 0.0;
};

struct LabeledResult {
  ResultKey key;
  bool success = false;
  int steps = 0;
  int switch_count = 0;
};

/// Groups results; empty groups never appear.
std::map<ResultKey, GroupStats> aggregate(const std::vector<LabeledResult>& results);

std::string format_table(const std::map<ResultKey, GroupStats>& table);
std::string summary_json(const std::map<ResultKey, GroupStats>& table);

struct BenchOutput {
  std::map<ResultKey, GroupStats> table;
  std::vector<LabeledResult> results;
};

struct BenchSuites {
  bool main = true;          // 3 regimes x Tango
  bool fallback = true;      // FallbackOnly under GtMetric + obstacle-augmented set
  bool ablation = true;      // auto-switch on/off, corridor-heavy worlds
  bool alt_goals = true;     // teach vs alternate goals
};

/// Config of the corridor-heavy, Hard-only ablation set.
Config ablation_config(const Config& config);

/// Seed of the noisy association stream for one episode of one suite.
std::uint64_t episode_noise_seed(const Config& config, const std::string& suite, int episode);

/// Runs the requested suites; writes summary.txt, summary.json and one trace
/// file per suite into `out_dir` when non-empty.
BenchOutput run_bench(const Config& config, const BenchSuites& suites, const std::string& out_dir,
                      std::ostream* progress = nullptr);

/// Keeps freed frame buffers in the process heap so each step does not
/// page-fault fresh memory. Call once from main; no-op outside glibc.
void retain_heap_buffers();

}  // namespace tango::bench
