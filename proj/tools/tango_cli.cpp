#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "tango/bench.hpp"
#include "tango/io.hpp"

using namespace tango;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> worlds;
  std::vector<std::string> categories;
  std::optional<int> budget;

  bench::Config load() const {
    bench::Config cfg = config_path.empty() ? bench::Config{} : bench::load_config(config_path);
    if (seed) cfg.suite.seed = *seed;
    if (worlds) cfg.suite.worlds = *worlds;
    if (budget) cfg.suite.budget = *budget;
    if (!categories.empty()) {
      cfg.suite.easy = cfg.suite.hard = cfg.suite.full = false;
      for (const auto& c : categories) {
        switch (bench::parse_category(c)) {
          case bench::Category::Easy: cfg.suite.easy = true; break;
          case bench::Category::Hard: cfg.suite.hard = true; break;
          case bench::Category::Full: cfg.suite.full = true; break;
        }
      }
    }
    return cfg;
  }
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("-c,--config", c.config_path, "JSON config file");
  app->add_option("-s,--seed", c.seed, "bench seed");
  app->add_option("--worlds", c.worlds, "number of worlds");
  app->add_option("--categories", c.categories, "subset of easy, hard, full")->delimiter(',');
  app->add_option("--budget", c.budget, "step budget");
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw Error(Errc::Io, "cannot write " + path.string());
  return os;
}

const bench::Episode& find_episode(const std::vector<bench::Episode>& eps, int index) {
  if (index < 0 || index >= int(eps.size()))
    throw Error(Errc::InvalidArgument, "episode index out of range (" + std::to_string(eps.size()) + " episodes)");
  return eps[std::size_t(index)];
}

}  // namespace

int main(int argc, char** argv) {
  bench::retain_heap_buffers();
  CLI::App app{"tango: topometric teach-and-repeat navigation bench"};
  app.require_subcommand(1);
  Common common;

  std::string out = "out";
  auto* gen = app.add_subcommand("gen-worlds", "generate worlds and write them as text");
  add_common(gen, common);
  gen->add_option("-o,--out", out, "output directory");

  int episode = 0;
  std::string regime = "gt_metric";
  std::string controller = "tango";
  std::string switch_mode = "on";
  std::string out_file;
  auto* map = app.add_subcommand("map", "build the teach map of one episode");
  add_common(map, common);
  map->add_option("-e,--episode", episode, "episode index");
  map->add_option("-r,--regime", regime, "gt_metric, gt_topological or noisy");
  map->add_option("-o,--out", out_file, "map file (stdout if omitted)");

  std::string plot_file;
  auto* run = app.add_subcommand("run", "run one episode");
  add_common(run, common);
  run->add_option("-e,--episode", episode, "episode index");
  run->add_option("-r,--regime", regime, "gt_metric, gt_topological or noisy");
  run->add_option("--controller", controller, "tango or fallback_only");
  run->add_option("--switch", switch_mode, "auto-switch on or off")->check(CLI::IsMember({"on", "off"}));
  run->add_option("-o,--out", out_file, "trace file (JSON lines)");
  run->add_option("--plot", plot_file, "SVG plot file");

  std::vector<std::string> suites{"main", "fallback", "ablation", "alt_goals"};
  auto* bench_cmd = app.add_subcommand("bench", "run the benchmark suites");
  add_common(bench_cmd, common);
  bench_cmd->add_option("-o,--out", out, "output directory");
  bench_cmd->add_option("--suites", suites, "main, fallback, ablation, alt_goals")->delimiter(',');
  bool quiet = false;
  bench_cmd->add_flag("-q,--quiet", quiet, "no progress output");

  std::string trace_file;
  int trace_index = 0;
  auto* plot = app.add_subcommand("plot", "plot a recorded trace");
  add_common(plot, common);
  plot->add_option("-t,--trace", trace_file, "trace file")->required();
  plot->add_option("--index", trace_index, "which trace in the file");
  plot->add_option("-o,--out", out_file, "SVG file")->required();

  auto* cfg_cmd = app.add_subcommand("config", "print the effective config");
  add_common(cfg_cmd, common);

  CLI11_PARSE(app, argc, argv);

  try {
    const bench::Config cfg = common.load();

    if (*gen) {
      fs::create_directories(out);
      for (int w = 0; w < cfg.suite.worlds; ++w) {
        const sim::World world = bench::make_world(mix_seed(cfg.suite.seed, std::uint64_t(w)), cfg.world);
        auto os = open_out(fs::path(out) / ("world_" + std::to_string(w) + ".txt"));
        io::write_world(os, world);
      }
      std::cout << "wrote " << cfg.suite.worlds << " worlds to " << out << "\n";
    } else if (*map) {
      const auto eps = bench::make_episodes(cfg);
      const auto& ep = find_episode(eps, episode);
      const sim::World world = bench::make_world(mix_seed(cfg.suite.seed, std::uint64_t(ep.world_index)), cfg.world);
      const auto rc = bench::RegimeConfig::make(bench::parse_regime(regime), cfg.noise,
                                                bench::episode_noise_seed(cfg, "main", ep.index));
      const auto tm = bench::build_teach_map(bench::render_teach(world, ep, cfg), ep.goal_instance, rc, cfg);
      if (out_file.empty()) {
        topo::write_map(std::cout, tm.graph);
      } else {
        auto os = open_out(out_file);
        topo::write_map(os, tm.graph);
      }
    } else if (*run) {
      const auto eps = bench::make_episodes(cfg);
      const auto& ep = find_episode(eps, episode);
      const sim::World world = bench::make_world(mix_seed(cfg.suite.seed, std::uint64_t(ep.world_index)), cfg.world);
      const auto rg = bench::parse_regime(regime);
      const auto rc = bench::RegimeConfig::make(rg, cfg.noise, bench::episode_noise_seed(cfg, "main", ep.index));
      const auto tm = bench::build_teach_map(bench::render_teach(world, ep, cfg), ep.goal_instance, rc, cfg);
      const bench::RunOptions opt{bench::parse_controller(controller), cfg.suite.budget, switch_mode == "on", true};
      const auto res = bench::run_episode(world, ep, tm, rc, opt, cfg);
      std::cout << "episode " << ep.index << " (" << bench::to_string(ep.category) << ", " << regime << ", "
                << controller << "): " << (res.success ? "success" : "failure") << " after " << res.steps
                << " steps, final distance " << res.final_distance << " m, " << res.switch_count << " switches\n";
      if (!out_file.empty()) {
        io::TraceHeader h;
        h.suite = "run";
        h.episode = ep.index;
        h.world_index = ep.world_index;
        h.world_seed = ep.world_seed;
        h.goal_instance = ep.goal_instance;
        h.regime = regime;
        h.controller = controller;
        h.switch_enabled = opt.switch_enabled;
        h.budget = opt.budget;
        h.success = res.success;
        h.steps = res.steps;
        h.final_distance = res.final_distance;
        h.switch_count = res.switch_count;
        auto os = open_out(out_file);
        io::write_trace(os, h, res.trace);
      }
      if (!plot_file.empty()) {
        auto os = open_out(plot_file);
        io::write_plot(os, world, ep, ep.goal_instance, res.trace);
      }
    } else if (*bench_cmd) {
      bench::BenchSuites s{false, false, false, false};
      for (const auto& name : suites) {
        if (name == "main") s.main = true;
        else if (name == "fallback") s.fallback = true;
        else if (name == "ablation") s.ablation = true;
        else if (name == "alt_goals") s.alt_goals = true;
        else throw Error(Errc::InvalidArgument, "unknown suite " + name);
      }
      const auto result = bench::run_bench(cfg, s, out, quiet ? nullptr : &std::cerr);
      std::cout << bench::format_table(result.table);
    } else if (*plot) {
      std::ifstream in(trace_file);
      if (!in) throw Error(Errc::Io, "cannot read " + trace_file);
      const auto traces = io::read_traces(in);
      if (trace_index < 0 || trace_index >= int(traces.size()))
        throw Error(Errc::InvalidArgument, "trace index out of range");
      const auto& tr = traces[std::size_t(trace_index)];
      const bench::Config pc = tr.header.suite == "ablation" ? bench::ablation_config(cfg) : cfg;
      const auto eps = bench::make_episodes(pc);
      const auto& ep = find_episode(eps, tr.header.episode);
      sim::World world = bench::make_world(mix_seed(pc.suite.seed, std::uint64_t(ep.world_index)), pc.world);
      if (tr.header.augmented)
        if (auto aug = bench::augment_world(world, ep, pc)) world = std::move(*aug);
      auto os = open_out(out_file);
      io::write_plot(os, world, ep, tr.header.goal_instance, tr.steps);
    } else if (*cfg_cmd) {
      std::cout << bench::dump_config(cfg);
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return 1;
  }
  return 0;
}
