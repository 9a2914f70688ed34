#include "tango/io.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace tango::io {

using nlohmann::ordered_json;

namespace {

template <class T>
void write_grid(std::ostream& os, const char* name, const Grid<T>& g) {
  os << name << ' ' << g.rows() << ' ' << g.cols() << '\n';
  for (Eigen::Index r = 0; r < g.rows(); ++r) {
    for (Eigen::Index c = 0; c < g.cols(); ++c) os << (c ? " " : "") << static_cast<long long>(g(r, c));
    os << '\n';
  }
}

template <class T>
Grid<T> read_grid(std::istream& is, const std::string& name) {
  std::string tag;
  Eigen::Index rows = 0, cols = 0;
  if (!(is >> tag >> rows >> cols) || tag != name || rows < 0 || cols < 0)
    throw Error(Errc::Parse, "world: expected grid " + name);
  Grid<T> g(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      long long v = 0;
      if (!(is >> v)) throw Error(Errc::Parse, "world: truncated grid " + name);
      g(r, c) = static_cast<T>(v);
    }
  return g;
}

void expect(std::istream& is, const std::string& word) {
  std::string tag;
  if (!(is >> tag) || tag != word) throw Error(Errc::Parse, "world: expected '" + word + "'");
}

sim::SemanticClass parse_class(const std::string& s) {
  for (auto c : {sim::SemanticClass::Floor, sim::SemanticClass::Wall, sim::SemanticClass::Ceiling,
                 sim::SemanticClass::Furniture, sim::SemanticClass::Fixture, sim::SemanticClass::Rug})
    if (s == sim::to_string(c)) return c;
  throw Error(Errc::Parse, "world: unknown class " + s);
}

}  // namespace

void write_world(std::ostream& os, const sim::World& w) {
  os << "tango-world 1\n";
  os << std::setprecision(17);
  os << "seed " << w.seed << '\n';
  os << "cell_size " << w.cell_size << '\n';
  os << "wall_height " << w.wall_height << '\n';
  os << "floor " << w.floor_instance_id << " ceiling " << w.ceiling_instance_id << '\n';
  write_grid(os, "occupancy", w.occupancy);
  write_grid(os, "cell_instance", w.cell_instance);
  for (int s = 0; s < 4; ++s) write_grid(os, "face", w.face_instance[std::size_t(s)]);
  os << "instances " << w.instances.size() << '\n';
  for (const auto& inst : w.instances) {
    os << inst.instance_id << ' ' << sim::to_string(inst.semantic_class) << ' ' << inst.height << ' '
       << inst.footprint.size();
    for (const Cell& c : inst.footprint) os << ' ' << c.row << ' ' << c.col;
    os << '\n';
  }
}

sim::World read_world(std::istream& is) {
  std::string magic;
  int version = 0;
  if (!(is >> magic >> version) || magic != "tango-world" || version != 1)
    throw Error(Errc::Parse, "world: bad header");
  sim::World w;
  expect(is, "seed");
  is >> w.seed;
  expect(is, "cell_size");
  is >> w.cell_size;
  expect(is, "wall_height");
  is >> w.wall_height;
  expect(is, "floor");
  is >> w.floor_instance_id;
  expect(is, "ceiling");
  is >> w.ceiling_instance_id;
  if (!is) throw Error(Errc::Parse, "world: bad scalar fields");
  w.occupancy = read_grid<sim::CellKind>(is, "occupancy");
  w.cell_instance = read_grid<InstanceId>(is, "cell_instance");
  for (int s = 0; s < 4; ++s) w.face_instance[std::size_t(s)] = read_grid<InstanceId>(is, "face");
  expect(is, "instances");
  std::size_t n = 0;
  if (!(is >> n)) throw Error(Errc::Parse, "world: bad instance count");
  for (std::size_t k = 0; k < n; ++k) {
    sim::ObjectInstance inst;
    std::string cls;
    std::size_t cells = 0;
    if (!(is >> inst.instance_id >> cls >> inst.height >> cells)) throw Error(Errc::Parse, "world: bad instance");
    if (inst.instance_id != InstanceId(k + 1)) throw Error(Errc::Parse, "world: instance ids must be dense");
    inst.semantic_class = parse_class(cls);
    inst.footprint.resize(cells);
    for (Cell& c : inst.footprint)
      if (!(is >> c.row >> c.col)) throw Error(Errc::Parse, "world: bad footprint");
    w.instances.push_back(std::move(inst));
  }
  return w;
}

void write_trace(std::ostream& os, const TraceHeader& h, const std::vector<bench::StepRecord>& trace) {
  ordered_json head;
  head["schema"] = "tango-trace";
  head["version"] = kTraceSchemaVersion;
  head["suite"] = h.suite;
  head["episode"] = h.episode;
  head["world_index"] = h.world_index;
  head["world_seed"] = h.world_seed;
  head["augmented"] = h.augmented;
  head["goal_instance"] = h.goal_instance;
  head["regime"] = h.regime;
  head["controller"] = h.controller;
  head["switch_enabled"] = h.switch_enabled;
  head["budget"] = h.budget;
  head["success"] = h.success;
  head["steps"] = h.steps;
  head["final_distance"] = h.final_distance;
  head["switch_count"] = h.switch_count;
  head["records"] = trace.size();
  os << head.dump() << '\n';
  for (const auto& r : trace) {
    ordered_json j;
    j["step"] = r.step;
    j["pose"] = {r.pose.x, r.pose.y, r.pose.theta};
    j["mode"] = servo::to_string(r.choice.mode);
    j["reason"] = servo::to_string(r.choice.reason);
    j["localized"] = r.localized;
    j["ref_index"] = r.ref_index;
    j["raw_costs"] = r.raw_costs;
    j["norm_costs"] = r.norm_costs;
    j["best_instance"] = r.best_instance;
    j["command"] = {r.command.linear_v, r.command.yaw_rate};
    j["collided"] = r.collided;
    j["goal_distance"] = r.goal_distance;
    os << j.dump() << '\n';
  }
}

namespace {

servo::ControllerMode parse_mode(const std::string& s) {
  for (auto m : {servo::ControllerMode::Metric, servo::ControllerMode::Fallback})
    if (s == servo::to_string(m)) return m;
  throw Error(Errc::Parse, "trace: unknown mode " + s);
}

servo::SwitchReason parse_reason(const std::string& s) {
  for (auto r : {servo::SwitchReason::Ok, servo::SwitchReason::EmptyTraversability,
                 servo::SwitchReason::SubgoalProjectionFailed, servo::SwitchReason::PlanInfeasible,
                 servo::SwitchReason::LocalizationDegraded})
    if (s == servo::to_string(r)) return r;
  throw Error(Errc::Parse, "trace: unknown reason " + s);
}

}  // namespace

std::vector<Trace> read_traces(std::istream& is) {
  std::vector<Trace> out;
  std::string line;
  std::size_t pending = 0;
  try {
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line);
      if (pending == 0) {
        if (j.value("schema", "") != "tango-trace") throw Error(Errc::Parse, "trace: expected header line");
        if (j.at("version").get<int>() != kTraceSchemaVersion) throw Error(Errc::Parse, "trace: unsupported version");
        Trace t;
        auto& h = t.header;
        h.suite = j.at("suite");
        h.episode = j.at("episode");
        h.world_index = j.at("world_index");
        h.world_seed = j.at("world_seed");
        h.augmented = j.at("augmented");
        h.goal_instance = j.at("goal_instance");
        h.regime = j.at("regime");
        h.controller = j.at("controller");
        h.switch_enabled = j.at("switch_enabled");
        h.budget = j.at("budget");
        h.success = j.at("success");
        h.steps = j.at("steps");
        h.final_distance = j.at("final_distance");
        h.switch_count = j.at("switch_count");
        pending = j.at("records");
        out.push_back(std::move(t));
        continue;
      }
      bench::StepRecord r;
      r.step = j.at("step");
      const auto& p = j.at("pose");
      r.pose = {p.at(0), p.at(1), p.at(2)};
      r.choice.mode = parse_mode(j.at("mode"));
      r.choice.reason = parse_reason(j.at("reason"));
      r.localized = j.at("localized");
      r.ref_index = j.at("ref_index");
      r.raw_costs = j.at("raw_costs").get<std::vector<double>>();
      r.norm_costs = j.at("norm_costs").get<std::vector<double>>();
      r.best_instance = j.at("best_instance");
      r.command = {j.at("command").at(0), j.at("command").at(1)};
      r.collided = j.at("collided");
      r.goal_distance = j.at("goal_distance");
      out.back().steps.push_back(std::move(r));
      --pending;
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Parse, std::string("trace: ") + e.what());
  }
  if (pending) throw Error(Errc::Parse, "trace: truncated episode");
  return out;
}

void write_plot(std::ostream& os, const sim::World& world, const bench::Episode& episode, InstanceId goal,
                const std::vector<bench::StepRecord>& trace) {
  const double px = 12.0;
  const double s = px / world.cell_size;
  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << world.cols() * px << "\" height=\""
     << world.rows() * px << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (int r = 0; r < world.rows(); ++r)
    for (int c = 0; c < world.cols(); ++c) {
      const auto kind = world.occupancy(r, c);
      const bool is_goal = world.cell_instance(r, c) == goal;
      if (kind == sim::CellKind::Free && !is_goal) continue;
      const char* fill = is_goal ? "#e8a33d" : kind == sim::CellKind::Wall ? "#333" : "#999";
      os << "<rect x=\"" << c * px << "\" y=\"" << r * px << "\" width=\"" << px << "\" height=\"" << px
         << "\" fill=\"" << fill << "\"/>\n";
    }
  if (!episode.teach_path.empty()) {
    os << "<polyline fill=\"none\" stroke=\"#3a7\" stroke-width=\"2\" stroke-dasharray=\"4 3\" points=\"";
    for (const auto& p : episode.teach_path) os << p.x * s << ',' << p.y * s << ' ';
    os << "\"/>\n";
  }
  Eigen::Vector2d prev = episode.start.position();
  for (const auto& r : trace) {
    const char* color = r.choice.mode == servo::ControllerMode::Metric ? "#2563eb" : "#dc2626";
    os << "<line x1=\"" << prev.x() * s << "\" y1=\"" << prev.y() * s << "\" x2=\"" << r.pose.x * s << "\" y2=\""
       << r.pose.y * s << "\" stroke=\"" << color << "\" stroke-width=\"2.5\"/>\n";
    prev = r.pose.position();
  }
  os << "<circle cx=\"" << episode.start.x * s << "\" cy=\"" << episode.start.y * s
     << "\" r=\"5\" fill=\"#16a34a\"/>\n";
  os << "</svg>\n";
}

}  // namespace tango::io
