#pragma once

// Text formats: worlds (`tango-world 1`), step traces (JSON lines,
// `tango-trace` schema 1) and SVG trajectory plots.

#include <iosfwd>
#include <string>
#include <vector>

#include "tango/bench.hpp"
#include "tango/simworld.hpp"

namespace tango::io {

void write_world(std::ostream& os, const sim::World& world);
sim::World read_world(std::istream& is);

struct TraceHeader {
  std::string suite;
  int episode = 0;
  int world_index = 0;
  std::uint64_t world_seed = 0;
  bool augmented = false;
  InstanceId goal_instance = sim::kNoInstance;
  std::string regime;
  std::string controller;
  bool switch_enabled = true;
  int budget = 0;
  bool success = false;
  int steps = 0;
  double final_distance = 0.0;
  int switch_count = 0;
};

inline constexpr int kTraceSchemaVersion = 1;

/// One header line followed by one line per step.
void write_trace(std::ostream& os, const TraceHeader& header, const std::vector<bench::StepRecord>& trace);

struct Trace {
  TraceHeader header;
  std::vector<bench::StepRecord> steps;
};

/// Reads every trace in a JSON-lines stream (several episodes may be concatenated).
std::vector<Trace> read_traces(std::istream& is);

/// SVG: occupancy, teach path, executed path coloured by controller mode,
/// start and goal markers.
void write_plot(std::ostream& os, const sim::World& world, const bench::Episode& episode, InstanceId goal,
                const std::vector<bench::StepRecord>& trace);

}  // namespace tango::io
