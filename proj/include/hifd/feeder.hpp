#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hifd/phasor.hpp"

namespace hifd {

using NodeId = std::uint32_t;

/// Series line segment. `from` is the end nearer the source.
struct Line {
  NodeId from = 0;
  NodeId to = 0;
  double resistance = 0.0;  // ohm, > 0
  double inductance = 0.0;  // H, >= 0
};

struct SourceSpec {
  NodeId node = 0;
  double voltage_rms = 0.0;  // line-to-neutral, V
  double frequency = 0.0;    // Hz
};

struct Load {
  double active_power = 0.0;    // W
  double reactive_power = 0.0;  // var
};

/// Radial feeder: a connected tree of series R-L lines rooted at the source
/// node, with per-node complex power demand.
struct FeederModel {
  std::vector<NodeId> nodes;
  std::vector<Line> lines;
  SourceSpec source;
  std::map<NodeId, Load> loads;
};

/// Checks the type invariants; throws TopologyError or ParameterError.
void validate(const FeederModel& feeder);

/// All non-source nodes in ascending id order (the measurable set).
std::vector<NodeId> measured_nodes(const FeederModel& feeder);

/// Node ids on the path from `node` up to the source, inclusive of both.
std::vector<NodeId> path_to_source(const FeederModel& feeder, NodeId node);

/// Total (R, L) of the lines shared between the source->a and source->b paths.
std::pair<double, double> shared_path_impedance(const FeederModel& feeder,
                                                NodeId a, NodeId b);

/// True when the upstream line of `node` lies on the source->target path,
/// i.e. `node` is `target` or one of its ancestors (source excluded).
bool upstream_line_feeds(const FeederModel& feeder, NodeId node, NodeId target);

/// Full complex solution of the quasi-static power flow. Voltages are rms
/// line-to-neutral phasors referenced to the source angle; `line_current[i]`
/// is the rms current entering node i through its upstream line. For the
/// source node the entry holds the total injected current.
struct SteadyState {
  std::vector<NodeId> nodes;  // ascending id, source included
  std::vector<std::complex<double>> node_voltage;
  std::vector<std::complex<double>> line_current;
  double frequency = 0.0;
  int iterations = 0;

  std::complex<double> voltage_at(NodeId node) const;
  std::complex<double> current_at(NodeId node) const;
};

/// Backward/forward sweep to a fixed point (relative tolerance 1e-9, at most
/// 100 iterations). Throws SolverError on non-convergence or collapse.
SteadyState solve_steady_state(const FeederModel& feeder);

/// Operating point of one node: peak voltage, peak upstream-line current, and
/// current lag. Throws DegeneracyError when the node carries no current or
/// the lag falls outside (0, pi).
Phasor steady_state(const FeederModel& feeder, NodeId node);

/// JSON round trip for feeder descriptions.
std::string feeder_to_json(const FeederModel& feeder);
FeederModel feeder_from_json(const std::string& text);

}  // namespace hifd
