#include "hifd/feeder.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <set>

#include "hifd/errors.hpp"

namespace hifd {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Tree {
  std::vector<NodeId> order;              // ascending ids
  std::map<NodeId, std::size_t> index;    // id -> position in order
  std::vector<int> parent;                // -1 for source
  std::vector<const Line*> upstream;      // line into node, null for source
  std::vector<std::vector<std::size_t>> children;
  std::vector<std::size_t> topo;          // source first, parents before children
};

Tree build_tree(const FeederModel& feeder) {
  Tree t;
  t.order = feeder.nodes;
  std::sort(t.order.begin(), t.order.end());
  if (std::adjacent_find(t.order.begin(), t.order.end()) != t.order.end())
    throw TopologyError("duplicate node id");
  for (std::size_t i = 0; i < t.order.size(); ++i) t.index[t.order[i]] = i;

  if (t.index.find(feeder.source.node) == t.index.end())
    throw TopologyError("source node not in node list");

  const std::size_t n = t.order.size();
  t.parent.assign(n, -1);
  t.upstream.assign(n, nullptr);
  t.children.assign(n, {});

  // Adjacency from the line list; orientation in the file is not trusted.
  std::vector<std::vector<std::pair<std::size_t, const Line*>>> adj(n);
  for (const Line& line : feeder.lines) {
    auto a = t.index.find(line.from);
    auto b = t.index.find(line.to);
    if (a == t.index.end() || b == t.index.end())
      throw TopologyError("line endpoint not in node list");
    adj[a->second].push_back({b->second, &line});
    adj[b->second].push_back({a->second, &line});
  }

  // BFS from the source; a radial feeder must reach every node exactly once.
  std::vector<char> seen(n, 0);
  std::vector<std::size_t> queue{t.index.at(feeder.source.node)};
  seen[queue[0]] = 1;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    std::size_t u = queue[head];
    t.topo.push_back(u);
    for (auto [v, line] : adj[u]) {
      if (seen[v]) {
        if (static_cast<int>(u) != t.parent[v] && t.parent[u] != static_cast<int>(v))
          throw TopologyError("feeder graph contains a cycle");
        continue;
      }
      seen[v] = 1;
      t.parent[v] = static_cast<int>(u);
      t.upstream[v] = line;
      t.children[u].push_back(v);
      queue.push_back(v);
    }
  }
  if (queue.size() != n) throw TopologyError("feeder graph is not connected");
  if (feeder.lines.size() != n - 1)
    throw TopologyError("radial feeder requires exactly nodes-1 lines");
  return t;
}

}  // namespace

void validate(const FeederModel& feeder) {
  if (feeder.nodes.empty()) throw TopologyError("feeder has no nodes");
  for (const Line& line : feeder.lines) {
    if (!(line.resistance > 0.0))
      throw ParameterError("line resistance must be positive");
    if (!(line.inductance >= 0.0))
      throw ParameterError("line inductance must be non-negative");
  }
  if (!(feeder.source.voltage_rms > 0.0))
    throw ParameterError("source voltage must be positive");
  if (!(feeder.source.frequency > 0.0))
    throw ParameterError("source frequency must be positive");
  for (const auto& [node, load] : feeder.loads) {
    (void)load;
    if (std::find(feeder.nodes.begin(), feeder.nodes.end(), node) ==
        feeder.nodes.end())
      throw TopologyError("load attached to unknown node");
  }
  build_tree(feeder);
}

std::vector<NodeId> measured_nodes(const FeederModel& feeder) {
  std::vector<NodeId> out = feeder.nodes;
  std::sort(out.begin(), out.end());
  out.erase(std::remove(out.begin(), out.end(), feeder.source.node), out.end());
  return out;
}

std::vector<NodeId> path_to_source(const FeederModel& feeder, NodeId node) {
  Tree t = build_tree(feeder);
  auto it = t.index.find(node);
  if (it == t.index.end()) throw TopologyError("unknown node");
  std::vector<NodeId> path;
  for (int u = static_cast<int>(it->second); u != -1;
       u = t.parent[static_cast<std::size_t>(u)])
    path.push_back(t.order[static_cast<std::size_t>(u)]);
  return path;
}

std::pair<double, double> shared_path_impedance(const FeederModel& feeder,
                                                NodeId a, NodeId b) {
  Tree t = build_tree(feeder);
  auto ia = t.index.find(a);
  auto ib = t.index.find(b);
  if (ia == t.index.end() || ib == t.index.end())
    throw TopologyError("unknown node");

  auto upstream_chain = [&](std::size_t u) {
    std::set<const Line*> lines;
    int v = static_cast<int>(u);
    while (t.upstream[static_cast<std::size_t>(v)] != nullptr) {
      lines.insert(t.upstream[static_cast<std::size_t>(v)]);
      v = t.parent[static_cast<std::size_t>(v)];
    }
    return lines;
  };

  std::set<const Line*> pa = upstream_chain(ia->second);
  std::set<const Line*> pb = upstream_chain(ib->second);
  double r = 0.0, l = 0.0;
  for (const Line* line : pa) {
    if (pb.count(line)) {
      r += line->resistance;
      l += line->inductance;
    }
  }
  return {r, l};
}

bool upstream_line_feeds(const FeederModel& feeder, NodeId node, NodeId target) {
  if (node == feeder.source.node) return false;
  std::vector<NodeId> chain = path_to_source(feeder, target);
  return std::find(chain.begin(), chain.end(), node) != chain.end();
}

std::complex<double> SteadyState::voltage_at(NodeId node) const {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), node);
  if (it == nodes.end() || *it != node) throw TopologyError("unknown node");
  return node_voltage[static_cast<std::size_t>(it - nodes.begin())];
}

std::complex<double> SteadyState::current_at(NodeId node) const {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), node);
  if (it == nodes.end() || *it != node) throw TopologyError("unknown node");
  return line_current[static_cast<std::size_t>(it - nodes.begin())];
}

SteadyState solve_steady_state(const FeederModel& feeder) {
  validate(feeder);
  Tree t = build_tree(feeder);
  const std::size_t n = t.order.size();
  const double omega = 2.0 * kPi * feeder.source.frequency;
  const std::complex<double> v_src(feeder.source.voltage_rms, 0.0);

  std::vector<std::complex<double>> demand(n, 0.0);
  for (const auto& [node, load] : feeder.loads)
    demand[t.index.at(node)] = {load.active_power, load.reactive_power};

  std::vector<std::complex<double>> voltage(n, v_src);
  std::vector<std::complex<double>> branch(n, 0.0);

  const int max_iterations = 100;
  const double tolerance = 1e-9;
  int iter = 0;
  for (; iter < max_iterations; ++iter) {
    // Constant-power loads evaluated at the present voltage estimate.
    std::vector<std::complex<double>> inj(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (demand[i] != std::complex<double>(0.0, 0.0)) {
        if (std::abs(voltage[i]) < 1e-6 * feeder.source.voltage_rms)
          throw SolverError("steady state: voltage collapse during sweep");
        inj[i] = std::conj(demand[i] / voltage[i]);
      }
    }
    // Backward: accumulate branch currents from the leaves up.
    std::fill(branch.begin(), branch.end(), std::complex<double>(0.0, 0.0));
    for (auto it2 = t.topo.rbegin(); it2 != t.topo.rend(); ++it2) {
      std::size_t u = *it2;
      branch[u] += inj[u];
      if (t.parent[u] != -1) branch[static_cast<std::size_t>(t.parent[u])] += branch[u];
    }
    // Forward: drop voltages from the source down.
    double shift = 0.0;
    for (std::size_t u : t.topo) {
      std::complex<double> v_new;
      if (t.parent[u] == -1) {
        v_new = v_src;
      } else {
        const Line* line = t.upstream[u];
        const std::complex<double> z(line->resistance, omega * line->inductance);
        v_new = voltage[static_cast<std::size_t>(t.parent[u])] - z * branch[u];
      }
      shift = std::max(shift, std::abs(v_new - voltage[u]));
      voltage[u] = v_new;
    }
    if (shift / feeder.source.voltage_rms < tolerance) break;
  }
  if (iter == max_iterations)
    throw SolverError("steady state: no fixed point after 100 iterations");

  SteadyState out;
  out.nodes = t.order;
  out.node_voltage = std::move(voltage);
  out.line_current = std::move(branch);
  out.frequency = feeder.source.frequency;
  out.iterations = iter + 1;
  return out;
}

Phasor steady_state(const FeederModel& feeder, NodeId node) {
  SteadyState ss = solve_steady_state(feeder);
  const std::complex<double> v = ss.voltage_at(node);
  const std::complex<double> c = ss.current_at(node);
  if (std::abs(c) == 0.0)
    throw DegeneracyError("steady_state: node carries no current");

  Phasor p;
  p.v_amp = std::sqrt(2.0) * std::abs(v);
  p.c_amp = std::sqrt(2.0) * std::abs(c);
  double lag = std::arg(v) - std::arg(c);
  if (lag <= -kPi) lag += 2.0 * kPi;
  if (lag > kPi) lag -= 2.0 * kPi;
  p.phase_lag = lag;
  validate(p);
  return p;
}

namespace {

using nlohmann::json;

}  // namespace

std::string feeder_to_json(const FeederModel& feeder) {
  json lines = json::array();
  for (const Line& line : feeder.lines)
    lines.push_back({{"from", line.from},
                     {"to", line.to},
                     {"resistance_ohm", line.resistance},
                     {"inductance_h", line.inductance}});
  json loads = json::array();
  for (const auto& [node, load] : feeder.loads)
    loads.push_back({{"node", node},
                     {"active_w", load.active_power},
                     {"reactive_var", load.reactive_power}});
  json doc = {{"nodes", feeder.nodes},
              {"lines", lines},
              {"loads", loads},
              {"source",
               {{"node", feeder.source.node},
                {"voltage_rms", feeder.source.voltage_rms},
                {"frequency_hz", feeder.source.frequency}}}};
  return doc.dump(2);
}

FeederModel feeder_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(std::string("feeder json: ") + e.what());
  }
  FeederModel feeder;
  try {
    feeder.nodes = doc.at("nodes").get<std::vector<NodeId>>();
    for (const auto& j : doc.at("lines")) {
      Line line;
      line.from = j.at("from").get<NodeId>();
      line.to = j.at("to").get<NodeId>();
      line.resistance = j.at("resistance_ohm").get<double>();
      line.inductance = j.at("inductance_h").get<double>();
      feeder.lines.push_back(line);
    }
    for (const auto& j : doc.at("loads")) {
      Load load;
      load.active_power = j.at("active_w").get<double>();
      load.reactive_power = j.at("reactive_var").get<double>();
      feeder.loads[j.at("node").get<NodeId>()] = load;
    }
    const auto& s = doc.at("source");
    feeder.source.node = s.at("node").get<NodeId>();
    feeder.source.voltage_rms = s.at("voltage_rms").get<double>();
    feeder.source.frequency = s.at("frequency_hz").get<double>();
  } catch (const json::exception& e) {
    throw IoError(std::string("feeder json: ") + e.what());
  }
  validate(feeder);
  return feeder;
}

}  // namespace hifd
