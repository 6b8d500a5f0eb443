#include "hifd/placement.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include <nlohmann/json.hpp>

#include "hifd/errors.hpp"

namespace hifd {

double subspace_angle(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty())
    throw ShapeError("angle needs two equal-length non-empty vectors");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (!(na > 0.0) || !(nb > 0.0)) throw DegeneracyError("zero-norm vector has no direction");
  const double cosine = std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
  return std::acos(cosine);
}

double DissimilarityMatrix::row_sum(std::size_t i) const {
  double s = 0.0;
  for (std::size_t j : adj[i]) s += at(i, j);
  return s;
}

void DissimilarityMatrix::validate() const {
  const std::size_t m = size();
  if (delta.size() != m * m || adj.size() != m)
    throw ShapeError("dissimilarity matrix storage is malformed");
  if (!std::is_sorted(nodes.begin(), nodes.end()) ||
      std::adjacent_find(nodes.begin(), nodes.end()) != nodes.end())
    throw ParameterError("candidate ids must be strictly ascending");
  for (std::size_t i = 0; i < m; ++i) {
    if (at(i, i) != 0.0) throw ParameterError("diagonal must be zero");
    for (std::size_t j = 0; j < m; ++j) {
      const double v = at(i, j);
      if (v != at(j, i)) throw ParameterError("dissimilarity must be symmetric");
      if (v < 0.0 || v > std::numbers::pi) throw ParameterError("angles must lie in [0, pi]");
      const bool adjacent = std::find(adj[i].begin(), adj[i].end(), j) != adj[i].end();
      if (!adjacent && v != 0.0) throw ParameterError("non-adjacent pairs must score zero");
    }
  }
}

DissimilarityMatrix build_dissimilarity(const std::vector<NodeId>& nodes,
                                        const std::vector<std::vector<double>>& voltages,
                                        const std::vector<std::pair<NodeId, NodeId>>& edges) {
  if (nodes.size() != voltages.size())
    throw ShapeError("one voltage vector per candidate is required");
  DissimilarityMatrix d;
  d.nodes = nodes;
  std::sort(d.nodes.begin(), d.nodes.end());
  if (std::adjacent_find(d.nodes.begin(), d.nodes.end()) != d.nodes.end())
    throw ParameterError("candidate ids must be unique");

  const std::size_t m = d.nodes.size();
  std::map<NodeId, std::size_t> index;
  for (std::size_t i = 0; i < m; ++i) index[d.nodes[i]] = i;

  // Reorder the vectors to match the sorted ids.
  std::vector<const std::vector<double>*> vec(m);
  for (std::size_t i = 0; i < nodes.size(); ++i) vec[index.at(nodes[i])] = &voltages[i];

  d.delta.assign(m * m, 0.0);
  d.adj.assign(m, {});
  for (const auto& [a, b] : edges) {
    if (a == b) throw TopologyError("self edges are not allowed");
    const auto ia = index.find(a), ib = index.find(b);
    if (ia == index.end() || ib == index.end())
      throw TopologyError("edge references a non-candidate node");
    const std::size_t i = ia->second, j = ib->second;
    const double angle = subspace_angle(*vec[i], *vec[j]);
    d.delta[i * m + j] = angle;
    d.delta[j * m + i] = angle;
    if (std::find(d.adj[i].begin(), d.adj[i].end(), j) == d.adj[i].end()) {
      d.adj[i].push_back(j);
      d.adj[j].push_back(i);
    }
  }
  for (auto& list : d.adj) std::sort(list.begin(), list.end());
  d.validate();
  return d;
}

DissimilarityMatrix dissimilarity_from_training(const FeederModel& feeder,
                                                const std::vector<Window>& train_windows) {
  const auto ids = measured_nodes(feeder);
  std::vector<std::vector<double>> means(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    std::size_t count = 0;
    for (const auto& w : train_windows) {
      if (w.node != ids[i]) continue;
      if (means[i].empty()) means[i].assign(w.size(), 0.0);
      if (w.size() != means[i].size())
        throw ShapeError("training windows must share one length per node");
      for (std::size_t k = 0; k < w.size(); ++k) means[i][k] += w.voltage[k];
      ++count;
    }
    if (count == 0)
      throw ParameterError("no training windows for node " + std::to_string(ids[i]));
    for (double& v : means[i]) v /= static_cast<double>(count);
  }

  std::vector<std::pair<NodeId, NodeId>> edges;
  for (const auto& line : feeder.lines)
    if (line.from != feeder.source.node && line.to != feeder.source.node)
      edges.emplace_back(line.from, line.to);
  return build_dissimilarity(ids, means, edges);
}

PlacementResult greedy_place(const DissimilarityMatrix& d, std::size_t k) {
  if (k == 0) throw ParameterError("sensor budget must be at least 1");
  d.validate();
  const std::size_t m = d.size();

  std::vector<double> value(m);
  std::vector<double> initial(m);
  for (std::size_t i = 0; i < m; ++i) value[i] = initial[i] = d.row_sum(i);

  PlacementResult out;
  while (out.selected.size() < k) {
    std::size_t best = m;
    for (std::size_t i = 0; i < m; ++i)
      if (value[i] > 0.0 && (best == m || value[i] > value[best])) best = i;
    if (best == m) break;  // everything zeroed: exhausted
    out.selected.push_back(d.nodes[best]);
    out.pick_scores.push_back(value[best]);
    out.total_dissimilarity += initial[best];
    value[best] = 0.0;
    for (std::size_t j : d.adj[best]) value[j] = 0.0;
  }
  return out;
}

PlacementResult brute_force_place(const DissimilarityMatrix& d, std::size_t k) {
  if (k == 0) throw ParameterError("sensor budget must be at least 1");
  d.validate();
  const std::size_t m = d.size();
  if (m > 20) throw ParameterError("exhaustive search is capped at 20 nodes");

  std::vector<double> initial(m);
  for (std::size_t i = 0; i < m; ++i) initial[i] = d.row_sum(i);

  std::vector<std::size_t> current, best_set;
  double best_total = 0.0;

  // Depth-first over independent subsets in ascending index order; the first
  // maximum found is the lexicographically smallest optimum.
  auto independent = [&](std::size_t cand) {
    for (std::size_t s : current)
      if (std::find(d.adj[cand].begin(), d.adj[cand].end(), s) != d.adj[cand].end()) return false;
    return true;
  };
  auto rec = [&](auto&& self, std::size_t start, double total) -> void {
    if (total > best_total) {
      best_total = total;
      best_set = current;
    }
    if (current.size() == k) return;
    for (std::size_t i = start; i < m; ++i) {
      if (!independent(i)) continue;
      current.push_back(i);
      self(self, i + 1, total + initial[i]);
      current.pop_back();
    }
  };
  rec(rec, 0, 0.0);

  PlacementResult out;
  out.total_dissimilarity = best_total;
  for (std::size_t i : best_set) {
    out.selected.push_back(d.nodes[i]);
    out.pick_scores.push_back(initial[i]);
  }
  return out;
}

std::string placement_to_json(const PlacementResult& r) {
  nlohmann::json j;
  std::vector<NodeId> sorted = r.selected;
  std::sort(sorted.begin(), sorted.end());
  j["selected"] = sorted;
  j["total_dissimilarity"] = r.total_dissimilarity;
  j["order"] = r.selected;
  return j.dump(2);
}

}  // namespace hifd
