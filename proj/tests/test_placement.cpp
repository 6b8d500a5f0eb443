#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "doctest.h"
#include "hifd/errors.hpp"
#include "hifd/fixtures.hpp"
#include "hifd/placement.hpp"
#include "hifd/rng.hpp"
#include "hifd/simulate.hpp"

using namespace hifd;

namespace {

constexpr double kPi = std::numbers::pi;

// Hand-built matrix over ids 0..m-1 from weighted edges (i, j, angle).
DissimilarityMatrix matrix_from_edges(
    std::size_t m, const std::vector<std::tuple<std::size_t, std::size_t, double>>& edges) {
  DissimilarityMatrix d;
  d.nodes.resize(m);
  std::iota(d.nodes.begin(), d.nodes.end(), 0u);
  d.delta.assign(m * m, 0.0);
  d.adj.assign(m, {});
  for (const auto& [i, j, w] : edges) {
    d.delta[i * m + j] = w;
    d.delta[j * m + i] = w;
    d.adj[i].push_back(j);
    d.adj[j].push_back(i);
  }
  for (auto& list : d.adj) std::sort(list.begin(), list.end());
  d.validate();
  return d;
}

DissimilarityMatrix random_graph(Rng& rng, std::size_t max_nodes = 12) {
  const std::size_t m = 2 + rng.uniform_index(max_nodes - 1);
  std::vector<std::tuple<std::size_t, std::size_t, double>> edges;
  std::vector<bool> linked(m * m, false);
  auto add = [&](std::size_t a, std::size_t b) {
    edges.emplace_back(a, b, rng.uniform(0.05, kPi - 0.05));
    linked[a * m + b] = linked[b * m + a] = true;
  };
  for (std::size_t i = 1; i < m; ++i) add(i, rng.uniform_index(i));  // spanning tree
  const std::size_t extra = rng.uniform_index(m);
  for (std::size_t e = 0; e < extra; ++e) {
    const std::size_t a = rng.uniform_index(m);
    const std::size_t b = rng.uniform_index(m);
    if (a == b || linked[a * m + b]) continue;
    add(a, b);
  }
  return matrix_from_edges(m, edges);
}

bool is_independent(const DissimilarityMatrix& d, const std::vector<NodeId>& picks) {
  auto index_of = [&](NodeId n) {
    return static_cast<std::size_t>(
        std::lower_bound(d.nodes.begin(), d.nodes.end(), n) - d.nodes.begin());
  };
  for (std::size_t x = 0; x < picks.size(); ++x)
    for (std::size_t y = x + 1; y < picks.size(); ++y) {
      const std::size_t i = index_of(picks[x]);
      const std::size_t j = index_of(picks[y]);
      if (std::find(d.adj[i].begin(), d.adj[i].end(), j) != d.adj[i].end()) return false;
    }
  return true;
}

}  // namespace

TEST_CASE("signal angles behave like angles") {
  const std::vector<double> a{1.0, 0.0, 2.0};
  const std::vector<double> a_scaled{3.0, 0.0, 6.0};
  const std::vector<double> neg{-1.0, 0.0, -2.0};
  CHECK(subspace_angle(a, a) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(subspace_angle(a, a_scaled) == doctest::Approx(0.0).epsilon(1e-7));
  CHECK(subspace_angle(a, neg) == doctest::Approx(kPi).epsilon(1e-9));

  const std::vector<double> x{1.0, 0.0};
  const std::vector<double> y{0.0, 1.0};
  CHECK(subspace_angle(x, y) == doctest::Approx(kPi / 2.0).epsilon(1e-12));

  // Symmetry and range on random inputs.
  Rng rng(91);
  for (int it = 0; it < 100; ++it) {
    std::vector<double> u(8), v(8);
    for (auto& q : u) q = rng.uniform(-1.0, 1.0);
    for (auto& q : v) q = rng.uniform(-1.0, 1.0);
    const double uv = subspace_angle(u, v);
    REQUIRE(uv >= 0.0);
    REQUIRE(uv <= kPi);
    REQUIRE(uv == doctest::Approx(subspace_angle(v, u)).epsilon(1e-12));
  }

  const std::vector<double> zero{0.0, 0.0};
  CHECK_THROWS_AS((void)subspace_angle(zero, y), DegeneracyError);
  CHECK_THROWS_AS((void)subspace_angle(x, a), ShapeError);
  CHECK_THROWS_AS((void)subspace_angle({}, {}), ShapeError);
}

TEST_CASE("matrix validation enforces the structural rules") {
  auto d = matrix_from_edges(3, {{0, 1, 0.3}, {1, 2, 0.5}});
  CHECK_NOTHROW(d.validate());
  CHECK(d.row_sum(0) == doctest::Approx(0.3));
  CHECK(d.row_sum(1) == doctest::Approx(0.8));
  CHECK(d.row_sum(2) == doctest::Approx(0.5));

  auto broken = d;
  broken.delta[0 * 3 + 1] = 0.9;  // asymmetric
  CHECK_THROWS_AS(broken.validate(), ParameterError);
  broken = d;
  broken.delta[0 * 3 + 0] = 0.1;  // diagonal
  CHECK_THROWS_AS(broken.validate(), ParameterError);
  broken = d;
  broken.delta[0 * 3 + 2] = broken.delta[2 * 3 + 0] = 0.2;  // non-adjacent pair
  CHECK_THROWS_AS(broken.validate(), ParameterError);
  broken = d;
  broken.nodes = {2, 1, 0};
  CHECK_THROWS_AS(broken.validate(), ParameterError);
  broken = d;
  broken.delta[0 * 3 + 1] = broken.delta[1 * 3 + 0] = 4.0;  // beyond pi
  CHECK_THROWS_AS(broken.validate(), ParameterError);
}

TEST_CASE("matrix construction measures angles only across edges") {
  const std::vector<NodeId> nodes{4, 2, 3};  // deliberately unsorted
  const std::vector<std::vector<double>> volts{
      {0.0, 1.0},  // node 4
      {1.0, 0.0},  // node 2
      {1.0, 1.0},  // node 3
  };
  const std::vector<std::pair<NodeId, NodeId>> edges{{2, 3}, {3, 4}};
  const auto d = build_dissimilarity(nodes, volts, edges);

  CHECK(d.nodes == std::vector<NodeId>{2, 3, 4});
  CHECK(d.at(0, 1) == doctest::Approx(kPi / 4.0).epsilon(1e-12));  // (1,0) vs (1,1)
  CHECK(d.at(1, 2) == doctest::Approx(kPi / 4.0).epsilon(1e-12));  // (1,1) vs (0,1)
  CHECK(d.at(0, 2) == 0.0);  // nodes 2 and 4 share no edge
  CHECK(d.adj[0] == std::vector<std::size_t>{1});
  CHECK(d.adj[1] == (std::vector<std::size_t>{0, 2}));
  CHECK(d.adj[2] == std::vector<std::size_t>{1});

  CHECK_THROWS_AS((void)build_dissimilarity(nodes, {volts[0]}, edges), ShapeError);
  CHECK_THROWS_AS((void)build_dissimilarity(nodes, volts, {{2, 2}}), TopologyError);
  CHECK_THROWS_AS((void)build_dissimilarity(nodes, volts, {{2, 9}}), TopologyError);
  CHECK_THROWS_AS((void)build_dissimilarity({2, 2, 3}, volts, edges), ParameterError);
}

TEST_CASE("greedy takes the star center and stops when everything is covered") {
  // Center 0 linked to three leaves: picking it zeroes the whole graph, so a
  // budget of two still yields a single sensor.
  const auto d = matrix_from_edges(4, {{0, 1, 0.4}, {0, 2, 0.4}, {0, 3, 0.4}});
  const auto r = greedy_place(d, 2);
  CHECK(r.selected == std::vector<NodeId>{0});
  CHECK(r.total_dissimilarity == doctest::Approx(1.2));
  CHECK(r.pick_scores == std::vector<double>{r.total_dissimilarity});
}

TEST_CASE("greedy on the three-node path picks the middle") {
  const auto d = matrix_from_edges(3, {{0, 1, 0.3}, {1, 2, 0.5}});
  const auto r = greedy_place(d, 2);
  CHECK(r.selected == std::vector<NodeId>{1});
  CHECK(r.total_dissimilarity == doctest::Approx(0.8));

  // The ends together tie the middle; the exhaustive search prefers the
  // lexicographically smaller set at equal value.
  const auto b = brute_force_place(d, 2);
  CHECK(b.total_dissimilarity == doctest::Approx(0.8));
  CHECK(b.selected == std::vector<NodeId>{0, 2});
}

TEST_CASE("greedy breaks ties toward the lowest node id") {
  const auto d = matrix_from_edges(4, {{0, 1, 0.5}, {2, 3, 0.5}});
  const auto r = greedy_place(d, 2);
  CHECK(r.selected == std::vector<NodeId>{0, 2});
  CHECK(r.total_dissimilarity == doctest::Approx(1.0));
  CHECK(r.pick_scores == (std::vector<double>{0.5, 0.5}));

  // With every edge disjoint the greedy cover equals the optimum.
  const auto b = brute_force_place(d, 2);
  CHECK(b.total_dissimilarity == doctest::Approx(r.total_dissimilarity));
}

TEST_CASE("an empty matrix yields an empty placement") {
  DissimilarityMatrix d;
  d.nodes = {1, 2};
  d.delta.assign(4, 0.0);
  d.adj.assign(2, {});
  const auto r = greedy_place(d, 2);
  CHECK(r.selected.empty());
  CHECK(r.total_dissimilarity == 0.0);
  CHECK_THROWS_AS((void)greedy_place(d, 0), ParameterError);
}

TEST_CASE("exhaustive search is exact on small cases and bounded in size") {
  const auto single = matrix_from_edges(2, {{0, 1, 0.7}});
  const auto b1 = brute_force_place(single, 1);
  CHECK(b1.selected == std::vector<NodeId>{0});
  CHECK(b1.total_dissimilarity == doctest::Approx(0.7));
  // Both endpoints are adjacent, so a bigger budget changes nothing.
  CHECK(brute_force_place(single, 2).selected == std::vector<NodeId>{0});

  DissimilarityMatrix big;
  big.nodes.resize(21);
  std::iota(big.nodes.begin(), big.nodes.end(), 0u);
  big.delta.assign(21 * 21, 0.0);
  big.adj.assign(21, {});
  CHECK_THROWS_AS((void)brute_force_place(big, 2), ParameterError);
  CHECK_THROWS_AS((void)brute_force_place(single, 0), ParameterError);
}

TEST_CASE("greedy placement properties hold on random graphs") {
  Rng rng(93);
  for (int it = 0; it < 100; ++it) {
    const auto d = random_graph(rng);
    const std::size_t k = 1 + rng.uniform_index(d.size());
    const auto g = greedy_place(d, k);
    const auto b = brute_force_place(d, k);

    REQUIRE(g.selected.size() <= k);
    REQUIRE(is_independent(d, g.selected));
    REQUIRE(is_independent(d, b.selected));

    // Pick values never increase, and the reported total is the sum of the
    // initial row sums of the selection.
    for (std::size_t i = 1; i < g.pick_scores.size(); ++i)
      REQUIRE(g.pick_scores[i] <= g.pick_scores[i - 1] + 1e-12);
    double total = 0.0;
    for (NodeId s : g.selected) total += d.row_sum(s);
    REQUIRE(g.total_dissimilarity == doctest::Approx(total).epsilon(1e-12));

    // The oracle can only do better, and greedy stays within half of it.
    REQUIRE(b.total_dissimilarity >= g.total_dissimilarity - 1e-12);
    REQUIRE(g.total_dissimilarity >= 0.5 * b.total_dissimilarity - 1e-12);
  }
}

TEST_CASE("training-corpus candidates follow the feeder edges") {
  const FeederModel f = default_feeder();
  std::vector<Window> train;
  // Two windows for node 1 (the mean is their average), one each for 2 and 3.
  auto push = [&](NodeId node, std::vector<double> v) {
    Window w;
    w.node = node;
    w.voltage = std::move(v);
    w.current.assign(w.voltage.size(), 0.0);
    w.fs = 7680.0;
    train.push_back(std::move(w));
  };
  push(1, {1.0, 0.0});
  push(1, {0.0, 1.0});
  push(2, {1.0, 0.0});
  push(3, {0.0, 1.0});

  const auto d = dissimilarity_from_training(f, train);
  CHECK(d.nodes == std::vector<NodeId>{1, 2, 3});
  // Mean of node 1 is (0.5, 0.5): 45 degrees to both neighbors.
  CHECK(d.at(0, 1) == doctest::Approx(kPi / 4.0).epsilon(1e-12));
  CHECK(d.at(1, 2) == doctest::Approx(kPi / 2.0).epsilon(1e-12));
  CHECK(d.at(0, 2) == 0.0);  // nodes 1 and 3 are not feeder-adjacent

  std::vector<Window> missing = {train[0], train[2]};
  CHECK_THROWS_AS((void)dissimilarity_from_training(f, missing), ParameterError);
  push(2, {1.0, 0.0, 0.0});
  CHECK_THROWS_AS((void)dissimilarity_from_training(f, train), ShapeError);
}

TEST_CASE("placement serialization sorts the set and keeps the pick order") {
  PlacementResult r;
  r.selected = {3, 1};
  r.total_dissimilarity = 2.5;
  r.pick_scores = {1.5, 1.0};
  const std::string j = placement_to_json(r);
  CHECK(j.find("\"selected\": [\n    1,\n    3\n  ]") != std::string::npos);
  CHECK(j.find("\"order\": [\n    3,\n    1\n  ]") != std::string::npos);
  CHECK(j.find("\"total_dissimilarity\": 2.5") != std::string::npos);
}
