#pragma once

#include <span>
#include <utility>
#include <vector>

#include "hifd/feeder.hpp"
#include "hifd/window.hpp"

namespace hifd {

// Angle between two equal-length signal vectors: arccos of their normalized
// inner product, clamped into [-1, 1]. Throws DegeneracyError on zero norm.
double subspace_angle(std::span<const double> a, std::span<const double> b);

// Pairwise dissimilarity over candidate sensor sites. Entries are zero on the
// diagonal and for non-adjacent pairs; adjacency is the feeder edge set
// restricted to the candidates.
struct DissimilarityMatrix {
  std::vector<NodeId> nodes;                 // ascending
  std::vector<double> delta;                 // size() * size(), row-major
  std::vector<std::vector<std::size_t>> adj; // neighbor index lists

  std::size_t size() const { return nodes.size(); }
  double at(std::size_t i, std::size_t j) const { return delta[i * size() + j]; }

  // Full neighbor-row sum of one candidate (its static selection value).
  double row_sum(std::size_t i) const;

  void validate() const;
};

// Builds the matrix from one representative voltage vector per candidate.
// Edges are given in node ids; both endpoints must be candidates.
DissimilarityMatrix build_dissimilarity(const std::vector<NodeId>& nodes,
                                        const std::vector<std::vector<double>>& voltages,
                                        const std::vector<std::pair<NodeId, NodeId>>& edges);

// Candidate vectors from a training corpus: the mean voltage window per
// measured node; edges from the feeder lines between measured nodes.
DissimilarityMatrix dissimilarity_from_training(const FeederModel& feeder,
                                                const std::vector<Window>& train_windows);

struct PlacementResult {
  std::vector<NodeId> selected;     // in pick order
  double total_dissimilarity = 0.0; // sum of initial row sums over selected
  std::vector<double> pick_scores;  // value at pick time, non-increasing
};

// Greedy non-adjacent selection: repeatedly take the candidate with the
// largest remaining neighbor-sum, then zero it and its neighbors; stops at K
// picks or when every remaining value is zero. Ties go to the lowest node id.
PlacementResult greedy_place(const DissimilarityMatrix& d, std::size_t k);

// Exhaustive oracle over independent sets of size <= k (at most 20 nodes).
PlacementResult brute_force_place(const DissimilarityMatrix& d, std::size_t k);

// {selected, total_dissimilarity, order} serialization.
std::string placement_to_json(const PlacementResult& r);

}  // namespace hifd
