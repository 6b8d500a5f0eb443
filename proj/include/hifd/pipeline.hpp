#pragma once

#include <span>
#include <vector>

#include "hifd/checkpoint.hpp"
#include "hifd/dataset.hpp"
#include "hifd/detect.hpp"
#include "hifd/train.hpp"

namespace hifd {

// Evaluation protocol: the noisiest grid cell uses a heavier trajectory
// penalty; every other cell trains at the standard weight.
double reg_weight_for_snr(double snr_db);

struct DetectorBuild {
  Checkpoint checkpoint;
  TrainReport report;  // loss curve populated for reconstruction detectors
};

// Trains or fits one scorer on a node's training windows and packages it.
DetectorBuild build_detector(DetectorKind kind, NodeId node,
                             const std::vector<Window>& node_train, const TrainConfig& tc,
                             double pca_energy = 0.99);

// Thresholds from a checkpoint's training statistics plus validation faults.
DetectorState calibrate_detector(const Checkpoint& ck,
                                 const std::vector<Window>& node_validation_hif,
                                 double safety = 1.0, double margin = 1.1);

struct BenchmarkOutcome {
  DetectorState state;
  TrainReport report;
  std::vector<Verdict> verdicts;
  std::vector<Label> labels;
  MetricsReport metrics;
};

// Single-node train/calibrate/detect/evaluate flow on a generated dataset.
BenchmarkOutcome run_benchmark(const Dataset& ds, DetectorKind kind, NodeId node,
                               const TrainConfig& tc, double pca_energy = 0.99,
                               double safety = 1.0, double margin = 1.1);

// One detector per requested node, each trained with a node-derived seed.
std::vector<DetectorState> build_states_for_nodes(const Dataset& ds, DetectorKind kind,
                                                  std::span<const NodeId> nodes,
                                                  const TrainConfig& base, double pca_energy = 0.99,
                                                  double safety = 1.0, double margin = 1.1);

struct FusionOutcome {
  std::vector<Verdict> fused;  // one system verdict per test event, index order
  std::vector<Label> labels;
  MetricsReport metrics;
};

// Scores every test event at each state's node and fuses per window index.
FusionOutcome run_fusion(const Dataset& ds, std::span<const DetectorState> states);

}  // namespace hifd
