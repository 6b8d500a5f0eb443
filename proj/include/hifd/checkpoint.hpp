#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "hifd/detect.hpp"

namespace hifd {

// Trained scorer on disk: a fixed magic, a json header describing shapes and
// provenance, then one float64 little-endian payload. Round trips are bit
// exact for identical inputs.
struct Checkpoint {
  DetectorKind kind = DetectorKind::Picae;
  NodeId node = 0;
  std::size_t input_len = 0;
  std::uint64_t seed = 0;
  std::uint64_t config_fingerprint = 0;
  double reg_weight = 0.0;
  double epsilon_bar = 0.0;      // mean training error of the scorer
  double max_train_error = 0.0;  // worst training error of the scorer

  std::optional<cae::Model> model;  // picae / ae
  std::optional<PcaModel> pca;      // pca
  ellipse::Conic trajectory;        // picae / ae / er; zeros for pca
};

void save_checkpoint(const std::string& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::string& path);

// Rebuilds the scorer the checkpoint describes.
std::shared_ptr<const Scorer> scorer_from_checkpoint(const Checkpoint& c);

// Calibrated detector on disk: a json file holding the thresholds plus a
// reference to the checkpoint it was calibrated from. A relative checkpoint
// path is resolved against the state file's directory on load.
struct StateFile {
  DetectorState state;
  DetectorKind kind = DetectorKind::Picae;
  std::string checkpoint_path;
  std::uint64_t seed = 0;
  std::uint64_t config_fingerprint = 0;
  double safety = 1.0;
  double margin = 1.1;
};

void save_detector_state(const std::string& path, const StateFile& sf);
StateFile load_detector_state(const std::string& path);

}  // namespace hifd
