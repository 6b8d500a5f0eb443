#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hifd/cae.hpp"
#include "hifd/window.hpp"

namespace hifd {

struct TrainConfig {
  double lr = 1e-4;
  std::size_t batch = 12;
  std::size_t max_epochs = 1500;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t patience = 50;
  double min_delta = 1e-6;
  double reg_weight = 200.0;
  std::uint64_t seed = 7;

  void validate() const;
};

struct TrainReport {
  std::vector<double> loss_curve;    // mean batch loss per epoch
  double epsilon_bar = 0.0;          // mean reconstruction error over training windows
  double max_train_error = 0.0;      // largest reconstruction error seen in training
  std::size_t epochs_run = 0;
  std::uint64_t param_checksum = 0;  // fnv-1a over the final parameter bytes
};

struct TrainedDetectorCore {
  cae::Model model;
  ellipse::Conic trajectory;
  TrainReport report;
};

// Conic fitted to the pooled (voltage, current) rows of all windows; the
// regularization target representing normal operation.
ellipse::Conic pooled_trajectory(const std::vector<Window>& windows);

// One optimizer update with bias correction; step_index starts at 1.
void adam_step(std::span<double> params, std::span<const double> grads,
               std::span<double> m, std::span<double> v, std::size_t step_index,
               const TrainConfig& cfg);

// Full minibatch training run with early stopping on the epoch loss.
// Deterministic for a fixed config (shuffling and init derive from cfg.seed).
TrainedDetectorCore train_cae(const std::vector<Window>& windows, const TrainConfig& cfg);

}  // namespace hifd
