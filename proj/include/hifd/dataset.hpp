#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "hifd/feeder.hpp"
#include "hifd/simulate.hpp"
#include "hifd/window.hpp"

namespace hifd {

// Everything needed to regenerate a dataset bit for bit.
struct DatasetConfig {
  FeederModel feeder;
  double fs = 30720.0;
  double base_freq = 60.0;
  std::size_t window_len = 512;
  std::size_t stride = 128;
  double snr_db = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 1;

  NodeId monitor_node = 2;
  // Fault sites downstream of the monitored line, so the arc current flows
  // through the measured branch.
  std::vector<NodeId> hif_nodes{2, 3};
  NodeId cap_node = 3;
  NodeId load_node = 2;

  HifParams hif;
  std::pair<double, double> cap_q_range{5e5, 5e6};
  // Ring shape shared by all capacitor events; only q_var varies per event.
  double cap_ring_gain = CapSwitchParams{}.ring_gain;
  double cap_damping = CapSwitchParams{}.damping;
  double cap_ring_freq = CapSwitchParams{}.ring_freq;
  std::pair<double, double> load_s_range{3.5e5, 7e5};
  double load_pf = 0.9;
  std::pair<double, double> load_jitter{0.85, 1.15};

  std::size_t train_normal = 325;
  std::size_t val_hif = 10;
  std::size_t test_normal = 90;
  std::size_t test_hif = 100;
  std::size_t test_cap = 54;
  std::size_t test_load = 42;

  void validate() const;
};

std::string dataset_config_to_json(const DatasetConfig& cfg);
DatasetConfig dataset_config_from_json(const std::string& text);

// Stable fingerprint of the full configuration (canonical json, fnv-1a).
std::uint64_t config_hash(const DatasetConfig& cfg);

// One generated event: ordinal, what happened and where.
struct EventRecord {
  std::uint64_t index = 0;
  Label label = Label::Normal;
  NodeId target = 0;  // fault / switch location; unused for normal
};

struct Dataset {
  DatasetConfig config;
  std::vector<EventRecord> events;
  // Normalized windows, one per (event, measured node), event-major.
  std::vector<Window> train;
  std::vector<Window> validation;
  std::vector<Window> test;
};

// Deterministic synthesis of the full train/validation/test corpus. Each event
// occupies exactly one window; window_index equals the global event ordinal.
Dataset generate_dataset(const DatasetConfig& cfg);

// Windows with a matching node id, order preserved.
std::vector<Window> select_node(const std::vector<Window>& windows, NodeId node);

// Binary + manifest storage: `<base>.bin` holds float64 little-endian samples
// (voltage then current per window, manifest order), `<base>.json` describes
// them. Round trips are bit exact.
void save_split(const std::string& base, const std::vector<Window>& windows,
                const DatasetConfig& cfg, const std::string& split);
std::vector<Window> load_split(const std::string& base);

// Flat csv export (one row per sample) for external tooling.
void export_csv(const std::string& path, const std::vector<Window>& windows,
                const DatasetConfig& cfg);

}  // namespace hifd
