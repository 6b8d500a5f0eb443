#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hifd/errors.hpp"
#include "hifd/feeder.hpp"

namespace hifd {

enum class Label : std::uint8_t {
  Normal = 0,
  Hif = 1,
  CapacitorSwitch = 2,
  LoadSwitch = 3,
};

inline const char* label_name(Label l) {
  switch (l) {
    case Label::Normal: return "normal";
    case Label::Hif: return "hif";
    case Label::CapacitorSwitch: return "capacitor_switch";
    case Label::LoadSwitch: return "load_switch";
  }
  throw ParameterError("unknown label value");
}

inline Label label_from_name(const std::string& s) {
  if (s == "normal") return Label::Normal;
  if (s == "hif") return Label::Hif;
  if (s == "capacitor_switch") return Label::CapacitorSwitch;
  if (s == "load_switch") return Label::LoadSwitch;
  throw ParameterError("unknown label name: " + s);
}

// Affine map used to bring one channel into [-1, 1]: x -> (x - mid) / halfspan.
struct ChannelScaling {
  double mid = 0.0;
  double halfspan = 1.0;
};

// One fixed-length two-channel slice of a node's measurement stream.
struct Window {
  NodeId node = 0;
  std::vector<double> voltage;
  std::vector<double> current;
  double fs = 0.0;
  Label label = Label::Normal;
  std::uint64_t window_index = 0;
  std::optional<ChannelScaling> v_scale;
  std::optional<ChannelScaling> c_scale;

  std::size_t size() const { return voltage.size(); }
};

// Half-open sample range [begin, end) during which an event is active.
struct EventInterval {
  Label label = Label::Normal;
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct NodeStream {
  NodeId node = 0;
  std::vector<double> voltage;
  std::vector<double> current;
};

// Synchronized multi-node capture. Streams are kept sorted by node id.
struct StreamSet {
  double fs = 0.0;
  double base_freq = 0.0;
  std::vector<NodeStream> streams;
  std::vector<EventInterval> events;

  std::size_t length() const { return streams.empty() ? 0 : streams.front().voltage.size(); }

  const NodeStream& stream_for(NodeId node) const {
    for (const auto& s : streams)
      if (s.node == node) return s;
    throw ParameterError("no stream for node " + std::to_string(node));
  }
};

}  // namespace hifd
