#include "hifd/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hifd/errors.hpp"
#include "hifd/rng.hpp"

namespace hifd {

using nlohmann::json;

namespace {

constexpr const char* kTool = "hifd/1.0.0";

json range_to_json(const std::pair<double, double>& r) { return json::array({r.first, r.second}); }

std::pair<double, double> range_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 2)
    throw IoError(std::string("expected [lo, hi] for ") + what);
  return {j[0].get<double>(), j[1].get<double>()};
}

json snr_to_json(double snr_db) {
  if (std::isinf(snr_db) && snr_db > 0.0) return "inf";
  return snr_db;
}

double snr_from_json(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::infinity();
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
    throw IoError("snr_db must be a number or \"inf\"");
  }
  return j.get<double>();
}

}  // namespace

void DatasetConfig::validate() const {
  hifd::validate(feeder);
  hif.validate();
  if (!(fs > 2.0 * base_freq)) throw SamplingError("sample rate cannot carry the base frequency");
  if (window_len < 16) throw ParameterError("window length must be at least 16");
  if (stride == 0) throw ParameterError("stride must be positive");
  if (!(load_pf > 0.0 && load_pf <= 1.0)) throw ParameterError("power factor must lie in (0, 1]");
  if (!(load_jitter.first > 0.0 && load_jitter.second >= load_jitter.first))
    throw ParameterError("load jitter range must satisfy 0 < lo <= hi");
  if (!(cap_q_range.first > 0.0 && cap_q_range.second >= cap_q_range.first))
    throw ParameterError("capacitor size range must satisfy 0 < lo <= hi");
  if (!(cap_ring_gain >= 0.0) || !(cap_damping >= 0.0) || !(cap_ring_freq > 0.0))
    throw ParameterError("capacitor ring shape must have non-negative envelope and positive frequency");
  if (!(load_s_range.first > 0.0 && load_s_range.second >= load_s_range.first))
    throw ParameterError("load step range must satisfy 0 < lo <= hi");
  if (hif_nodes.empty()) throw ParameterError("at least one fault node is required");

  const auto ids = measured_nodes(feeder);
  auto measurable = [&](NodeId n) { return std::find(ids.begin(), ids.end(), n) != ids.end(); };
  if (!measurable(monitor_node)) throw TopologyError("monitor node is not measurable");
  if (!measurable(cap_node)) throw TopologyError("capacitor node is not measurable");
  if (!measurable(load_node)) throw TopologyError("load-switch node is not measurable");
  for (NodeId n : hif_nodes)
    if (!measurable(n)) throw TopologyError("fault node " + std::to_string(n) + " is not measurable");
}

std::string dataset_config_to_json(const DatasetConfig& cfg) {
  json j;
  j["schema_version"] = 1;
  j["feeder"] = json::parse(feeder_to_json(cfg.feeder));
  j["fs"] = cfg.fs;
  j["base_freq"] = cfg.base_freq;
  j["window_len"] = cfg.window_len;
  j["stride"] = cfg.stride;
  j["snr_db"] = snr_to_json(cfg.snr_db);
  j["seed"] = cfg.seed;
  j["monitor_node"] = cfg.monitor_node;
  j["hif_nodes"] = cfg.hif_nodes;
  j["cap_node"] = cfg.cap_node;
  j["load_node"] = cfg.load_node;
  j["hif"] = {
      {"rp_ohm", range_to_json(cfg.hif.rp_range)},
      {"rn_ohm", range_to_json(cfg.hif.rn_range)},
      {"vp_v", range_to_json(cfg.hif.vp_range)},
      {"vn_v", range_to_json(cfg.hif.vn_range)},
      {"redraw_hz", cfg.hif.resample_rate},
  };
  j["cap_q_var"] = range_to_json(cfg.cap_q_range);
  j["cap_ring"] = {{"gain", cfg.cap_ring_gain},
                   {"damping_per_s", cfg.cap_damping},
                   {"freq_hz", cfg.cap_ring_freq}};
  j["load_s_va"] = range_to_json(cfg.load_s_range);
  j["load_pf"] = cfg.load_pf;
  j["load_jitter"] = range_to_json(cfg.load_jitter);
  j["counts"] = {
      {"train_normal", cfg.train_normal}, {"val_hif", cfg.val_hif},
      {"test_normal", cfg.test_normal},   {"test_hif", cfg.test_hif},
      {"test_cap", cfg.test_cap},         {"test_load", cfg.test_load},
  };
  return j.dump(2);
}

DatasetConfig dataset_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(std::string("config parse failure: ") + e.what());
  }
  try {
    DatasetConfig cfg;
    if (j.contains("feeder")) cfg.feeder = feeder_from_json(j.at("feeder").dump());
    if (j.contains("fs")) cfg.fs = j.at("fs").get<double>();
    if (j.contains("base_freq")) cfg.base_freq = j.at("base_freq").get<double>();
    if (j.contains("window_len")) cfg.window_len = j.at("window_len").get<std::size_t>();
    if (j.contains("stride")) cfg.stride = j.at("stride").get<std::size_t>();
    if (j.contains("snr_db")) cfg.snr_db = snr_from_json(j.at("snr_db"));
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("monitor_node")) cfg.monitor_node = j.at("monitor_node").get<NodeId>();
    if (j.contains("hif_nodes")) cfg.hif_nodes = j.at("hif_nodes").get<std::vector<NodeId>>();
    if (j.contains("cap_node")) cfg.cap_node = j.at("cap_node").get<NodeId>();
    if (j.contains("load_node")) cfg.load_node = j.at("load_node").get<NodeId>();
    if (j.contains("hif")) {
      const json& h = j.at("hif");
      if (h.contains("rp_ohm")) cfg.hif.rp_range = range_from_json(h.at("rp_ohm"), "rp_ohm");
      if (h.contains("rn_ohm")) cfg.hif.rn_range = range_from_json(h.at("rn_ohm"), "rn_ohm");
      if (h.contains("vp_v")) cfg.hif.vp_range = range_from_json(h.at("vp_v"), "vp_v");
      if (h.contains("vn_v")) cfg.hif.vn_range = range_from_json(h.at("vn_v"), "vn_v");
      if (h.contains("redraw_hz")) cfg.hif.resample_rate = h.at("redraw_hz").get<double>();
    }
    if (j.contains("cap_q_var")) cfg.cap_q_range = range_from_json(j.at("cap_q_var"), "cap_q_var");
    if (j.contains("cap_ring")) {
      const json& r = j.at("cap_ring");
      if (r.contains("gain")) cfg.cap_ring_gain = r.at("gain").get<double>();
      if (r.contains("damping_per_s")) cfg.cap_damping = r.at("damping_per_s").get<double>();
      if (r.contains("freq_hz")) cfg.cap_ring_freq = r.at("freq_hz").get<double>();
    }
    if (j.contains("load_s_va")) cfg.load_s_range = range_from_json(j.at("load_s_va"), "load_s_va");
    if (j.contains("load_pf")) cfg.load_pf = j.at("load_pf").get<double>();
    if (j.contains("load_jitter")) cfg.load_jitter = range_from_json(j.at("load_jitter"), "load_jitter");
    if (j.contains("counts")) {
      const json& c = j.at("counts");
      if (c.contains("train_normal")) cfg.train_normal = c.at("train_normal").get<std::size_t>();
      if (c.contains("val_hif")) cfg.val_hif = c.at("val_hif").get<std::size_t>();
      if (c.contains("test_normal")) cfg.test_normal = c.at("test_normal").get<std::size_t>();
      if (c.contains("test_hif")) cfg.test_hif = c.at("test_hif").get<std::size_t>();
      if (c.contains("test_cap")) cfg.test_cap = c.at("test_cap").get<std::size_t>();
      if (c.contains("test_load")) cfg.test_load = c.at("test_load").get<std::size_t>();
    }
    return cfg;
  } catch (const json::exception& e) {
    throw IoError(std::string("config field failure: ") + e.what());
  }
}

std::uint64_t config_hash(const DatasetConfig& cfg) {
  const std::string text = dataset_config_to_json(cfg);
  return fnv1a(text.data(), text.size());
}

Dataset generate_dataset(const DatasetConfig& cfg) {
  cfg.validate();
  Dataset ds;
  ds.config = cfg;

  const auto ids = measured_nodes(cfg.feeder);
  std::uint64_t ordinal = 0;
  std::size_t hif_cursor = 0;

  auto make_event = [&](Label label, std::vector<Window>& sink) {
    const std::uint64_t ev_seed = derive_seed(cfg.seed, ordinal);
    Rng rng(ev_seed);
    const double phase0 = rng.uniform(0.0, 2.0 * std::numbers::pi);

    FeederModel f = cfg.feeder;
    for (auto& [node, load] : f.loads) {
      const double scale = rng.uniform(cfg.load_jitter.first, cfg.load_jitter.second);
      load.active_power *= scale;
      load.reactive_power *= scale;
    }

    EventRecord rec{ordinal, label, 0};
    StreamSet set;
    switch (label) {
      case Label::Normal:
        set = simulate_normal(f, cfg.fs, cfg.window_len, phase0);
        break;
      case Label::Hif: {
        rec.target = cfg.hif_nodes[hif_cursor % cfg.hif_nodes.size()];
        ++hif_cursor;
        const std::uint64_t arc_seed = rng.next_u64();
        set = inject_hif(f, rec.target, cfg.hif, cfg.fs, cfg.window_len, arc_seed, phase0);
        break;
      }
      case Label::CapacitorSwitch: {
        rec.target = cfg.cap_node;
        CapSwitchParams p;
        p.q_var = rng.uniform(cfg.cap_q_range.first, cfg.cap_q_range.second);
        p.ring_gain = cfg.cap_ring_gain;
        p.damping = cfg.cap_damping;
        p.ring_freq = cfg.cap_ring_freq;
        p.t_on = cfg.window_len / 4;
        set = inject_cap_switch(f, cfg.cap_node, p, cfg.fs, cfg.window_len, phase0);
        break;
      }
      case Label::LoadSwitch: {
        rec.target = cfg.load_node;
        const double s = rng.uniform(cfg.load_s_range.first, cfg.load_s_range.second);
        LoadSwitchParams p;
        p.delta_p = s * cfg.load_pf;
        p.delta_q = s * std::sqrt(1.0 - cfg.load_pf * cfg.load_pf);
        p.t_on = cfg.window_len / 4;
        set = inject_load_switch(f, cfg.load_node, p, cfg.fs, cfg.window_len, phase0);
        break;
      }
    }

    for (NodeId node : ids) {
      auto wins = windowize(set, node, cfg.window_len, cfg.window_len);
      Window w = std::move(wins.front());
      w.window_index = ordinal;
      add_noise(w, cfg.snr_db, derive_seed(ev_seed, 0x100 + node));
      normalize_range(w);
      sink.push_back(std::move(w));
    }
    ds.events.push_back(rec);
    ++ordinal;
  };

  for (std::size_t i = 0; i < cfg.train_normal; ++i) make_event(Label::Normal, ds.train);
  for (std::size_t i = 0; i < cfg.val_hif; ++i) make_event(Label::Hif, ds.validation);
  for (std::size_t i = 0; i < cfg.test_normal; ++i) make_event(Label::Normal, ds.test);
  for (std::size_t i = 0; i < cfg.test_hif; ++i) make_event(Label::Hif, ds.test);
  for (std::size_t i = 0; i < cfg.test_cap; ++i) make_event(Label::CapacitorSwitch, ds.test);
  for (std::size_t i = 0; i < cfg.test_load; ++i) make_event(Label::LoadSwitch, ds.test);
  return ds;
}

std::vector<Window> select_node(const std::vector<Window>& windows, NodeId node) {
  std::vector<Window> out;
  for (const auto& w : windows)
    if (w.node == node) out.push_back(w);
  return out;
}

namespace {

void write_f64_le(std::ofstream& f, const double* data, std::size_t n) {
  static_assert(sizeof(double) == 8);
  if constexpr (std::endian::native == std::endian::little) {
    f.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * 8));
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      auto bits = std::bit_cast<std::uint64_t>(data[i]);
      char buf[8];
      for (int b = 0; b < 8; ++b) buf[b] = static_cast<char>((bits >> (8 * b)) & 0xff);
      f.write(buf, 8);
    }
  }
}

void read_f64_le(std::ifstream& f, double* data, std::size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    f.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * 8));
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      char buf[8];
      f.read(buf, 8);
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b)
        bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[b])) << (8 * b);
      data[i] = std::bit_cast<double>(bits);
    }
  }
  if (!f) throw IoError("binary payload truncated");
}

}  // namespace

void save_split(const std::string& base, const std::vector<Window>& windows,
                const DatasetConfig& cfg, const std::string& split) {
  if (windows.empty()) throw ParameterError("refusing to save an empty split");
  const std::size_t len = windows.front().size();
  const double fs = windows.front().fs;
  for (const auto& w : windows) {
    if (w.size() != len) throw ShapeError("split windows must share one length");
    if (w.fs != fs) throw ShapeError("split windows must share one sample rate");
    if (!w.v_scale || !w.c_scale) throw ParameterError("split windows must be normalized");
  }

  json manifest;
  manifest["schema_version"] = 1;
  manifest["tool"] = kTool;
  manifest["split"] = split;
  manifest["seed"] = cfg.seed;
  manifest["fs"] = fs;
  manifest["base_freq"] = cfg.base_freq;
  manifest["window_len"] = len;
  manifest["stride"] = cfg.stride;
  manifest["snr_db"] = snr_to_json(cfg.snr_db);
  manifest["normalized"] = true;
  manifest["config_hash"] = config_hash(cfg);
  manifest["feeder"] = json::parse(feeder_to_json(cfg.feeder));

  std::map<std::string, std::size_t> counts;
  json rows = json::array();
  for (const auto& w : windows) {
    counts[label_name(w.label)] += 1;
    rows.push_back({
        {"index", w.window_index},
        {"node", w.node},
        {"label", label_name(w.label)},
        {"v_mid", w.v_scale->mid},
        {"v_halfspan", w.v_scale->halfspan},
        {"c_mid", w.c_scale->mid},
        {"c_halfspan", w.c_scale->halfspan},
    });
  }
  manifest["windows"] = rows;
  manifest["label_counts"] = counts;

  std::ofstream jf(base + ".json");
  if (!jf) throw IoError("cannot open " + base + ".json for writing");
  jf << manifest.dump(2) << '\n';
  if (!jf.flush()) throw IoError("short write on " + base + ".json");

  std::ofstream bf(base + ".bin", std::ios::binary);
  if (!bf) throw IoError("cannot open " + base + ".bin for writing");
  for (const auto& w : windows) {
    write_f64_le(bf, w.voltage.data(), len);
    write_f64_le(bf, w.current.data(), len);
  }
  if (!bf.flush()) throw IoError("short write on " + base + ".bin");
}

std::vector<Window> load_split(const std::string& base) {
  std::ifstream jf(base + ".json");
  if (!jf) throw IoError("cannot open " + base + ".json");
  json manifest;
  try {
    manifest = json::parse(jf);
  } catch (const json::exception& e) {
    throw IoError(std::string("manifest parse failure: ") + e.what());
  }

  try {
    const auto len = manifest.at("window_len").get<std::size_t>();
    const auto fs = manifest.at("fs").get<double>();
    const json& rows = manifest.at("windows");

    std::ifstream bf(base + ".bin", std::ios::binary);
    if (!bf) throw IoError("cannot open " + base + ".bin");
    bf.seekg(0, std::ios::end);
    const auto have = static_cast<std::size_t>(bf.tellg());
    const std::size_t want = rows.size() * 2 * len * 8;
    if (have != want)
      throw IoError("binary payload is " + std::to_string(have) + " bytes, manifest expects " +
                    std::to_string(want));
    bf.seekg(0, std::ios::beg);

    std::vector<Window> out;
    out.reserve(rows.size());
    for (const json& r : rows) {
      Window w;
      w.window_index = r.at("index").get<std::uint64_t>();
      w.node = r.at("node").get<NodeId>();
      w.label = label_from_name(r.at("label").get<std::string>());
      w.fs = fs;
      w.v_scale = ChannelScaling{r.at("v_mid").get<double>(), r.at("v_halfspan").get<double>()};
      w.c_scale = ChannelScaling{r.at("c_mid").get<double>(), r.at("c_halfspan").get<double>()};
      w.voltage.resize(len);
      w.current.resize(len);
      read_f64_le(bf, w.voltage.data(), len);
      read_f64_le(bf, w.current.data(), len);
      out.push_back(std::move(w));
    }
    return out;
  } catch (const json::exception& e) {
    throw IoError(std::string("manifest field failure: ") + e.what());
  }
}

void export_csv(const std::string& path, const std::vector<Window>& windows,
                const DatasetConfig& cfg) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << "# tool=" << kTool << " seed=" << cfg.seed << " config_hash=" << config_hash(cfg) << '\n';
  f << "window_index,node,label,sample,voltage,current\n";
  f.precision(17);
  for (const auto& w : windows)
    for (std::size_t k = 0; k < w.size(); ++k)
      f << w.window_index << ',' << w.node << ',' << label_name(w.label) << ',' << k << ','
        << w.voltage[k] << ',' << w.current[k] << '\n';
  if (!f.flush()) throw IoError("short write on " + path);
}

}  // namespace hifd
