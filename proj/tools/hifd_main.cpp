// hifd: synthesize feeder waveforms, train and calibrate detectors, score
// windows, sweep the evaluation grid, plan sensor placement, and emit plot
// files. Configuration comes from one JSON file plus flag overrides; flags
// win. Every output embeds tool version, seed, and config hash.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "hifd/checkpoint.hpp"
#include "hifd/dataset.hpp"
#include "hifd/detect.hpp"
#include "hifd/errors.hpp"
#include "hifd/fixtures.hpp"
#include "hifd/pipeline.hpp"
#include "hifd/placement.hpp"
#include "hifd/rng.hpp"
#include "hifd/train.hpp"

using json = nlohmann::json;
using namespace hifd;
namespace fs = std::filesystem;

namespace {

constexpr const char* kTool = "hifd/1.0.0";

// Files registered here are deleted if the command throws before release(),
// so failures never leave half-written outputs behind.
class OutputGuard {
 public:
  ~OutputGuard() {
    if (!armed_) return;
    for (const auto& p : paths_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  }
  void track(const fs::path& p) { paths_.push_back(p); }
  void release() { armed_ = false; }

 private:
  std::vector<fs::path> paths_;
  bool armed_ = true;
};

void write_text(OutputGuard& guard, const fs::path& path, const std::string& text) {
  guard.track(path);
  std::ofstream f(path, std::ios::binary);
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  f.flush();
  if (!f.good()) throw IoError("cannot write " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f.good()) throw IoError("cannot read " + path.string());
  std::ostringstream out;
  out << f.rdbuf();
  return out.str();
}

// ---------------------------------------------------------------------------
// Configuration file: one JSON object with optional sections. The "dataset"
// section is the exact object simulate writes back out; "train" mirrors
// TrainConfig; "sweep" overrides the evaluation grid.

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  json cfg;
  try {
    cfg = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw IoError(path + " is not valid configuration json: " + e.what());
  }
  if (!cfg.is_object()) throw IoError(path + " must hold a json object");
  return cfg;
}

DatasetConfig dataset_from(const json& cfg) {
  if (cfg.contains("dataset")) return dataset_config_from_json(cfg.at("dataset").dump());
  DatasetConfig dc;
  dc.feeder = default_feeder();
  return dc;
}

TrainConfig train_from(const json& cfg) {
  TrainConfig tc;
  if (!cfg.contains("train")) return tc;
  const json& t = cfg.at("train");
  tc.lr = t.value("lr", tc.lr);
  tc.batch = t.value("batch", tc.batch);
  tc.max_epochs = t.value("max_epochs", tc.max_epochs);
  tc.beta1 = t.value("beta1", tc.beta1);
  tc.beta2 = t.value("beta2", tc.beta2);
  tc.eps = t.value("eps", tc.eps);
  tc.patience = t.value("patience", tc.patience);
  tc.min_delta = t.value("min_delta", tc.min_delta);
  tc.reg_weight = t.value("reg_weight", tc.reg_weight);
  tc.seed = t.value("seed", tc.seed);
  return tc;
}

// Resolved dataset description as written by `simulate` and read back by the
// downstream subcommands.
json provenance(const DatasetConfig& dc) {
  json j;
  j["tool"] = kTool;
  j["seed"] = dc.seed;
  j["config_hash"] = config_hash(dc);
  return j;
}

DatasetConfig load_data_dir(const std::string& data_dir) {
  const fs::path p = fs::path(data_dir) / "dataset_config.json";
  json j;
  try {
    j = json::parse(read_text(p));
  } catch (const json::exception& e) {
    throw IoError(p.string() + " is not valid json: " + e.what());
  }
  if (j.contains("dataset")) return dataset_config_from_json(j.at("dataset").dump());
  return dataset_config_from_json(j.dump());
}

std::string csv_provenance(const DatasetConfig& dc) {
  std::ostringstream out;
  out << "# tool=" << kTool << " seed=" << dc.seed << " config_hash=" << config_hash(dc)
      << "\n";
  return out.str();
}

// Keeps window duration fixed when the window length changes: the default
// profile spans one base cycle per window and overrides preserve that.
void resize_windows(DatasetConfig& dc, std::size_t window_len) {
  dc.fs = dc.fs * static_cast<double>(window_len) / static_cast<double>(dc.window_len);
  dc.window_len = window_len;
  dc.stride = window_len;
}

std::string label_name_of(Label l) {
  switch (l) {
    case Label::Normal: return "normal";
    case Label::Hif: return "hif";
    case Label::CapacitorSwitch: return "capacitor_switch";
    case Label::LoadSwitch: return "load_switch";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// simulate: generate the corpus and persist all three splits.

struct SimulateOpts {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<double> snr_db;
  std::optional<std::size_t> window_len;
  bool csv = false;
};

int cmd_simulate(const SimulateOpts& o) {
  json cfg = load_config(o.config_path);
  DatasetConfig dc = dataset_from(cfg);
  if (o.seed) dc.seed = *o.seed;
  if (o.snr_db) dc.snr_db = *o.snr_db;
  if (o.window_len) resize_windows(dc, *o.window_len);
  dc.validate();

  fs::create_directories(o.out_dir);
  OutputGuard guard;
  const Dataset ds = generate_dataset(dc);

  json resolved = provenance(dc);
  resolved["dataset"] = json::parse(dataset_config_to_json(dc));
  write_text(guard, fs::path(o.out_dir) / "dataset_config.json", resolved.dump(2) + "\n");

  const auto base = fs::path(o.out_dir);
  guard.track(base / "train.bin");
  guard.track(base / "train.json");
  guard.track(base / "validation.bin");
  guard.track(base / "validation.json");
  guard.track(base / "test.bin");
  guard.track(base / "test.json");
  save_split((base / "train").string(), ds.train, dc, "train");
  save_split((base / "validation").string(), ds.validation, dc, "validation");
  save_split((base / "test").string(), ds.test, dc, "test");
  if (o.csv) {
    guard.track(base / "train.csv");
    guard.track(base / "validation.csv");
    guard.track(base / "test.csv");
    export_csv((base / "train.csv").string(), ds.train, dc);
    export_csv((base / "validation.csv").string(), ds.validation, dc);
    export_csv((base / "test.csv").string(), ds.test, dc);
  }
  guard.release();

  std::cout << "wrote " << ds.train.size() << " train, " << ds.validation.size()
            << " validation, " << ds.test.size() << " test windows to " << o.out_dir
            << " (config_hash " << config_hash(dc) << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train: fit one detector per requested node and save checkpoints.

struct TrainOpts {
  std::string config_path;
  std::string data_dir;
  std::string out_dir;
  std::string detector = "picae";
  std::vector<NodeId> nodes;
  std::optional<double> lambda_r;
  std::optional<double> lr;
  std::optional<std::size_t> batch;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> patience;
  std::optional<std::uint64_t> seed;
  double pca_energy = 0.99;
};

int cmd_train(const TrainOpts& o) {
  const DetectorKind kind = detector_from_name(o.detector);
  const DatasetConfig dc = load_data_dir(o.data_dir);
  const auto train = load_split((fs::path(o.data_dir) / "train").string());

  json cfg = load_config(o.config_path);
  TrainConfig tc = train_from(cfg);
  const bool reg_configured = cfg.contains("train") && cfg.at("train").contains("reg_weight");
  if (!reg_configured) tc.reg_weight = reg_weight_for_snr(dc.snr_db);
  if (o.lambda_r) tc.reg_weight = *o.lambda_r;
  if (o.lr) tc.lr = *o.lr;
  if (o.batch) tc.batch = *o.batch;
  if (o.epochs) tc.max_epochs = *o.epochs;
  if (o.patience) tc.patience = *o.patience;
  if (o.seed) tc.seed = *o.seed;
  tc.validate();

  std::vector<NodeId> nodes = o.nodes;
  if (nodes.empty()) nodes.push_back(dc.monitor_node);

  fs::create_directories(o.out_dir);
  OutputGuard guard;
  for (NodeId node : nodes) {
    TrainConfig node_tc = tc;
    if (nodes.size() > 1) node_tc.seed = derive_seed(tc.seed, node);
    DetectorBuild build =
        build_detector(kind, node, select_node(train, node), node_tc, o.pca_energy);
    build.checkpoint.config_fingerprint = config_hash(dc);

    const std::string stem = o.detector + "_node" + std::to_string(node);
    const fs::path ckpt = fs::path(o.out_dir) / (stem + ".ckpt");
    guard.track(ckpt);
    save_checkpoint(ckpt.string(), build.checkpoint);

    json report;
    report["tool"] = kTool;
    report["seed"] = node_tc.seed;
    report["config_hash"] = config_hash(dc);
    report["detector"] = o.detector;
    report["node"] = node;
    report["reg_weight"] = build.checkpoint.reg_weight;
    report["epochs_run"] = build.report.epochs_run;
    report["epsilon_bar"] = build.report.epsilon_bar;
    report["max_train_error"] = build.report.max_train_error;
    report["param_checksum"] = build.report.param_checksum;
    report["loss_curve"] = build.report.loss_curve;
    write_text(guard, fs::path(o.out_dir) / (stem + "_report.json"), report.dump(2) + "\n");

    std::cout << "trained " << o.detector << " at node " << node << ": mean error "
              << build.report.epsilon_bar << ", checkpoint " << ckpt.string() << "\n";
  }
  guard.release();
  return 0;
}

// ---------------------------------------------------------------------------
// calibrate: thresholds from one checkpoint plus the validation faults.

struct CalibrateOpts {
  std::string checkpoint;
  std::string data_dir;
  std::string out_dir;
  double safety = 1.0;
  double margin = 1.1;
};

int cmd_calibrate(const CalibrateOpts& o) {
  const Checkpoint ck = load_checkpoint(o.checkpoint);
  const auto validation = load_split((fs::path(o.data_dir) / "validation").string());
  const auto val = select_node(validation, ck.node);
  if (val.empty())
    throw ParameterError("validation split has no windows for node " +
                         std::to_string(ck.node));

  StateFile sf;
  sf.kind = ck.kind;
  sf.seed = ck.seed;
  sf.config_fingerprint = ck.config_fingerprint;
  sf.safety = o.safety;
  sf.margin = o.margin;
  sf.state = calibrate_detector(ck, val, o.safety, o.margin);

  fs::create_directories(o.out_dir);
  std::error_code ec;
  const fs::path rel = fs::relative(fs::absolute(o.checkpoint), fs::absolute(o.out_dir), ec);
  sf.checkpoint_path = (ec || rel.empty()) ? fs::absolute(o.checkpoint).string() : rel.string();

  OutputGuard guard;
  const std::string stem = std::string(detector_name(ck.kind)) + "_node" +
                           std::to_string(ck.node) + "_state.json";
  const fs::path out = fs::path(o.out_dir) / stem;
  guard.track(out);
  save_detector_state(out.string(), sf);
  guard.release();

  std::cout << "calibrated node " << ck.node << ": lower " << sf.state.lower_threshold
            << ", upper " << sf.state.upper_threshold << ", state " << out.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// detect: score the test split. One state yields per-window verdicts at that
// node; several states yield one fused system verdict per event.

struct DetectOpts {
  std::vector<std::string> states;
  std::string data_dir;
  std::string out_dir;
  std::string name = "verdicts.ndjson";
};

int cmd_detect(const DetectOpts& o) {
  if (o.states.empty()) throw ParameterError("detect needs at least one --state");
  const DatasetConfig dc = load_data_dir(o.data_dir);
  const auto test = load_split((fs::path(o.data_dir) / "test").string());

  std::vector<DetectorState> states;
  for (const auto& path : o.states) states.push_back(load_detector_state(path).state);

  std::vector<Verdict> verdicts;
  if (states.size() == 1) {
    for (const auto& w : select_node(test, states.front().node))
      verdicts.push_back(detect_window(states.front(), w));
  } else {
    Dataset shell;
    shell.test = test;
    verdicts = run_fusion(shell, states).fused;
  }

  fs::create_directories(o.out_dir);
  OutputGuard guard;
  std::ostringstream out;
  out << provenance(dc).dump() << "\n";
  for (const auto& v : verdicts) out << verdict_to_json_line(v) << "\n";
  write_text(guard, fs::path(o.out_dir) / o.name, out.str());
  guard.release();

  std::map<std::string, std::size_t> counts;
  for (const auto& v : verdicts) ++counts[verdict_class_name(v.cls)];
  std::cout << "scored " << verdicts.size() << " windows:";
  for (const auto& [name, n] : counts) std::cout << " " << name << "=" << n;
  std::cout << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate: join a verdict stream with the test labels.

struct EvaluateOpts {
  std::string verdicts_path;
  std::string data_dir;
  std::string out_dir;
  std::string name = "metrics.json";
};

int cmd_evaluate(const EvaluateOpts& o) {
  const DatasetConfig dc = load_data_dir(o.data_dir);
  const auto test = load_split((fs::path(o.data_dir) / "test").string());
  std::map<std::uint64_t, Label> label_of;
  for (const auto& w : test) {
    const auto it = label_of.find(w.window_index);
    if (it == label_of.end())
      label_of[w.window_index] = w.label;
    else if (it->second != w.label)
      throw AlignmentError("test event " + std::to_string(w.window_index) + " mixes labels");
  }

  std::vector<Verdict> verdicts;
  std::vector<Label> labels;
  std::istringstream lines(read_text(o.verdicts_path));
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    if (line.find("\"tool\"") != std::string::npos) continue;  // provenance header
    const Verdict v = verdict_from_json_line(line);
    const auto it = label_of.find(v.window_index);
    if (it == label_of.end())
      throw AlignmentError("verdict window " + std::to_string(v.window_index) +
                           " is not in the test split");
    verdicts.push_back(v);
    labels.push_back(it->second);
  }
  const MetricsReport m = evaluate(verdicts, labels);

  fs::create_directories(o.out_dir);
  OutputGuard guard;
  json out = provenance(dc);
  out["windows"] = verdicts.size();
  out["precision"] = m.precision;
  out["recall"] = m.recall;
  out["f1"] = m.f1;
  out["tp"] = m.tp;
  out["fp"] = m.fp;
  out["fn"] = m.fn;
  out["tn"] = m.tn;
  write_text(guard, fs::path(o.out_dir) / o.name, out.dump(2) + "\n");
  guard.release();

  std::cout << "precision " << m.precision << ", recall " << m.recall << ", f1 " << m.f1
            << " over " << verdicts.size() << " verdicts\n";
  return 0;
}

// ---------------------------------------------------------------------------
// sweep: the full (detector, snr, T) grid, fanned out over a worker pool,
// merged in grid order.

struct SweepOpts {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<double> lambda_r;
  std::size_t jobs = 1;
  bool dry_run = false;
  double pca_energy = 0.99;
  double safety = 1.0;
  double margin = 1.1;
};

struct SweepCell {
  DetectorKind kind;
  double snr_db;
  std::size_t window_len;
  std::size_t snr_idx;
  std::size_t len_idx;
};

int cmd_sweep(const SweepOpts& o) {
  json cfg = load_config(o.config_path);
  DatasetConfig base = dataset_from(cfg);
  if (o.seed) base.seed = *o.seed;
  TrainConfig tc_base = train_from(cfg);

  std::vector<std::string> detectors{"picae", "ae", "pca", "er"};
  std::vector<double> snrs{30.0, 50.0, 70.0, 90.0};
  std::vector<std::size_t> lens{256, 128, 64, 32, 16};
  if (cfg.contains("sweep")) {
    const json& s = cfg.at("sweep");
    if (s.contains("detectors")) detectors = s.at("detectors").get<std::vector<std::string>>();
    if (s.contains("snr_db")) snrs = s.at("snr_db").get<std::vector<double>>();
    if (s.contains("window_len")) lens = s.at("window_len").get<std::vector<std::size_t>>();
  }

  std::vector<SweepCell> cells;
  for (const auto& name : detectors)
    for (std::size_t si = 0; si < snrs.size(); ++si)
      for (std::size_t li = 0; li < lens.size(); ++li)
        cells.push_back({detector_from_name(name), snrs[si], lens[li], si, li});

  if (o.dry_run) {
    std::cout << "detector,snr_db,T\n";
    for (const auto& c : cells)
      std::cout << detector_name(c.kind) << "," << c.snr_db << "," << c.window_len << "\n";
    return 0;
  }

  const bool reg_configured =
      o.lambda_r.has_value() ||
      (cfg.contains("train") && cfg.at("train").contains("reg_weight"));

  // Each cell regenerates its dataset so workers share nothing; detectors at
  // the same (snr, T) see identical data because the dataset seed is derived
  // from the grid position alone.
  std::vector<MetricsReport> results(cells.size());
  std::vector<std::string> failures(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      const SweepCell& c = cells[i];
      try {
        DatasetConfig dc = base;
        resize_windows(dc, c.window_len);
        dc.snr_db = c.snr_db;
        dc.seed = derive_seed(base.seed, 0xDA7A0000ull + c.snr_idx * 64 + c.len_idx);
        const Dataset ds = generate_dataset(dc);

        TrainConfig tc = tc_base;
        tc.seed = derive_seed(base.seed, i);
        if (o.lambda_r)
          tc.reg_weight = *o.lambda_r;
        else if (!reg_configured)
          tc.reg_weight = reg_weight_for_snr(c.snr_db);
        results[i] = run_benchmark(ds, c.kind, dc.monitor_node, tc, o.pca_energy, o.safety,
                                   o.margin)
                         .metrics;
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t jobs = std::max<std::size_t>(1, o.jobs);
  for (std::size_t j = 0; j + 1 < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (std::size_t i = 0; i < cells.size(); ++i)
    if (!failures[i].empty())
      throw Error("sweep cell " + std::string(detector_name(cells[i].kind)) + "/" +
                          std::to_string(cells[i].snr_db) + "dB/T" +
                          std::to_string(cells[i].window_len) + " failed: " + failures[i]);

  fs::create_directories(o.out_dir);
  OutputGuard guard;
  std::ostringstream out;
  out.precision(17);
  out << csv_provenance(base);
  out << "detector,snr_db,T,precision,recall,f1\n";
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    const auto& m = results[i];
    out << detector_name(c.kind) << "," << c.snr_db << "," << c.window_len << ","
        << m.precision << "," << m.recall << "," << m.f1 << "\n";
  }
  write_text(guard, fs::path(o.out_dir) / "sweep.csv", out.str());
  guard.release();

  std::cout << "swept " << cells.size() << " cells into "
            << (fs::path(o.out_dir) / "sweep.csv").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// place: dissimilarity from the training corpus, then greedy or exhaustive
// selection.

struct PlaceOpts {
  std::string data_dir;
  std::string out_dir;
  std::size_t k = 2;
  std::string method = "greedy";
};

int cmd_place(const PlaceOpts& o) {
  const DatasetConfig dc = load_data_dir(o.data_dir);
  const auto train = load_split((fs::path(o.data_dir) / "train").string());
  const auto dm = dissimilarity_from_training(dc.feeder, train);

  PlacementResult result;
  if (o.method == "greedy")
    result = greedy_place(dm, o.k);
  else if (o.method == "brute")
    result = brute_force_place(dm, o.k);
  else
    throw ParameterError("unknown placement method '" + o.method + "' (greedy or brute)");

  fs::create_directories(o.out_dir);
  OutputGuard guard;
  json out = provenance(dc);
  out.update(json::parse(placement_to_json(result)));
  out["method"] = o.method;
  out["k"] = o.k;
  write_text(guard, fs::path(o.out_dir) / "placement.json", out.dump(2) + "\n");
  guard.release();

  std::cout << "selected";
  for (NodeId n : result.selected) std::cout << " " << n;
  std::cout << " (total dissimilarity " << result.total_dissimilarity << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// plot: trajectory polylines per event class plus the gamma histogram, as CSV
// and standalone SVG.

struct PlotOpts {
  std::string data_dir;
  std::string state_path;
  std::string out_dir;
  double bin_width = 0.25;  // log10 gamma
};

const char* class_color(Label l) {
  switch (l) {
    case Label::Normal: return "#4477aa";
    case Label::Hif: return "#ee6677";
    case Label::CapacitorSwitch: return "#228833";
    case Label::LoadSwitch: return "#ccbb44";
  }
  return "#000000";
}

std::string svg_open(double w, double h, const DatasetConfig& dc) {
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
  out << "<!-- tool=" << kTool << " seed=" << dc.seed << " config_hash=" << config_hash(dc)
      << " -->\n";
  out << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
  return out.str();
}

int cmd_plot(const PlotOpts& o) {
  const DatasetConfig dc = load_data_dir(o.data_dir);
  const auto test = load_split((fs::path(o.data_dir) / "test").string());
  const StateFile sf = load_detector_state(o.state_path);
  const auto windows = select_node(test, sf.state.node);
  if (windows.empty())
    throw ParameterError("test split has no windows for node " +
                         std::to_string(sf.state.node));

  const std::vector<Label> classes{Label::Normal, Label::Hif, Label::CapacitorSwitch,
                                   Label::LoadSwitch};

  // One representative trajectory per class present.
  std::map<Label, const Window*> sample;
  for (const auto& w : windows)
    if (!sample.count(w.label)) sample[w.label] = &w;

  fs::create_directories(o.out_dir);
  OutputGuard guard;

  {
    std::ostringstream csv;
    csv.precision(17);
    csv << csv_provenance(dc) << "class,sample,voltage,current\n";
    for (Label l : classes) {
      if (!sample.count(l)) continue;
      const Window& w = *sample[l];
      for (std::size_t k = 0; k < w.size(); ++k)
        csv << label_name_of(l) << "," << k << "," << w.voltage[k] << "," << w.current[k]
            << "\n";
    }
    write_text(guard, fs::path(o.out_dir) / "trajectories.csv", csv.str());
  }

  {
    const double size = 640.0, pad = 60.0;
    auto px = [&](double v) { return pad + (v + 1.15) / 2.3 * (size - 2 * pad); };
    auto py = [&](double c) { return size - pad - (c + 1.15) / 2.3 * (size - 2 * pad); };
    std::ostringstream svg;
    svg << svg_open(size, size, dc);
    svg << "<line x1=\"" << px(-1.15) << "\" y1=\"" << py(0) << "\" x2=\"" << px(1.15)
        << "\" y2=\"" << py(0) << "\" stroke=\"#cccccc\"/>\n";
    svg << "<line x1=\"" << px(0) << "\" y1=\"" << py(-1.15) << "\" x2=\"" << px(0)
        << "\" y2=\"" << py(1.15) << "\" stroke=\"#cccccc\"/>\n";
    double ly = pad;
    for (Label l : classes) {
      if (!sample.count(l)) continue;
      const Window& w = *sample[l];
      svg << "<polyline fill=\"none\" stroke=\"" << class_color(l)
          << "\" stroke-width=\"1.2\" points=\"";
      for (std::size_t k = 0; k < w.size(); ++k)
        svg << px(w.voltage[k]) << "," << py(w.current[k]) << " ";
      svg << "\"/>\n";
      svg << "<text x=\"" << pad << "\" y=\"" << ly << "\" fill=\"" << class_color(l)
          << "\" font-size=\"14\">" << label_name_of(l) << "</text>\n";
      ly += 18.0;
    }
    svg << "<text x=\"" << size / 2 << "\" y=\"" << size - 16
        << "\" font-size=\"14\" text-anchor=\"middle\">normalized voltage</text>\n";
    svg << "<text x=\"16\" y=\"" << size / 2
        << "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
        << size / 2 << ")\">normalized current</text>\n";
    svg << "</svg>\n";
    write_text(guard, fs::path(o.out_dir) / "trajectories.svg", svg.str());
  }

  // Gamma histogram over log10 bins, one series per class.
  std::map<Label, std::vector<double>> gammas;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& w : windows) {
    const double g = confidence(sf.state, w);
    const double x = std::log10(std::max(g, 1e-300));
    gammas[w.label].push_back(x);
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  const double width = o.bin_width;
  const auto first_bin = static_cast<long>(std::floor(lo / width));
  const auto last_bin = static_cast<long>(std::floor(hi / width));
  const std::size_t nbins = static_cast<std::size_t>(last_bin - first_bin + 1);
  std::map<Label, std::vector<std::size_t>> counts;
  std::size_t peak = 0;
  for (const auto& [label, xs] : gammas) {
    auto& row = counts[label];
    row.assign(nbins, 0);
    for (double x : xs) {
      const auto b = static_cast<std::size_t>(static_cast<long>(std::floor(x / width)) -
                                              first_bin);
      ++row[b];
      peak = std::max(peak, row[b]);
    }
  }

  {
    std::ostringstream csv;
    csv.precision(17);
    csv << csv_provenance(dc) << "class,log10_gamma_lo,log10_gamma_hi,count\n";
    for (Label l : classes) {
      if (!counts.count(l)) continue;
      for (std::size_t b = 0; b < nbins; ++b)
        csv << label_name_of(l) << "," << (static_cast<double>(first_bin + static_cast<long>(b)) * width)
            << "," << (static_cast<double>(first_bin + static_cast<long>(b) + 1) * width) << ","
            << counts[l][b] << "\n";
    }
    write_text(guard, fs::path(o.out_dir) / "gamma_hist.csv", csv.str());
  }

  {
    const double w = 760.0, h = 480.0, pad = 60.0;
    const double plot_w = w - 2 * pad, plot_h = h - 2 * pad;
    const double bar = plot_w / static_cast<double>(nbins) / 4.5;
    std::ostringstream svg;
    svg << svg_open(w, h, dc);
    svg << "<line x1=\"" << pad << "\" y1=\"" << h - pad << "\" x2=\"" << w - pad
        << "\" y2=\"" << h - pad << "\" stroke=\"#333333\"/>\n";
    std::size_t series = 0;
    double ly = pad;
    for (Label l : classes) {
      if (!counts.count(l)) continue;
      for (std::size_t b = 0; b < nbins; ++b) {
        if (counts[l][b] == 0) continue;
        const double x = pad + plot_w * static_cast<double>(b) / static_cast<double>(nbins) +
                         bar * static_cast<double>(series);
        const double bh =
            plot_h * static_cast<double>(counts[l][b]) / static_cast<double>(peak);
        svg << "<rect x=\"" << x << "\" y=\"" << h - pad - bh << "\" width=\"" << bar
            << "\" height=\"" << bh << "\" fill=\"" << class_color(l) << "\"/>\n";
      }
      svg << "<text x=\"" << w - pad - 150 << "\" y=\"" << ly << "\" fill=\""
          << class_color(l) << "\" font-size=\"14\">" << label_name_of(l) << "</text>\n";
      ly += 18.0;
      ++series;
    }
    for (long b = first_bin; b <= last_bin + 1; ++b) {
      const double x =
          pad + plot_w * static_cast<double>(b - first_bin) / static_cast<double>(nbins);
      svg << "<text x=\"" << x << "\" y=\"" << h - pad + 18
          << "\" font-size=\"11\" text-anchor=\"middle\">"
          << (static_cast<double>(b) * width) << "</text>\n";
    }
    svg << "<text x=\"" << w / 2 << "\" y=\"" << h - 12
        << "\" font-size=\"14\" text-anchor=\"middle\">log10 gamma</text>\n";
    svg << "</svg>\n";
    write_text(guard, fs::path(o.out_dir) / "gamma_hist.svg", svg.str());
  }

  guard.release();
  std::cout << "wrote trajectories and gamma histogram to " << o.out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"radial-feeder fault synthesis and detection toolkit"};
  app.require_subcommand(1);

  SimulateOpts sim;
  auto* c_sim = app.add_subcommand("simulate", "generate and persist a dataset");
  c_sim->add_option("--config", sim.config_path, "json configuration file");
  c_sim->add_option("--out", sim.out_dir, "output directory")->required();
  c_sim->add_option("--seed", sim.seed, "dataset seed override");
  c_sim->add_option("--snr-db", sim.snr_db, "noise level override");
  c_sim->add_option("--window-size", sim.window_len, "window length override");
  c_sim->add_flag("--csv", sim.csv, "also export csv copies");

  TrainOpts trn;
  auto* c_trn = app.add_subcommand("train", "fit a detector and write its checkpoint");
  c_trn->add_option("--config", trn.config_path, "json configuration file");
  c_trn->add_option("--data", trn.data_dir, "simulate output directory")->required();
  c_trn->add_option("--out", trn.out_dir, "output directory")->required();
  c_trn->add_option("--detector", trn.detector, "picae|ae|pca|er");
  c_trn->add_option("--nodes", trn.nodes, "nodes to train (default: monitor node)");
  c_trn->add_option("--lambda-r", trn.lambda_r, "trajectory regularization weight");
  c_trn->add_option("--lr", trn.lr, "learning rate");
  c_trn->add_option("--batch", trn.batch, "minibatch size");
  c_trn->add_option("--epochs", trn.epochs, "epoch cap");
  c_trn->add_option("--patience", trn.patience, "early stopping patience");
  c_trn->add_option("--seed", trn.seed, "training seed override");
  c_trn->add_option("--pca-energy", trn.pca_energy, "pca energy share");

  CalibrateOpts cal;
  auto* c_cal = app.add_subcommand("calibrate", "derive detection thresholds");
  c_cal->add_option("--checkpoint", cal.checkpoint, "trained checkpoint")->required();
  c_cal->add_option("--data", cal.data_dir, "simulate output directory")->required();
  c_cal->add_option("--out", cal.out_dir, "output directory")->required();
  c_cal->add_option("--safety", cal.safety, "lower threshold inflation");
  c_cal->add_option("--margin", cal.margin, "upper threshold margin");

  DetectOpts det;
  auto* c_det = app.add_subcommand("detect", "score the test split");
  c_det->add_option("--state", det.states, "calibrated state file (repeat to fuse)")
      ->required();
  c_det->add_option("--data", det.data_dir, "simulate output directory")->required();
  c_det->add_option("--out", det.out_dir, "output directory")->required();
  c_det->add_option("--name", det.name, "verdict file name");

  EvaluateOpts ev;
  auto* c_ev = app.add_subcommand("evaluate", "score a verdict stream against labels");
  c_ev->add_option("--verdicts", ev.verdicts_path, "ndjson verdict stream")->required();
  c_ev->add_option("--data", ev.data_dir, "simulate output directory")->required();
  c_ev->add_option("--out", ev.out_dir, "output directory")->required();
  c_ev->add_option("--name", ev.name, "metrics file name");

  SweepOpts sw;
  auto* c_sw = app.add_subcommand("sweep", "evaluate the detector/snr/T grid");
  c_sw->add_option("--config", sw.config_path, "json configuration file");
  c_sw->add_option("--out", sw.out_dir, "output directory");
  c_sw->add_option("--seed", sw.seed, "base seed override");
  c_sw->add_option("--lambda-r", sw.lambda_r, "fixed regularization weight for all cells");
  c_sw->add_option("--jobs", sw.jobs, "worker threads");
  c_sw->add_flag("--dry-run", sw.dry_run, "print the grid without running");
  c_sw->add_option("--pca-energy", sw.pca_energy, "pca energy share");
  c_sw->add_option("--safety", sw.safety, "lower threshold inflation");
  c_sw->add_option("--margin", sw.margin, "upper threshold margin");

  PlaceOpts pl;
  auto* c_pl = app.add_subcommand("place", "select sensor nodes");
  c_pl->add_option("--data", pl.data_dir, "simulate output directory")->required();
  c_pl->add_option("--out", pl.out_dir, "output directory")->required();
  c_pl->add_option("--k", pl.k, "sensor budget");
  c_pl->add_option("--method", pl.method, "greedy|brute");

  PlotOpts plt;
  auto* c_plt = app.add_subcommand("plot", "emit trajectory and histogram files");
  c_plt->add_option("--data", plt.data_dir, "simulate output directory")->required();
  c_plt->add_option("--state", plt.state_path, "calibrated state file")->required();
  c_plt->add_option("--out", plt.out_dir, "output directory")->required();
  c_plt->add_option("--bins", plt.bin_width, "log10 gamma bin width");

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_sim->parsed()) return cmd_simulate(sim);
    if (c_trn->parsed()) return cmd_train(trn);
    if (c_cal->parsed()) return cmd_calibrate(cal);
    if (c_det->parsed()) return cmd_detect(det);
    if (c_ev->parsed()) return cmd_evaluate(ev);
    if (c_sw->parsed()) return cmd_sweep(sw);
    if (c_pl->parsed()) return cmd_place(pl);
    if (c_plt->parsed()) return cmd_plot(plt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
