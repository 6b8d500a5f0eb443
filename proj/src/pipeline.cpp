#include "hifd/pipeline.hpp"

#include <algorithm>
#include <map>

#include "hifd/errors.hpp"
#include "hifd/rng.hpp"

namespace hifd {

double reg_weight_for_snr(double snr_db) { return snr_db == 30.0 ? 440.0 : 200.0; }

namespace {

void train_stats(const Scorer& scorer, const std::vector<Window>& windows, double& mean_err,
                 double& max_err) {
  double sum = 0.0;
  max_err = 0.0;
  for (const auto& w : windows) {
    const double e = scorer.window_error(w);
    sum += e;
    max_err = std::max(max_err, e);
  }
  mean_err = sum / static_cast<double>(windows.size());
}

}  // namespace

DetectorBuild build_detector(DetectorKind kind, NodeId node,
                             const std::vector<Window>& node_train, const TrainConfig& tc,
                             double pca_energy) {
  if (node_train.empty()) throw ParameterError("detector needs training windows");
  DetectorBuild out;
  Checkpoint& ck = out.checkpoint;
  ck.kind = kind;
  ck.node = node;
  ck.input_len = node_train.front().size();
  ck.seed = tc.seed;

  switch (kind) {
    case DetectorKind::Picae:
    case DetectorKind::Ae: {
      TrainConfig run = tc;
      if (kind == DetectorKind::Ae) run.reg_weight = 0.0;
      TrainedDetectorCore core = train_cae(node_train, run);
      ck.reg_weight = run.reg_weight;
      ck.epsilon_bar = core.report.epsilon_bar;
      ck.max_train_error = core.report.max_train_error;
      ck.trajectory = core.trajectory;
      ck.model = std::move(core.model);
      out.report = std::move(core.report);
      break;
    }
    case DetectorKind::Pca: {
      PcaModel m = pca_fit(node_train, pca_energy);
      PcaScorer scorer(m);
      train_stats(scorer, node_train, ck.epsilon_bar, ck.max_train_error);
      ck.pca = std::move(m);
      out.report.epsilon_bar = ck.epsilon_bar;
      out.report.max_train_error = ck.max_train_error;
      break;
    }
    case DetectorKind::Er: {
      ErModel m = er_fit(node_train);
      ErScorer scorer(m);
      train_stats(scorer, node_train, ck.epsilon_bar, ck.max_train_error);
      ck.trajectory = m.trajectory;
      out.report.epsilon_bar = ck.epsilon_bar;
      out.report.max_train_error = ck.max_train_error;
      break;
    }
  }
  if (!(ck.epsilon_bar > 0.0))
    throw CalibrationError("training windows score zero error; nothing to normalize by");
  return out;
}

DetectorState calibrate_detector(const Checkpoint& ck,
                                 const std::vector<Window>& node_validation_hif,
                                 double safety, double margin) {
  DetectorState st;
  st.node = ck.node;
  st.scorer = scorer_from_checkpoint(ck);
  st.mean_train_error = ck.epsilon_bar;
  st.trajectory = ck.trajectory;
  st.lower_threshold = calibrate_lower(ck.max_train_error, ck.epsilon_bar, safety);

  std::vector<double> gammas;
  gammas.reserve(node_validation_hif.size());
  for (const auto& w : node_validation_hif)
    gammas.push_back(st.scorer->window_error(w) / ck.epsilon_bar);
  st.upper_threshold = calibrate_upper(gammas, margin);
  st.validate();
  return st;
}

BenchmarkOutcome run_benchmark(const Dataset& ds, DetectorKind kind, NodeId node,
                               const TrainConfig& tc, double pca_energy, double safety,
                               double margin) {
  const auto train = select_node(ds.train, node);
  const auto val = select_node(ds.validation, node);
  const auto test = select_node(ds.test, node);
  if (train.empty() || val.empty() || test.empty())
    throw ParameterError("dataset has no windows for node " + std::to_string(node));

  BenchmarkOutcome out;
  DetectorBuild build = build_detector(kind, node, train, tc, pca_energy);
  out.report = std::move(build.report);
  out.state = calibrate_detector(build.checkpoint, val, safety, margin);

  out.verdicts.reserve(test.size());
  out.labels.reserve(test.size());
  for (const auto& w : test) {
    out.verdicts.push_back(detect_window(out.state, w));
    out.labels.push_back(w.label);
  }
  out.metrics = evaluate(out.verdicts, out.labels);
  return out;
}

std::vector<DetectorState> build_states_for_nodes(const Dataset& ds, DetectorKind kind,
                                                  std::span<const NodeId> nodes,
                                                  const TrainConfig& base, double pca_energy,
                                                  double safety, double margin) {
  std::vector<DetectorState> states;
  states.reserve(nodes.size());
  for (NodeId node : nodes) {
    const auto train = select_node(ds.train, node);
    const auto val = select_node(ds.validation, node);
    if (train.empty() || val.empty())
      throw ParameterError("dataset has no windows for node " + std::to_string(node));
    TrainConfig tc = base;
    tc.seed = derive_seed(base.seed, node);
    DetectorBuild build = build_detector(kind, node, train, tc, pca_energy);
    states.push_back(calibrate_detector(build.checkpoint, val, safety, margin));
  }
  return states;
}

FusionOutcome run_fusion(const Dataset& ds, std::span<const DetectorState> states) {
  if (states.empty()) throw ParameterError("fusion needs at least one detector");

  // window_index -> per-node windows of that test event
  std::map<std::uint64_t, std::vector<const Window*>> events;
  for (const auto& w : ds.test) events[w.window_index].push_back(&w);

  FusionOutcome out;
  for (const auto& [index, windows] : events) {
    std::vector<Verdict> batch;
    Label label = windows.front()->label;
    for (const DetectorState& st : states) {
      const Window* mine = nullptr;
      for (const Window* w : windows)
        if (w->node == st.node) mine = w;
      if (mine == nullptr) continue;  // node absent from this event's capture
      if (mine->label != label)
        throw AlignmentError("test event " + std::to_string(index) + " mixes labels");
      batch.push_back(detect_window(st, *mine));
    }
    if (batch.empty())
      throw ParameterError("no configured node observed event " + std::to_string(index));
    out.fused.push_back(central_fuse(batch, states));
    out.labels.push_back(label);
  }
  out.metrics = evaluate(out.fused, out.labels);
  return out;
}

}  // namespace hifd
