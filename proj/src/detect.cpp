#include "hifd/detect.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "hifd/errors.hpp"

namespace hifd {

using nlohmann::json;

const char* detector_name(DetectorKind k) {
  switch (k) {
    case DetectorKind::Picae: return "picae";
    case DetectorKind::Ae: return "ae";
    case DetectorKind::Pca: return "pca";
    case DetectorKind::Er: return "er";
  }
  throw ParameterError("unknown detector kind");
}

DetectorKind detector_from_name(const std::string& s) {
  if (s == "picae") return DetectorKind::Picae;
  if (s == "ae") return DetectorKind::Ae;
  if (s == "pca") return DetectorKind::Pca;
  if (s == "er") return DetectorKind::Er;
  throw ParameterError("unknown detector name: " + s);
}

CaeScorer::CaeScorer(cae::Model model, DetectorKind kind)
    : model_(std::move(model)), kind_(kind) {
  if (kind != DetectorKind::Picae && kind != DetectorKind::Ae)
    throw ParameterError("reconstruction scorer must be picae or ae");
  model_.check_consistent();
}

double CaeScorer::window_error(const Window& w) const {
  if (w.size() != model_.input_len) throw ShapeError("window does not match the model length");
  const auto& v_hat = cae::forward(model_, w.voltage, trace_);
  double e = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double d = w.voltage[k] - v_hat[k];
    e += d * d;
  }
  return e;
}

std::vector<double> CaeScorer::reconstruct(const Window& w) const {
  if (w.size() != model_.input_len) throw ShapeError("window does not match the model length");
  return cae::forward(model_, w.voltage, trace_);
}

void DetectorState::validate() const {
  if (!scorer) throw ParameterError("detector carries no scorer");
  if (!(mean_train_error > 0.0)) throw CalibrationError("mean training error must be positive");
  if (!(lower_threshold > 0.0 && lower_threshold < upper_threshold))
    throw CalibrationError("thresholds must satisfy 0 < lower < upper");
}

const char* verdict_class_name(VerdictClass c) {
  switch (c) {
    case VerdictClass::Normal: return "Normal";
    case VerdictClass::Hif: return "HIF";
    case VerdictClass::OtherAbnormal: return "OtherAbnormal";
  }
  throw ParameterError("unknown verdict class");
}

namespace {

VerdictClass verdict_class_from_name(const std::string& s) {
  if (s == "Normal") return VerdictClass::Normal;
  if (s == "HIF") return VerdictClass::Hif;
  if (s == "OtherAbnormal") return VerdictClass::OtherAbnormal;
  throw IoError("unknown verdict class: " + s);
}

}  // namespace

std::string verdict_to_json_line(const Verdict& v) {
  json j;
  j["window_index"] = v.window_index;
  j["node"] = v.node;
  j["gamma"] = v.gamma;
  j["class"] = verdict_class_name(v.cls);
  return j.dump();
}

Verdict verdict_from_json_line(const std::string& line) {
  try {
    const json j = json::parse(line);
    Verdict v;
    v.window_index = j.at("window_index").get<std::uint64_t>();
    v.node = j.at("node").get<NodeId>();
    v.gamma = j.at("gamma").get<double>();
    v.cls = verdict_class_from_name(j.at("class").get<std::string>());
    return v;
  } catch (const json::exception& e) {
    throw IoError(std::string("verdict record parse failure: ") + e.what());
  }
}

double confidence(const DetectorState& state, const Window& w) {
  state.validate();
  return state.scorer->window_error(w) / state.mean_train_error;
}

VerdictClass classify(double gamma, double lower, double upper) {
  if (!(lower > 0.0 && lower < upper))
    throw ConfigError("thresholds must satisfy 0 < lower < upper");
  if (gamma < lower) return VerdictClass::Normal;
  if (gamma > upper) return VerdictClass::OtherAbnormal;
  return VerdictClass::Hif;
}

Verdict detect_window(const DetectorState& state, const Window& w) {
  Verdict v;
  v.window_index = w.window_index;
  v.node = state.node;
  v.gamma = confidence(state, w);
  v.cls = classify(v.gamma, state.lower_threshold, state.upper_threshold);
  return v;
}

double calibrate_lower(double max_train_error, double mean_train_error, double safety) {
  if (!(mean_train_error > 0.0)) throw CalibrationError("mean training error must be positive");
  if (!(max_train_error >= 0.0)) throw CalibrationError("max training error must be non-negative");
  if (!(safety > 0.0)) throw ParameterError("safety factor must be positive");
  return safety * max_train_error / mean_train_error;
}

double calibrate_upper(std::span<const double> validation_gammas, double margin) {
  if (validation_gammas.empty())
    throw CalibrationError("upper threshold needs at least one validation fault window");
  if (!(margin > 0.0)) throw ParameterError("margin must be positive");
  return margin * *std::max_element(validation_gammas.begin(), validation_gammas.end());
}

DetectorState make_detector_state(NodeId node, std::shared_ptr<const Scorer> scorer,
                                  const ellipse::Conic& trajectory,
                                  const std::vector<Window>& train_windows,
                                  const std::vector<Window>& validation_hif,
                                  double safety, double margin) {
  if (!scorer) throw ParameterError("calibration needs a scorer");
  if (train_windows.empty()) throw CalibrationError("calibration needs training windows");

  double sum = 0.0, max_err = 0.0;
  for (const auto& w : train_windows) {
    const double e = scorer->window_error(w);
    sum += e;
    max_err = std::max(max_err, e);
  }
  const double mean_err = sum / static_cast<double>(train_windows.size());
  if (!(mean_err > 0.0)) throw CalibrationError("training windows score zero error");

  std::vector<double> val_gammas;
  val_gammas.reserve(validation_hif.size());
  for (const auto& w : validation_hif)
    val_gammas.push_back(scorer->window_error(w) / mean_err);

  DetectorState st;
  st.node = node;
  st.scorer = std::move(scorer);
  st.mean_train_error = mean_err;
  st.lower_threshold = calibrate_lower(max_err, mean_err, safety);
  st.upper_threshold = calibrate_upper(val_gammas, margin);
  st.trajectory = trajectory;
  if (!(st.lower_threshold < st.upper_threshold))
    throw CalibrationError("validation faults are not separable from training scores");
  return st;
}

Verdict central_fuse(std::span<const Verdict> verdicts,
                     std::span<const DetectorState> states) {
  if (verdicts.empty()) throw ParameterError("fusion needs at least one verdict");
  const std::uint64_t index = verdicts.front().window_index;
  const Verdict* best = &verdicts.front();
  for (const Verdict& v : verdicts) {
    if (v.window_index != index)
      throw AlignmentError("fusion batch mixes window indices " + std::to_string(index) +
                           " and " + std::to_string(v.window_index));
    if (v.gamma > best->gamma || (v.gamma == best->gamma && v.node < best->node)) best = &v;
  }

  const DetectorState* owner = nullptr;
  for (const DetectorState& st : states)
    if (st.node == best->node) owner = &st;
  if (owner == nullptr)
    throw ParameterError("no detector state for node " + std::to_string(best->node));

  Verdict out;
  out.window_index = index;
  out.node = best->node;
  out.gamma = best->gamma;
  out.cls = classify(out.gamma, owner->lower_threshold, owner->upper_threshold);
  return out;
}

MetricsReport evaluate(std::span<const Verdict> verdicts, std::span<const Label> labels) {
  if (verdicts.size() != labels.size())
    throw ShapeError("verdict and label counts must match");
  MetricsReport r;
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    const bool predicted = verdicts[i].cls == VerdictClass::Hif;
    const bool actual = labels[i] == Label::Hif;
    if (predicted && actual) ++r.tp;
    else if (predicted && !actual) ++r.fp;
    else if (!predicted && actual) ++r.fn;
    else ++r.tn;
  }
  const double tp = static_cast<double>(r.tp);
  r.precision = r.tp + r.fp > 0 ? tp / static_cast<double>(r.tp + r.fp) : 0.0;
  r.recall = r.tp + r.fn > 0 ? tp / static_cast<double>(r.tp + r.fn) : 0.0;
  r.f1 = r.precision + r.recall > 0.0
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  return r;
}

}  // namespace hifd
