#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hifd/baselines.hpp"
#include "hifd/cae.hpp"
#include "hifd/train.hpp"
#include "hifd/window.hpp"

namespace hifd {

enum class DetectorKind : std::uint8_t { Picae = 0, Ae = 1, Pca = 2, Er = 3 };

const char* detector_name(DetectorKind k);
DetectorKind detector_from_name(const std::string& s);

// Raw anomaly score of one window before normalization by the training mean.
// Instances are not safe for concurrent calls; give each worker its own.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual double window_error(const Window& w) const = 0;
  virtual DetectorKind kind() const = 0;
  virtual std::size_t input_len() const = 0;
};

class CaeScorer final : public Scorer {
 public:
  CaeScorer(cae::Model model, DetectorKind kind);
  double window_error(const Window& w) const override;
  DetectorKind kind() const override { return kind_; }
  std::size_t input_len() const override { return model_.input_len; }
  const cae::Model& model() const { return model_; }

  // Reconstruction of one window, for plotting and inspection.
  std::vector<double> reconstruct(const Window& w) const;

 private:
  cae::Model model_;
  DetectorKind kind_;
  mutable cae::Trace trace_;
};

class PcaScorer final : public Scorer {
 public:
  explicit PcaScorer(PcaModel model) : model_(std::move(model)) {}
  double window_error(const Window& w) const override { return pca_error(model_, w); }
  DetectorKind kind() const override { return DetectorKind::Pca; }
  std::size_t input_len() const override { return model_.input_len; }
  const PcaModel& model() const { return model_; }

 private:
  PcaModel model_;
};

class ErScorer final : public Scorer {
 public:
  explicit ErScorer(ErModel model) : model_(std::move(model)) {}
  double window_error(const Window& w) const override { return er_error(model_, w); }
  DetectorKind kind() const override { return DetectorKind::Er; }
  std::size_t input_len() const override { return model_.input_len; }
  const ErModel& model() const { return model_; }

 private:
  ErModel model_;
};

// Calibrated per-node detector. The trajectory is carried for plotting and
// later recalibration; PCA detectors leave it empty.
struct DetectorState {
  NodeId node = 0;
  std::shared_ptr<const Scorer> scorer;
  double mean_train_error = 0.0;
  double lower_threshold = 0.0;
  double upper_threshold = 0.0;
  ellipse::Conic trajectory;

  void validate() const;
};

enum class VerdictClass : std::uint8_t { Normal = 0, Hif = 1, OtherAbnormal = 2 };

const char* verdict_class_name(VerdictClass c);

struct Verdict {
  std::uint64_t window_index = 0;
  NodeId node = 0;
  double gamma = 0.0;
  VerdictClass cls = VerdictClass::Normal;
};

// One newline-delimited json record {window_index, node, gamma, class}.
std::string verdict_to_json_line(const Verdict& v);
Verdict verdict_from_json_line(const std::string& line);

// Window error divided by the training mean error.
double confidence(const DetectorState& state, const Window& w);

// Three-way split: Normal below `lower`, OtherAbnormal above `upper`,
// the band in between is HIF. Requires 0 < lower < upper.
VerdictClass classify(double gamma, double lower, double upper);

Verdict detect_window(const DetectorState& state, const Window& w);

// Lower threshold: worst in-sample score, optionally inflated.
double calibrate_lower(double max_train_error, double mean_train_error, double safety = 1.0);

// Upper threshold: margin over the worst validation fault score.
double calibrate_upper(std::span<const double> validation_gammas, double margin = 1.1);

// Scores training windows, calibrates both thresholds, and assembles the
// node's detector. Throws CalibrationError when the thresholds do not order.
DetectorState make_detector_state(NodeId node, std::shared_ptr<const Scorer> scorer,
                                  const ellipse::Conic& trajectory,
                                  const std::vector<Window>& train_windows,
                                  const std::vector<Window>& validation_hif,
                                  double safety = 1.0, double margin = 1.1);

// Max-score fusion across one synchronized batch of per-node verdicts. The
// winning node's thresholds decide the system class; ties go to the lowest
// node id, which is reported as the likely location.
Verdict central_fuse(std::span<const Verdict> verdicts,
                     std::span<const DetectorState> states);

struct MetricsReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
};

// Fault-positive scoring: Hif verdicts against Hif labels; Normal and both
// switching classes count as negatives.
MetricsReport evaluate(std::span<const Verdict> verdicts, std::span<const Label> labels);

}  // namespace hifd
