#include "hifd/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hifd/errors.hpp"
#include "hifd/rng.hpp"

namespace hifd {

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ParameterError("learning rate must be positive");
  if (batch == 0) throw ParameterError("batch size must be positive");
  if (max_epochs == 0) throw ParameterError("epoch budget must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ParameterError("momentum decays must lie in [0, 1)");
  if (!(eps > 0.0)) throw ParameterError("optimizer epsilon must be positive");
  if (!(min_delta >= 0.0)) throw ParameterError("early-stop delta must be non-negative");
  if (reg_weight < 0.0) throw ParameterError("regularization weight must be non-negative");
}

ellipse::Conic pooled_trajectory(const std::vector<Window>& windows) {
  if (windows.empty()) throw ParameterError("cannot fit a trajectory to zero windows");
  std::size_t total = 0;
  for (const auto& w : windows) {
    if (w.size() != windows.front().size())
      throw ShapeError("trajectory windows must share one length");
    total += w.size();
  }
  std::vector<double> v, c;
  v.reserve(total);
  c.reserve(total);
  for (const auto& w : windows) {
    v.insert(v.end(), w.voltage.begin(), w.voltage.end());
    c.insert(c.end(), w.current.begin(), w.current.end());
  }
  return ellipse::fit_conic(ellipse::design_matrix(v, c));
}

void adam_step(std::span<double> params, std::span<const double> grads,
               std::span<double> m, std::span<double> v, std::size_t step_index,
               const TrainConfig& cfg) {
  if (params.size() != grads.size() || params.size() != m.size() || params.size() != v.size())
    throw ShapeError("optimizer buffers must share one size");
  if (step_index == 0) throw ParameterError("step index starts at 1");
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step_index));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step_index));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grads[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
    params[i] -= cfg.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.eps);
  }
}

TrainedDetectorCore train_cae(const std::vector<Window>& windows, const TrainConfig& cfg) {
  cfg.validate();
  if (windows.empty()) throw ParameterError("cannot train on zero windows");
  const std::size_t len = windows.front().size();
  for (const auto& w : windows)
    if (w.size() != len) throw ShapeError("training windows must share one length");

  TrainedDetectorCore out;
  out.trajectory = pooled_trajectory(windows);
  out.model = cae::make_model(len, derive_seed(cfg.seed, 0xA11));

  const std::size_t count = out.model.param_count();
  std::vector<double> grads(count), m1(count), m2(count), g_vhat(len);
  cae::Trace trace;
  Rng shuffle_rng(derive_seed(cfg.seed, 0xB42));

  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), 0);

  double best = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_sum = 0.0;
    std::size_t batches = 0;

    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t bs = std::min(cfg.batch, order.size() - start);
      std::fill(grads.begin(), grads.end(), 0.0);
      double batch_total = 0.0;
      for (std::size_t bi = 0; bi < bs; ++bi) {
        const Window& w = windows[order[start + bi]];
        const auto& v_hat = cae::forward(out.model, w.voltage, trace);
        const auto terms =
            cae::window_loss(w.voltage, v_hat, w.current, out.trajectory, cfg.reg_weight);
        batch_total += terms.total;
        cae::window_loss_grad(w.voltage, v_hat, w.current, out.trajectory, cfg.reg_weight,
                              g_vhat);
        const double inv_bs = 1.0 / static_cast<double>(bs);
        for (double& g : g_vhat) g *= inv_bs;
        cae::backward(out.model, trace, g_vhat, grads);
      }
      ++step;
      adam_step(out.model.params, grads, m1, m2, step, cfg);
      epoch_sum += batch_total / static_cast<double>(bs);
      ++batches;
    }

    const double epoch_loss = epoch_sum / static_cast<double>(batches);
    out.report.loss_curve.push_back(epoch_loss);
    out.report.epochs_run = epoch + 1;

    if (epoch_loss < best - cfg.min_delta) {
      best = epoch_loss;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }

  double err_sum = 0.0;
  double err_max = 0.0;
  for (const auto& w : windows) {
    const auto& v_hat = cae::forward(out.model, w.voltage, trace);
    double e = 0.0;
    for (std::size_t k = 0; k < len; ++k) {
      const double d = w.voltage[k] - v_hat[k];
      e += d * d;
    }
    err_sum += e;
    err_max = std::max(err_max, e);
  }
  out.report.epsilon_bar = err_sum / static_cast<double>(windows.size());
  out.report.max_train_error = err_max;
  out.report.param_checksum =
      fnv1a(out.model.params.data(), out.model.params.size() * sizeof(double));
  return out;
}

}  // namespace hifd
