#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hifd/ellipse.hpp"

namespace hifd::cae {

// One 1-d convolution stage. Data is position-major: x[pos * channels + ch].
// Weights are w[(u * in_ch + ic) * out_ch + oc], biases per output channel.
// Plain stages map in_len -> ceil(in_len / stride) with centered zero padding;
// transposed stages scatter back to an explicit output length (the adjoint of
// the plain stage that maps out_len -> in_len).
struct LayerSpec {
  std::size_t in_ch = 1;
  std::size_t out_ch = 1;
  std::size_t kernel = 5;
  std::size_t stride = 2;
  bool transposed = false;
  bool relu = true;

  std::size_t weight_count() const { return kernel * in_ch * out_ch; }
};

std::size_t conv_out_len(std::size_t in_len, std::size_t stride);

// Linear part of one stage (no activation). y is overwritten.
void apply_layer(const LayerSpec& s, std::span<const double> w, std::span<const double> b,
                 std::span<const double> x, std::size_t in_len,
                 std::span<double> y, std::size_t out_len);

// Gradients of the linear stage: gx is overwritten, gw and gb are accumulated.
void layer_backward(const LayerSpec& s, std::span<const double> w,
                    std::span<const double> x, std::size_t in_len,
                    std::span<const double> gy, std::size_t out_len,
                    std::span<double> gx, std::span<double> gw, std::span<double> gb);

// Narrow-waist autoencoder over one voltage window. Parameters live in one
// flat vector, layer by layer (weights then biases), so the optimizer and the
// checkpoint writer can treat the model as a single array.
struct Model {
  std::size_t input_len = 0;
  std::vector<LayerSpec> specs;
  std::vector<std::size_t> bounds;  // positions per stage boundary, size specs+1
  std::vector<double> params;

  std::size_t param_count() const { return params.size(); }
  std::size_t weight_offset(std::size_t layer) const;
  std::size_t bias_offset(std::size_t layer) const;
  void check_consistent() const;
};

// Standard four-stage architecture (two strided encoder stages into a single
// channel, mirrored decoder, linear output), weights U(-1/sqrt(fan_in), ..).
Model make_model(std::size_t input_len, std::uint64_t seed);

// Per-stage activations kept for the backward pass, plus backprop scratch.
// Reuse one instance across calls to avoid reallocation.
struct Trace {
  std::vector<double> input;
  std::vector<std::vector<double>> pre;
  std::vector<std::vector<double>> act;
  std::vector<double> g_a, g_b, g_pre;
};

// Runs the model; returns the reconstruction (trace.act.back()).
const std::vector<double>& forward(const Model& m, std::span<const double> x, Trace& t);

// Accumulates d(loss)/d(params) into grads given d(loss)/d(reconstruction).
// Consumes the trace's scratch buffers; activations are left intact.
void backward(const Model& m, Trace& t, std::span<const double> g_out,
              std::span<double> grads);

struct LossTerms {
  double recon = 0.0;
  double reg = 0.0;
  double total = 0.0;
};

// Reconstruction error plus trajectory penalty: ||v - v_hat||^2 and the
// squared conic residual of (v_hat, c) against the fitted normal trajectory.
LossTerms window_loss(std::span<const double> v, std::span<const double> v_hat,
                      std::span<const double> c, const ellipse::Conic& trajectory,
                      double reg_weight);

// d(total)/d(v_hat), overwriting g.
void window_loss_grad(std::span<const double> v, std::span<const double> v_hat,
                      std::span<const double> c, const ellipse::Conic& trajectory,
                      double reg_weight, std::span<double> g);

}  // namespace hifd::cae
