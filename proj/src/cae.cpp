#include "hifd/cae.hpp"

#include <algorithm>
#include <cmath>

#include "hifd/errors.hpp"
#include "hifd/rng.hpp"

namespace hifd::cae {

namespace {

// Centered zero padding of the plain stage that maps long_len -> short_len.
std::ptrdiff_t pad_left_for(std::size_t long_len, std::size_t short_len, std::size_t kernel,
                            std::size_t stride) {
  const auto need = static_cast<std::ptrdiff_t>((short_len - 1) * stride + kernel);
  const auto total = need - static_cast<std::ptrdiff_t>(long_len);
  return std::max<std::ptrdiff_t>(total, 0) / 2;
}

void check_layer_shapes(const LayerSpec& s, std::span<const double> w, std::span<const double> b,
                        std::size_t x_size, std::size_t in_len, std::size_t y_size,
                        std::size_t out_len) {
  if (s.kernel == 0 || s.stride == 0 || s.in_ch == 0 || s.out_ch == 0)
    throw ParameterError("stage dimensions must be positive");
  if (w.size() != s.weight_count() || b.size() != s.out_ch)
    throw ShapeError("stage parameter buffers do not match the spec");
  if (x_size != in_len * s.in_ch || y_size != out_len * s.out_ch)
    throw ShapeError("stage data buffers do not match the given lengths");
  if (!s.transposed && out_len != conv_out_len(in_len, s.stride))
    throw ShapeError("plain stage output length must be ceil(in/stride)");
}

}  // namespace

std::size_t conv_out_len(std::size_t in_len, std::size_t stride) {
  if (stride == 0) throw ParameterError("stride must be positive");
  return (in_len + stride - 1) / stride;
}

void apply_layer(const LayerSpec& s, std::span<const double> w, std::span<const double> b,
                 std::span<const double> x, std::size_t in_len,
                 std::span<double> y, std::size_t out_len) {
  check_layer_shapes(s, w, b, x.size(), in_len, y.size(), out_len);
  const std::size_t ic_n = s.in_ch, oc_n = s.out_ch;

  if (!s.transposed) {
    const std::ptrdiff_t pad = pad_left_for(in_len, out_len, s.kernel, s.stride);
    for (std::size_t t = 0; t < out_len; ++t) {
      double* yt = &y[t * oc_n];
      for (std::size_t oc = 0; oc < oc_n; ++oc) yt[oc] = b[oc];
      const auto base = static_cast<std::ptrdiff_t>(t * s.stride) - pad;
      for (std::size_t u = 0; u < s.kernel; ++u) {
        const std::ptrdiff_t p = base + static_cast<std::ptrdiff_t>(u);
        if (p < 0 || p >= static_cast<std::ptrdiff_t>(in_len)) continue;
        const double* xp = &x[static_cast<std::size_t>(p) * ic_n];
        for (std::size_t ic = 0; ic < ic_n; ++ic) {
          const double xv = xp[ic];
          const double* wr = &w[(u * ic_n + ic) * oc_n];
          for (std::size_t oc = 0; oc < oc_n; ++oc) yt[oc] += xv * wr[oc];
        }
      }
    }
    return;
  }

  const std::ptrdiff_t pad = pad_left_for(out_len, in_len, s.kernel, s.stride);
  for (std::size_t t = 0; t < out_len; ++t) {
    double* yt = &y[t * oc_n];
    for (std::size_t oc = 0; oc < oc_n; ++oc) yt[oc] = b[oc];
  }
  for (std::size_t p = 0; p < in_len; ++p) {
    const double* xp = &x[p * ic_n];
    const auto base = static_cast<std::ptrdiff_t>(p * s.stride) - pad;
    for (std::size_t u = 0; u < s.kernel; ++u) {
      const std::ptrdiff_t t = base + static_cast<std::ptrdiff_t>(u);
      if (t < 0 || t >= static_cast<std::ptrdiff_t>(out_len)) continue;
      double* yt = &y[static_cast<std::size_t>(t) * oc_n];
      for (std::size_t ic = 0; ic < ic_n; ++ic) {
        const double xv = xp[ic];
        const double* wr = &w[(u * ic_n + ic) * oc_n];
        for (std::size_t oc = 0; oc < oc_n; ++oc) yt[oc] += xv * wr[oc];
      }
    }
  }
}

void layer_backward(const LayerSpec& s, std::span<const double> w,
                    std::span<const double> x, std::size_t in_len,
                    std::span<const double> gy, std::size_t out_len,
                    std::span<double> gx, std::span<double> gw, std::span<double> gb) {
  check_layer_shapes(s, w, gb, x.size(), in_len, gy.size(), out_len);
  if (gx.size() != x.size() || gw.size() != w.size())
    throw ShapeError("gradient buffers do not match the stage");
  const std::size_t ic_n = s.in_ch, oc_n = s.out_ch;
  std::fill(gx.begin(), gx.end(), 0.0);

  if (!s.transposed) {
    const std::ptrdiff_t pad = pad_left_for(in_len, out_len, s.kernel, s.stride);
    for (std::size_t t = 0; t < out_len; ++t) {
      const double* gyt = &gy[t * oc_n];
      for (std::size_t oc = 0; oc < oc_n; ++oc) gb[oc] += gyt[oc];
      const auto base = static_cast<std::ptrdiff_t>(t * s.stride) - pad;
      for (std::size_t u = 0; u < s.kernel; ++u) {
        const std::ptrdiff_t p = base + static_cast<std::ptrdiff_t>(u);
        if (p < 0 || p >= static_cast<std::ptrdiff_t>(in_len)) continue;
        const double* xp = &x[static_cast<std::size_t>(p) * ic_n];
        double* gxp = &gx[static_cast<std::size_t>(p) * ic_n];
        for (std::size_t ic = 0; ic < ic_n; ++ic) {
          const double xv = xp[ic];
          const double* wr = &w[(u * ic_n + ic) * oc_n];
          double* gwr = &gw[(u * ic_n + ic) * oc_n];
          double acc = 0.0;
          for (std::size_t oc = 0; oc < oc_n; ++oc) {
            acc += gyt[oc] * wr[oc];
            gwr[oc] += xv * gyt[oc];
          }
          gxp[ic] += acc;
        }
      }
    }
    return;
  }

  const std::ptrdiff_t pad = pad_left_for(out_len, in_len, s.kernel, s.stride);
  for (std::size_t t = 0; t < out_len; ++t) {
    const double* gyt = &gy[t * oc_n];
    for (std::size_t oc = 0; oc < oc_n; ++oc) gb[oc] += gyt[oc];
  }
  for (std::size_t p = 0; p < in_len; ++p) {
    const double* xp = &x[p * ic_n];
    double* gxp = &gx[p * ic_n];
    const auto base = static_cast<std::ptrdiff_t>(p * s.stride) - pad;
    for (std::size_t u = 0; u < s.kernel; ++u) {
      const std::ptrdiff_t t = base + static_cast<std::ptrdiff_t>(u);
      if (t < 0 || t >= static_cast<std::ptrdiff_t>(out_len)) continue;
      const double* gyt = &gy[static_cast<std::size_t>(t) * oc_n];
      for (std::size_t ic = 0; ic < ic_n; ++ic) {
        const double xv = xp[ic];
        const double* wr = &w[(u * ic_n + ic) * oc_n];
        double* gwr = &gw[(u * ic_n + ic) * oc_n];
        double acc = 0.0;
        for (std::size_t oc = 0; oc < oc_n; ++oc) {
          acc += gyt[oc] * wr[oc];
          gwr[oc] += xv * gyt[oc];
        }
        gxp[ic] += acc;
      }
    }
  }
}

std::size_t Model::weight_offset(std::size_t layer) const {
  std::size_t off = 0;
  for (std::size_t i = 0; i < layer; ++i) off += specs[i].weight_count() + specs[i].out_ch;
  return off;
}

std::size_t Model::bias_offset(std::size_t layer) const {
  return weight_offset(layer) + specs[layer].weight_count();
}

void Model::check_consistent() const {
  if (specs.empty()) throw ShapeError("model has no stages");
  if (bounds.size() != specs.size() + 1) throw ShapeError("stage boundary list is malformed");
  if (bounds.front() != input_len) throw ShapeError("first boundary must equal the input length");
  std::size_t count = 0;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const LayerSpec& s = specs[i];
    if (i > 0 && s.in_ch != specs[i - 1].out_ch)
      throw ShapeError("channel chain breaks at stage " + std::to_string(i));
    if (!s.transposed && bounds[i + 1] != conv_out_len(bounds[i], s.stride))
      throw ShapeError("plain stage boundary mismatch at stage " + std::to_string(i));
    if (bounds[i + 1] == 0) throw ShapeError("zero-length stage boundary");
    count += s.weight_count() + s.out_ch;
  }
  if (params.size() != count) throw ShapeError("parameter vector does not match the stage specs");
}

Model make_model(std::size_t input_len, std::uint64_t seed) {
  if (input_len < 16) throw ParameterError("input length must be at least 16");
  Model m;
  m.input_len = input_len;
  m.specs = {
      {1, 32, 5, 2, false, true},
      {32, 1, 5, 2, false, true},
      {1, 32, 5, 2, true, true},
      {32, 1, 5, 2, true, false},
  };
  const std::size_t l1 = conv_out_len(input_len, 2);
  const std::size_t l2 = conv_out_len(l1, 2);
  m.bounds = {input_len, l1, l2, l1, input_len};

  Rng rng(seed);
  for (const LayerSpec& s : m.specs) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(s.in_ch * s.kernel));
    for (std::size_t i = 0; i < s.weight_count(); ++i)
      m.params.push_back(rng.uniform(-bound, bound));
    for (std::size_t i = 0; i < s.out_ch; ++i) m.params.push_back(rng.uniform(-bound, bound));
  }
  m.check_consistent();
  return m;
}

const std::vector<double>& forward(const Model& m, std::span<const double> x, Trace& t) {
  m.check_consistent();
  if (x.size() != m.input_len * m.specs.front().in_ch)
    throw ShapeError("input does not match the model length");

  t.input.assign(x.begin(), x.end());
  t.pre.resize(m.specs.size());
  t.act.resize(m.specs.size());

  const std::vector<double>* cur = &t.input;
  for (std::size_t i = 0; i < m.specs.size(); ++i) {
    const LayerSpec& s = m.specs[i];
    const std::size_t out_n = m.bounds[i + 1] * s.out_ch;
    t.pre[i].resize(out_n);
    apply_layer(s, std::span(m.params).subspan(m.weight_offset(i), s.weight_count()),
                std::span(m.params).subspan(m.bias_offset(i), s.out_ch),
                std::span(*cur), m.bounds[i], std::span(t.pre[i]), m.bounds[i + 1]);
    t.act[i].resize(out_n);
    if (s.relu) {
      for (std::size_t j = 0; j < out_n; ++j) t.act[i][j] = std::max(t.pre[i][j], 0.0);
    } else {
      t.act[i] = t.pre[i];
    }
    cur = &t.act[i];
  }
  return t.act.back();
}

void backward(const Model& m, Trace& t, std::span<const double> g_out,
              std::span<double> grads) {
  if (grads.size() != m.params.size()) throw ShapeError("gradient buffer does not match params");
  if (t.act.size() != m.specs.size() || t.pre.size() != m.specs.size())
    throw ShapeError("trace does not match the model; run forward first");
  if (g_out.size() != m.bounds.back() * m.specs.back().out_ch)
    throw ShapeError("output gradient does not match the reconstruction length");

  t.g_a.assign(g_out.begin(), g_out.end());
  for (std::size_t ri = m.specs.size(); ri-- > 0;) {
    const LayerSpec& s = m.specs[ri];
    const std::vector<double>& pre = t.pre[ri];
    t.g_pre.resize(pre.size());
    if (s.relu) {
      for (std::size_t j = 0; j < pre.size(); ++j)
        t.g_pre[j] = pre[j] > 0.0 ? t.g_a[j] : 0.0;
    } else {
      t.g_pre = t.g_a;
    }
    const std::vector<double>& x_in = ri == 0 ? t.input : t.act[ri - 1];
    t.g_b.resize(x_in.size());
    layer_backward(s, std::span(m.params).subspan(m.weight_offset(ri), s.weight_count()),
                   std::span(x_in), m.bounds[ri], std::span(t.g_pre), m.bounds[ri + 1],
                   std::span(t.g_b),
                   grads.subspan(m.weight_offset(ri), s.weight_count()),
                   grads.subspan(m.bias_offset(ri), s.out_ch));
    std::swap(t.g_a, t.g_b);
  }
}

LossTerms window_loss(std::span<const double> v, std::span<const double> v_hat,
                      std::span<const double> c, const ellipse::Conic& trajectory,
                      double reg_weight) {
  if (v.size() != v_hat.size() || v.size() != c.size())
    throw ShapeError("loss inputs must share one length");
  if (reg_weight < 0.0) throw ParameterError("regularization weight must be non-negative");
  LossTerms out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double d = v[k] - v_hat[k];
    out.recon += d * d;
    const double r = trajectory.evaluate(v_hat[k], c[k]);
    out.reg += r * r;
  }
  out.total = out.recon + reg_weight * out.reg;
  return out;
}

void window_loss_grad(std::span<const double> v, std::span<const double> v_hat,
                      std::span<const double> c, const ellipse::Conic& trajectory,
                      double reg_weight, std::span<double> g) {
  if (v.size() != v_hat.size() || v.size() != c.size() || g.size() != v.size())
    throw ShapeError("loss gradient inputs must share one length");
  const auto& q = trajectory.coeffs;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double r = trajectory.evaluate(v_hat[k], c[k]);
    g[k] = -2.0 * (v[k] - v_hat[k]) +
           reg_weight * 2.0 * r * (2.0 * q[0] * v_hat[k] + q[1] * c[k] + q[3]);
  }
}

}  // namespace hifd::cae
