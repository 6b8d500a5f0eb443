#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "doctest.h"
#include "hifd/cae.hpp"
#include "hifd/errors.hpp"
#include "hifd/rng.hpp"

using namespace hifd;
using cae::LayerSpec;

namespace {

// Direct per-output-sample convolution, written as the contract reads: output
// tap t gathers kernel taps around t*stride with centered zero padding.
std::vector<double> naive_plain_conv(const LayerSpec& s, std::span<const double> w,
                                     std::span<const double> b, std::span<const double> x,
                                     std::size_t in_len, std::size_t out_len) {
  const auto need = static_cast<std::ptrdiff_t>((out_len - 1) * s.stride + s.kernel);
  const std::ptrdiff_t pad =
      std::max<std::ptrdiff_t>(need - static_cast<std::ptrdiff_t>(in_len), 0) / 2;
  std::vector<double> y(out_len * s.out_ch);
  for (std::size_t t = 0; t < out_len; ++t)
    for (std::size_t oc = 0; oc < s.out_ch; ++oc) {
      double acc = b[oc];
      for (std::size_t u = 0; u < s.kernel; ++u) {
        const std::ptrdiff_t p =
            static_cast<std::ptrdiff_t>(t * s.stride) - pad + static_cast<std::ptrdiff_t>(u);
        if (p < 0 || p >= static_cast<std::ptrdiff_t>(in_len)) continue;
        for (std::size_t ic = 0; ic < s.in_ch; ++ic)
          acc += x[static_cast<std::size_t>(p) * s.in_ch + ic] *
                 w[(u * s.in_ch + ic) * s.out_ch + oc];
      }
      y[t * s.out_ch + oc] = acc;
    }
  return y;
}

std::vector<double> random_vec(Rng& rng, std::size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * rng.uniform(-1.0, 1.0);
  return v;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// One-cycle two-channel window lying exactly on the given phasor's conic.
struct SmoothWindow {
  std::vector<double> v, c;
  ellipse::Conic conic;
};

SmoothWindow smooth_window(std::size_t n) {
  const Phasor p{0.8, 0.7, 1.2};
  SmoothWindow out;
  out.conic = ellipse::conic_from_phasor(p);
  out.v.resize(n);
  out.c.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double th = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    out.v[k] = p.v_amp * std::cos(th);
    out.c[k] = p.c_amp * std::cos(th - p.phase_lag);
  }
  return out;
}

double model_loss(const cae::Model& m, cae::Trace& t, const SmoothWindow& sw, double lambda) {
  const auto& v_hat = cae::forward(m, sw.v, t);
  return cae::window_loss(sw.v, v_hat, sw.c, sw.conic, lambda).total;
}

// Central finite difference of the scalar window loss in one parameter.
double fd_grad(cae::Model m, cae::Trace& t, const SmoothWindow& sw, double lambda,
               std::size_t i) {
  const double h = 1e-5 * std::max(1.0, std::abs(m.params[i]));
  const double p0 = m.params[i];
  m.params[i] = p0 + h;
  const double up = model_loss(m, t, sw, lambda);
  m.params[i] = p0 - h;
  const double dn = model_loss(m, t, sw, lambda);
  return (up - dn) / (2.0 * h);
}

}  // namespace

TEST_CASE("plain stage matches the direct convolution") {
  Rng rng(31);
  for (int it = 0; it < 100; ++it) {
    LayerSpec s;
    s.in_ch = 1 + rng.uniform_index(4);
    s.out_ch = 1 + rng.uniform_index(4);
    s.kernel = 1 + rng.uniform_index(7);
    s.stride = 1 + rng.uniform_index(3);
    s.transposed = false;
    const std::size_t in_len = 8 + rng.uniform_index(25);
    const std::size_t out_len = cae::conv_out_len(in_len, s.stride);

    const auto w = random_vec(rng, s.weight_count());
    const auto b = random_vec(rng, s.out_ch);
    const auto x = random_vec(rng, in_len * s.in_ch);
    std::vector<double> y(out_len * s.out_ch);
    cae::apply_layer(s, w, b, x, in_len, y, out_len);

    const auto expect = naive_plain_conv(s, w, b, x, in_len, out_len);
    for (std::size_t i = 0; i < y.size(); ++i)
      REQUIRE(y[i] == doctest::Approx(expect[i]).epsilon(1e-12));
  }
}

TEST_CASE("plain stage is the exact adjoint of its backward input gradient") {
  // With zero bias the stage is linear, y = C x, so <C x, g> must equal
  // <x, C^T g> for any g: the inner-product identity pins layer_backward's gx.
  Rng rng(32);
  for (int it = 0; it < 100; ++it) {
    LayerSpec s;
    s.in_ch = 1 + rng.uniform_index(3);
    s.out_ch = 1 + rng.uniform_index(3);
    s.kernel = 1 + rng.uniform_index(6);
    s.stride = 1 + rng.uniform_index(3);
    const std::size_t in_len = 6 + rng.uniform_index(30);
    const std::size_t out_len = cae::conv_out_len(in_len, s.stride);

    const auto w = random_vec(rng, s.weight_count());
    const std::vector<double> zero_b(s.out_ch, 0.0);
    const auto x = random_vec(rng, in_len * s.in_ch);
    const auto gy = random_vec(rng, out_len * s.out_ch);

    std::vector<double> y(out_len * s.out_ch);
    cae::apply_layer(s, w, zero_b, x, in_len, y, out_len);

    std::vector<double> gx(x.size()), gw(w.size(), 0.0), gb(s.out_ch, 0.0);
    cae::layer_backward(s, w, x, in_len, gy, out_len, gx, gw, gb);

    REQUIRE(dot(y, gy) == doctest::Approx(dot(x, gx)).epsilon(1e-10));
  }
}

TEST_CASE("transposed stage scatters exactly like the mirrored plain gradient") {
  // A transposed stage (B -> A channels) must agree with the input gradient of
  // the plain stage (A -> B) whose per-tap channel blocks are transposed.
  Rng rng(33);
  for (int it = 0; it < 100; ++it) {
    const std::size_t a = 1 + rng.uniform_index(3);
    const std::size_t b = 1 + rng.uniform_index(3);
    const std::size_t kernel = 1 + rng.uniform_index(6);
    const std::size_t stride = 1 + rng.uniform_index(3);
    const std::size_t long_len = 8 + rng.uniform_index(30);
    const std::size_t short_len = cae::conv_out_len(long_len, stride);

    LayerSpec plain{a, b, kernel, stride, false, true};
    LayerSpec trans{b, a, kernel, stride, true, true};

    const auto wp = random_vec(rng, plain.weight_count());
    std::vector<double> wt(trans.weight_count());
    for (std::size_t u = 0; u < kernel; ++u)
      for (std::size_t ia = 0; ia < a; ++ia)
        for (std::size_t ib = 0; ib < b; ++ib)
          wt[(u * b + ib) * a + ia] = wp[(u * a + ia) * b + ib];

    const auto xin = random_vec(rng, short_len * b);
    const std::vector<double> zero_bias(a, 0.0);
    std::vector<double> y(long_len * a);
    cae::apply_layer(trans, wt, zero_bias, xin, short_len, y, long_len);

    // Plain backward with gy := xin; its gx is the scatter result.
    const std::vector<double> dummy_x(long_len * a, 0.0);
    std::vector<double> gx(long_len * a), gw(wp.size(), 0.0), gb(b, 0.0);
    cae::layer_backward(plain, wp, dummy_x, long_len, xin, short_len, gx, gw, gb);

    for (std::size_t i = 0; i < y.size(); ++i)
      REQUIRE(y[i] == doctest::Approx(gx[i]).epsilon(1e-12));
  }
}

TEST_CASE("unit kernels pass data through and pick strided samples") {
  LayerSpec s{1, 1, 1, 1, false, false};
  const std::vector<double> w{1.0}, b{0.0};
  const std::vector<double> x{3.0, -1.0, 4.0, -1.5};
  std::vector<double> y(4);
  cae::apply_layer(s, w, b, x, 4, y, 4);
  CHECK(y == x);

  LayerSpec s2{1, 1, 1, 2, false, false};
  std::vector<double> y2(2);
  cae::apply_layer(s2, w, b, x, 4, y2, 2);
  CHECK(y2 == std::vector<double>{3.0, 4.0});
}

TEST_CASE("stage shape validation refuses mismatched buffers") {
  LayerSpec s{1, 2, 3, 2, false, true};
  const std::vector<double> w(s.weight_count(), 0.1);
  const std::vector<double> b(2, 0.0);
  const std::vector<double> x(10, 0.0);
  std::vector<double> y(5 * 2);
  CHECK_NOTHROW(cae::apply_layer(s, w, b, x, 10, y, 5));
  CHECK_THROWS_AS(cae::apply_layer(s, w, b, x, 10, y, 4), ShapeError);
  std::vector<double> short_w(2, 0.0);
  CHECK_THROWS_AS(cae::apply_layer(s, short_w, b, x, 10, y, 5), ShapeError);
  std::vector<double> y_bad(9);
  CHECK_THROWS_AS(cae::apply_layer(s, w, b, x, 10, y_bad, 5), ShapeError);
  CHECK_THROWS_AS((void)cae::conv_out_len(10, 0), ParameterError);
}

TEST_CASE("standard model has the pinned shape for any window length") {
  for (std::size_t n : {16u, 32u, 64u, 100u, 512u}) {
    const auto m = cae::make_model(n, 5);
    CHECK(m.param_count() == 706);
    REQUIRE(m.bounds.size() == 5);
    const std::size_t l1 = (n + 1) / 2;
    const std::size_t l2 = (l1 + 1) / 2;
    CHECK(m.bounds[0] == n);
    CHECK(m.bounds[1] == l1);
    CHECK(m.bounds[2] == l2);
    CHECK(m.bounds[3] == l1);
    CHECK(m.bounds[4] == n);

    cae::Trace t;
    const auto x = smooth_window(n).v;
    const auto& y = cae::forward(m, x, t);
    CHECK(y.size() == n);
  }
  CHECK_THROWS_AS((void)cae::make_model(8, 5), ParameterError);
}

TEST_CASE("model initialization is seeded and bounded") {
  const auto a = cae::make_model(64, 9);
  const auto b = cae::make_model(64, 9);
  const auto c = cae::make_model(64, 10);
  CHECK(a.params == b.params);
  CHECK(a.params != c.params);

  for (std::size_t layer = 0; layer < a.specs.size(); ++layer) {
    const auto& s = a.specs[layer];
    const double bound = 1.0 / std::sqrt(static_cast<double>(s.in_ch * s.kernel));
    for (std::size_t i = 0; i < s.weight_count() + s.out_ch; ++i) {
      const double w = a.params[a.weight_offset(layer) + i];
      REQUIRE(std::abs(w) <= bound);
    }
  }
}

TEST_CASE("relu stages clamp below zero in forward and gate the gradient") {
  cae::Model m;
  m.input_len = 16;
  m.specs = {LayerSpec{1, 1, 1, 1, false, true}};
  m.bounds = {16, 16};
  m.params = {2.0, 0.5};  // pre = 2 x + 0.5
  m.check_consistent();

  std::vector<double> x(16);
  for (std::size_t i = 0; i < 16; ++i) x[i] = (i % 2 == 0) ? 1.0 : -1.0;
  cae::Trace t;
  const auto& y = cae::forward(m, x, t);
  for (std::size_t i = 0; i < 16; ++i)
    REQUIRE(y[i] == (i % 2 == 0 ? 2.5 : 0.0));

  std::vector<double> g_out(16, 1.0);
  std::vector<double> grads(2, 0.0);
  cae::backward(m, t, g_out, grads);
  // Only the 8 active taps contribute: dL/dw = sum of active x = 8, dL/db = 8.
  CHECK(grads[0] == doctest::Approx(8.0));
  CHECK(grads[1] == doctest::Approx(8.0));

  // A second backward call accumulates on top.
  cae::forward(m, x, t);
  cae::backward(m, t, g_out, grads);
  CHECK(grads[0] == doctest::Approx(16.0));
  CHECK(grads[1] == doctest::Approx(16.0));
}

TEST_CASE("analytic gradient matches finite differences on a linear model") {
  // All-linear variant isolates the chain rule from relu kinks; central
  // differences are trustworthy to many digits here.
  auto m = cae::make_model(32, 17);
  for (auto& s : m.specs) s.relu = false;
  const auto sw = smooth_window(32);
  const double lambda = 200.0;

  cae::Trace t;
  const auto& v_hat = cae::forward(m, sw.v, t);
  std::vector<double> g_out(v_hat.size());
  cae::window_loss_grad(sw.v, v_hat, sw.c, sw.conic, lambda, g_out);
  std::vector<double> grads(m.param_count(), 0.0);
  cae::backward(m, t, g_out, grads);

  cae::Trace scratch;
  for (std::size_t i = 0; i < m.param_count(); ++i) {
    const double fd = fd_grad(m, scratch, sw, lambda, i);
    const double denom = std::max({1.0, std::abs(fd), std::abs(grads[i])});
    REQUIRE(std::abs(fd - grads[i]) / denom < 1e-6);
  }
}

TEST_CASE("analytic gradient matches finite differences on the standard model") {
  const auto m = cae::make_model(32, 21);
  const auto sw = smooth_window(32);
  const double lambda = 200.0;

  cae::Trace t;
  const auto& v_hat = cae::forward(m, sw.v, t);
  std::vector<double> g_out(v_hat.size());
  cae::window_loss_grad(sw.v, v_hat, sw.c, sw.conic, lambda, g_out);
  std::vector<double> grads(m.param_count(), 0.0);
  cae::backward(m, t, g_out, grads);

  cae::Trace scratch;
  for (std::size_t i = 0; i < m.param_count(); ++i) {
    const double fd = fd_grad(m, scratch, sw, lambda, i);
    const double denom = std::max({1.0, std::abs(fd), std::abs(grads[i])});
    REQUIRE(std::abs(fd - grads[i]) / denom < 1e-4);
  }
}

TEST_CASE("window loss matches the hand computation") {
  const std::vector<double> v{1.0, 0.0};
  const std::vector<double> v_hat{0.5, 0.25};
  const std::vector<double> c{0.0, 1.0};
  ellipse::Conic circle{{-1.0, 0.0, -1.0, 0.0, 0.0}};

  const auto terms = cae::window_loss(v, v_hat, c, circle, 200.0);
  CHECK(terms.recon == doctest::Approx(0.3125).epsilon(1e-15));
  CHECK(terms.reg == doctest::Approx(0.56640625).epsilon(1e-15));
  CHECK(terms.total == doctest::Approx(0.3125 + 200.0 * 0.56640625).epsilon(1e-15));

  std::vector<double> g(2);
  cae::window_loss_grad(v, v_hat, c, circle, 200.0, g);
  CHECK(g[0] == doctest::Approx(-301.0).epsilon(1e-12));
  CHECK(g[1] == doctest::Approx(13.0).epsilon(1e-12));

  // Zero weight reduces the loss to the plain reconstruction error.
  const auto plain = cae::window_loss(v, v_hat, c, circle, 0.0);
  CHECK(plain.total == plain.recon);
  CHECK_THROWS_AS((void)cae::window_loss(v, v_hat, c, circle, -1.0), ParameterError);
  const std::vector<double> tooshort{1.0};
  CHECK_THROWS_AS((void)cae::window_loss(v, tooshort, c, circle, 1.0), ShapeError);
}

TEST_CASE("window loss gradient agrees with finite differences") {
  Rng rng(44);
  const auto sw = smooth_window(24);
  std::vector<double> v_hat(24);
  for (auto& x : v_hat) x = rng.uniform(-1.0, 1.0);

  std::vector<double> g(24);
  cae::window_loss_grad(sw.v, v_hat, sw.c, sw.conic, 37.0, g);
  for (std::size_t k = 0; k < 24; ++k) {
    const double h = 1e-6;
    auto up = v_hat, dn = v_hat;
    up[k] += h;
    dn[k] -= h;
    const double fd = (cae::window_loss(sw.v, up, sw.c, sw.conic, 37.0).total -
                       cae::window_loss(sw.v, dn, sw.c, sw.conic, 37.0).total) /
                      (2.0 * h);
    REQUIRE(g[k] == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("model entry points validate their buffers") {
  const auto m = cae::make_model(32, 3);
  cae::Trace t;
  const std::vector<double> wrong(31, 0.0);
  CHECK_THROWS_AS((void)cae::forward(m, wrong, t), ShapeError);

  const std::vector<double> x(32, 0.1);
  cae::forward(m, x, t);
  std::vector<double> g_out(32, 1.0);
  std::vector<double> bad_grads(10, 0.0);
  CHECK_THROWS_AS(cae::backward(m, t, g_out, bad_grads), ShapeError);
  std::vector<double> bad_gout(31, 1.0);
  std::vector<double> grads(m.param_count(), 0.0);
  CHECK_THROWS_AS(cae::backward(m, t, bad_gout, grads), ShapeError);

  cae::Model broken = m;
  broken.params.pop_back();
  CHECK_THROWS_AS(broken.check_consistent(), ShapeError);
}
