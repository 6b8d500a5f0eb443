#include "hifd/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <set>

#include "hifd/errors.hpp"

namespace hifd {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_nyquist(double freq, double fs) {
  if (!(fs > 2.0 * freq))
    throw SamplingError("sample rate " + std::to_string(fs) + " cannot carry " +
                        std::to_string(freq) + " Hz");
}

// Instantaneous value of an rms phasor: sqrt(2) * Re(P * e^{j(w k/fs + phase0)}).
double instant(const std::complex<double>& p, double w_over_fs, std::size_t k, double phase0) {
  const double angle = w_over_fs * static_cast<double>(k) + phase0;
  return std::numbers::sqrt2 * (p.real() * std::cos(angle) - p.imag() * std::sin(angle));
}

StreamSet empty_capture(const FeederModel& feeder, double fs, std::size_t n) {
  check_nyquist(feeder.source.frequency, fs);
  StreamSet out;
  out.fs = fs;
  out.base_freq = feeder.source.frequency;
  for (NodeId id : measured_nodes(feeder)) {
    NodeStream s;
    s.node = id;
    s.voltage.resize(n);
    s.current.resize(n);
    out.streams.push_back(std::move(s));
  }
  return out;
}

void fill_steady(StreamSet& set, const SteadyState& ss, std::size_t begin, std::size_t end,
                 double phase0) {
  const double w_over_fs = kTwoPi * ss.frequency / set.fs;
  for (auto& s : set.streams) {
    const std::complex<double> v = ss.voltage_at(s.node);
    const std::complex<double> c = ss.current_at(s.node);
    for (std::size_t k = begin; k < end; ++k) {
      s.voltage[k] = instant(v, w_over_fs, k, phase0);
      s.current[k] = instant(c, w_over_fs, k, phase0);
    }
  }
}

}  // namespace

std::vector<double> synth_waveform(double amp, double freq, double fs, std::size_t n,
                                   double phase0, double lag) {
  if (!(freq > 0.0)) throw ParameterError("waveform frequency must be positive");
  check_nyquist(freq, fs);
  std::vector<double> x(n);
  const double w_over_fs = kTwoPi * freq / fs;
  for (std::size_t k = 0; k < n; ++k)
    x[k] = amp * std::cos(w_over_fs * static_cast<double>(k) + phase0 - lag);
  return x;
}

NodeWaveform synth_node(const Phasor& p, double freq, double fs, std::size_t n, double phase0) {
  validate(p);
  NodeWaveform out;
  out.voltage = synth_waveform(p.v_amp, freq, fs, n, phase0, 0.0);
  out.current = synth_waveform(p.c_amp, freq, fs, n, phase0, p.phase_lag);
  return out;
}

void HifParams::validate() const {
  auto check = [](const std::pair<double, double>& r, const char* what) {
    if (!(r.first > 0.0) || !(r.second >= r.first))
      throw ParameterError(std::string(what) + " range must satisfy 0 < lo <= hi");
  };
  check(rp_range, "positive-branch resistance");
  check(rn_range, "negative-branch resistance");
  check(vp_range, "positive threshold");
  check(vn_range, "negative threshold magnitude");
  if (!(resample_rate > 0.0)) throw ParameterError("redraw rate must be positive");
}

HifSample draw_hif_sample(const HifParams& params, Rng& rng) {
  HifSample s;
  s.rp = rng.uniform(params.rp_range.first, params.rp_range.second);
  s.rn = rng.uniform(params.rn_range.first, params.rn_range.second);
  s.vp = rng.uniform(params.vp_range.first, params.vp_range.second);
  s.vn = rng.uniform(params.vn_range.first, params.vn_range.second);
  return s;
}

ArcStep hif_step(double v_fault, double prev_held, const HifSample& s) {
  if (v_fault > s.vp) return {(v_fault - s.vp) / s.rp, v_fault};
  if (v_fault < -s.vn) return {(v_fault + s.vn) / s.rn, v_fault};
  return {0.0, prev_held};
}

StreamSet simulate_normal(const FeederModel& feeder, double fs, std::size_t n, double phase0) {
  StreamSet out = empty_capture(feeder, fs, n);
  const SteadyState ss = solve_steady_state(feeder);
  fill_steady(out, ss, 0, n, phase0);
  return out;
}

StreamSet inject_hif(const FeederModel& feeder, NodeId fault_node, const HifParams& params,
                     double fs, std::size_t n, std::uint64_t seed, double phase0) {
  params.validate();
  StreamSet out = empty_capture(feeder, fs, n);
  const SteadyState ss = solve_steady_state(feeder);
  fill_steady(out, ss, 0, n, phase0);

  const auto ids = measured_nodes(feeder);
  if (std::find(ids.begin(), ids.end(), fault_node) == ids.end())
    throw TopologyError("fault node " + std::to_string(fault_node) + " is not measurable");

  // Per stream: shared source-path impedance with the fault and whether its
  // upstream line carries the fault current.
  std::vector<std::pair<double, double>> shared(out.streams.size());
  std::vector<bool> feeds(out.streams.size());
  for (std::size_t i = 0; i < out.streams.size(); ++i) {
    shared[i] = shared_path_impedance(feeder, out.streams[i].node, fault_node);
    feeds[i] = upstream_line_feeds(feeder, out.streams[i].node, fault_node);
  }

  const std::complex<double> v_fault = ss.voltage_at(fault_node);
  const double w_over_fs = kTwoPi * ss.frequency / fs;
  const auto interval =
      static_cast<std::size_t>(std::max(1.0, std::ceil(fs / params.resample_rate)));

  // The arc is already burning when the capture begins: one warm-up cycle
  // ahead of sample zero settles the held voltage and the inductive term, so
  // no spurious ignition edge leaks into the window.
  const auto cycle = static_cast<std::size_t>(std::ceil(fs / ss.frequency));
  const std::size_t warmup = ((cycle + interval - 1) / interval) * interval;

  Rng rng(seed);
  HifSample arc{};
  double held = instant(v_fault, w_over_fs, 0, phase0 - w_over_fs * static_cast<double>(warmup));
  double prev_current = 0.0;
  for (std::size_t j = 0; j < warmup + n; ++j) {
    if (j % interval == 0) arc = draw_hif_sample(params, rng);
    const double vf =
        instant(v_fault, w_over_fs, j, phase0 - w_over_fs * static_cast<double>(warmup));
    const ArcStep step = hif_step(vf, held, arc);
    held = step.held_voltage;
    const double di = step.current - prev_current;
    prev_current = step.current;
    if (j < warmup) continue;
    const std::size_t k = j - warmup;
    for (std::size_t i = 0; i < out.streams.size(); ++i) {
      const auto [r_sh, l_sh] = shared[i];
      out.streams[i].voltage[k] -= r_sh * step.current + l_sh * di * fs;
      if (feeds[i]) out.streams[i].current[k] += step.current;
    }
  }
  out.events.push_back({Label::Hif, 0, n});
  return out;
}

StreamSet inject_cap_switch(const FeederModel& feeder, NodeId node, const CapSwitchParams& params,
                            double fs, std::size_t n, double phase0) {
  if (!(params.q_var > 0.0)) throw ParameterError("switched reactive supply must be positive");
  if (params.t_on >= n) throw ScheduleError("switch instant beyond capture");
  if (!(params.damping >= 0.0) || !(params.ring_gain >= 0.0))
    throw ParameterError("ring envelope parameters must be non-negative");
  if (!(params.ring_freq > 0.0)) throw ParameterError("ring frequency must be positive");
  // No Nyquist guard here: a recorder sampling below twice the ring frequency
  // sees the alias of the continuous transient, which is what the sampled
  // formula below produces.

  StreamSet out = empty_capture(feeder, fs, n);
  const SteadyState pre = solve_steady_state(feeder);

  FeederModel post_model = feeder;
  post_model.loads[node].reactive_power -= params.q_var;
  const SteadyState post = solve_steady_state(post_model);

  fill_steady(out, pre, 0, params.t_on, phase0);
  fill_steady(out, post, params.t_on, n, phase0);

  // Damped ring on top of the new steady point, scaled by each node's step.
  for (auto& s : out.streams) {
    const double step = std::abs(post.voltage_at(s.node) - pre.voltage_at(s.node));
    const double amp = params.ring_gain * std::numbers::sqrt2 * step;
    for (std::size_t k = params.t_on; k < n; ++k) {
      const double dt = static_cast<double>(k - params.t_on) / fs;
      s.voltage[k] += amp * std::exp(-params.damping * dt) * std::cos(kTwoPi * params.ring_freq * dt);
    }
  }
  out.events.push_back({Label::CapacitorSwitch, params.t_on, n});
  return out;
}

StreamSet inject_load_switch(const FeederModel& feeder, NodeId node,
                             const LoadSwitchParams& params, double fs, std::size_t n,
                             double phase0) {
  if (params.t_on >= n) throw ScheduleError("switch instant beyond capture");
  if (!(params.blend_cycles > 0.0)) throw ParameterError("settling constant must be positive");

  StreamSet out = empty_capture(feeder, fs, n);
  const SteadyState pre = solve_steady_state(feeder);

  FeederModel post_model = feeder;
  post_model.loads[node].active_power += params.delta_p;
  post_model.loads[node].reactive_power += params.delta_q;
  const SteadyState post = solve_steady_state(post_model);

  fill_steady(out, pre, 0, params.t_on, phase0);

  const double w_over_fs = kTwoPi * pre.frequency / fs;
  const double tau = fs * params.blend_cycles / feeder.source.frequency;
  for (auto& s : out.streams) {
    const std::complex<double> v0 = pre.voltage_at(s.node);
    const std::complex<double> c0 = pre.current_at(s.node);
    const std::complex<double> v1 = post.voltage_at(s.node);
    const std::complex<double> c1 = post.current_at(s.node);
    for (std::size_t k = params.t_on; k < n; ++k) {
      const double w = 1.0 - std::exp(-static_cast<double>(k - params.t_on) / tau);
      s.voltage[k] = (1.0 - w) * instant(v0, w_over_fs, k, phase0) +
                     w * instant(v1, w_over_fs, k, phase0);
      s.current[k] = (1.0 - w) * instant(c0, w_over_fs, k, phase0) +
                     w * instant(c1, w_over_fs, k, phase0);
    }
  }
  out.events.push_back({Label::LoadSwitch, params.t_on, n});
  return out;
}

void add_noise(Window& w, double snr_db, std::uint64_t seed) {
  if (w.size() == 0) throw ShapeError("cannot add noise to an empty window");
  if (std::isinf(snr_db) && snr_db > 0.0) return;
  if (std::isnan(snr_db)) throw ParameterError("snr must be a number or +inf");

  Rng rng(seed);
  auto corrupt = [&](std::vector<double>& x) {
    double power = 0.0;
    for (double v : x) power += v * v;
    power /= static_cast<double>(x.size());
    if (!(power > 0.0)) throw DegeneracyError("zero-power channel has no snr");
    const double sigma = std::sqrt(power / std::pow(10.0, snr_db / 10.0));
    for (double& v : x) v += sigma * rng.gaussian();
  };
  corrupt(w.voltage);
  corrupt(w.current);
}

std::vector<Window> windowize(const StreamSet& set, NodeId node, std::size_t window_len,
                              std::size_t stride) {
  if (window_len == 0 || stride == 0) throw ParameterError("window length and stride must be positive");
  const NodeStream& s = set.stream_for(node);
  const std::size_t len = s.voltage.size();

  std::vector<Window> out;
  std::uint64_t index = 0;
  for (std::size_t start = 0; start + window_len <= len; start += stride, ++index) {
    std::set<Label> hits;
    for (const auto& ev : set.events) {
      if (ev.label == Label::Normal) continue;
      if (ev.begin < start + window_len && ev.end > start) hits.insert(ev.label);
    }
    if (hits.size() > 1)
      throw ScheduleError("window at sample " + std::to_string(start) +
                          " overlaps two different events");
    Window w;
    w.node = node;
    w.voltage.assign(s.voltage.begin() + static_cast<std::ptrdiff_t>(start),
                     s.voltage.begin() + static_cast<std::ptrdiff_t>(start + window_len));
    w.current.assign(s.current.begin() + static_cast<std::ptrdiff_t>(start),
                     s.current.begin() + static_cast<std::ptrdiff_t>(start + window_len));
    w.fs = set.fs;
    w.label = hits.empty() ? Label::Normal : *hits.begin();
    w.window_index = index;
    out.push_back(std::move(w));
  }
  return out;
}

namespace {

ChannelScaling scale_into_unit(std::vector<double>& x) {
  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  const double span = hi - lo;
  if (!(span > 1e-12 * std::max({1.0, std::abs(lo), std::abs(hi)})))
    throw DegeneracyError("constant channel cannot be range-normalized");
  ChannelScaling s{(hi + lo) / 2.0, span / 2.0};
  for (double& v : x) v = (v - s.mid) / s.halfspan;
  return s;
}

}  // namespace

void normalize_range(Window& w) {
  if (w.size() == 0) throw ShapeError("cannot normalize an empty window");
  if (w.v_scale || w.c_scale) throw ParameterError("window is already normalized");
  w.v_scale = scale_into_unit(w.voltage);
  w.c_scale = scale_into_unit(w.current);
}

void denormalize(Window& w) {
  if (!w.v_scale || !w.c_scale) throw ParameterError("window carries no scaling to undo");
  for (double& v : w.voltage) v = v * w.v_scale->halfspan + w.v_scale->mid;
  for (double& c : w.current) c = c * w.c_scale->halfspan + w.c_scale->mid;
  w.v_scale.reset();
  w.c_scale.reset();
}

Window downsample(const Window& w, std::size_t factor) {
  if (factor == 0) throw ParameterError("downsample factor must be positive");
  if (factor == 1) return w;
  if (w.size() % factor != 0)
    throw ParameterError("downsample factor must divide the window length");
  const std::size_t out_len = w.size() / factor;
  if (out_len < 16) throw ParameterError("downsampled window would be shorter than 16 samples");

  Window out = w;
  out.voltage.resize(out_len);
  out.current.resize(out_len);
  for (std::size_t i = 0; i < out_len; ++i) {
    out.voltage[i] = w.voltage[i * factor];
    out.current[i] = w.current[i * factor];
  }
  out.fs = w.fs / static_cast<double>(factor);
  return out;
}

}  // namespace hifd
