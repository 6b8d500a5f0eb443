#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "hifd/feeder.hpp"
#include "hifd/phasor.hpp"
#include "hifd/rng.hpp"
#include "hifd/window.hpp"

namespace hifd {

// Sampled sinusoid x[k] = amp * cos(2*pi*f0*k/fs + phase0 - lag).
// Throws SamplingError unless fs > 2*f0.
std::vector<double> synth_waveform(double amp, double freq, double fs, std::size_t n,
                                   double phase0 = 0.0, double lag = 0.0);

// Two-channel steady waveform for one node as seen by the grid solver.
struct NodeWaveform {
  std::vector<double> voltage;
  std::vector<double> current;
};

NodeWaveform synth_node(const Phasor& p, double freq, double fs, std::size_t n,
                        double phase0 = 0.0);

// Randomized two-branch arc description. Ranges are inclusive; the negative
// threshold is stored as a magnitude and applied with its sign in hif_step.
struct HifParams {
  std::pair<double, double> rp_range{600.0, 1400.0};
  std::pair<double, double> rn_range{600.0, 1400.0};
  std::pair<double, double> vp_range{5e3, 6e3};
  std::pair<double, double> vn_range{7e3, 8e3};
  double resample_rate = 1000.0;  // parameter redraw rate, Hz

  void validate() const;
};

struct HifSample {
  double rp = 0.0;
  double rn = 0.0;
  double vp = 0.0;  // positive conduction threshold, > 0
  double vn = 0.0;  // negative conduction threshold magnitude, > 0
};

HifSample draw_hif_sample(const HifParams& params, Rng& rng);

struct ArcStep {
  double current = 0.0;
  double held_voltage = 0.0;
};

// One step of the two-branch arc: conduct through rp above +vp, through rn
// below -vn, otherwise no current and the fault-point voltage holds its
// previous value.
ArcStep hif_step(double v_fault, double prev_held, const HifSample& s);

// Steady operation of every measured node over n samples.
StreamSet simulate_normal(const FeederModel& feeder, double fs, std::size_t n,
                          double phase0 = 0.0);

// Arc fault at fault_node, active for the whole capture. Superimposes the
// fault current's voltage drop across the shared source path onto every
// measured node and adds the fault current to upstream line flows.
StreamSet inject_hif(const FeederModel& feeder, NodeId fault_node, const HifParams& params,
                     double fs, std::size_t n, std::uint64_t seed, double phase0 = 0.0);

struct CapSwitchParams {
  double q_var = 1e6;        // reactive supply switched in, var
  std::size_t t_on = 0;      // sample index of the switch
  double damping = 300.0;    // ring envelope decay, 1/s
  double ring_freq = 600.0;  // ring frequency, Hz
  double ring_gain = 50.0;   // ring amplitude per volt of steady-state step
};

// Shunt capacitor energization: steady pre/post solutions joined at t_on with
// an exponentially damped voltage ring scaled by each node's step size.
StreamSet inject_cap_switch(const FeederModel& feeder, NodeId node, const CapSwitchParams& params,
                            double fs, std::size_t n, double phase0 = 0.0);

struct LoadSwitchParams {
  double delta_p = 4e5;       // active power step, W
  double delta_q = 1.8e5;     // reactive power step, var
  std::size_t t_on = 0;       // sample index of the switch
  double blend_cycles = 1.0;  // exponential settling constant, base cycles
};

// Bulk load pickup: steady pre/post solutions blended exponentially after t_on.
StreamSet inject_load_switch(const FeederModel& feeder, NodeId node,
                             const LoadSwitchParams& params, double fs, std::size_t n,
                             double phase0 = 0.0);

// Additive white gaussian noise at the given SNR, measured against each
// channel's own power. +infinity leaves the window untouched.
void add_noise(Window& w, double snr_db, std::uint64_t seed);

// Cuts one node's stream into fixed-size windows at the given stride and
// labels each by event overlap. A window overlapping two different non-normal
// events is ambiguous and rejected.
std::vector<Window> windowize(const StreamSet& set, NodeId node, std::size_t window_len,
                              std::size_t stride);

// Per-channel min/max normalization into [-1, 1]. Records the scalings on the
// window. Throws DegeneracyError if a channel is constant.
void normalize_range(Window& w);
void denormalize(Window& w);

// Keeps every factor-th sample. Requires factor >= 1, factor | w.size() and a
// remaining length of at least 16.
Window downsample(const Window& w, std::size_t factor);

}  // namespace hifd
