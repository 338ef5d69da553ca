#pragma once

#include <cmath>
#include <stdexcept>

#include "eitstore/units.hpp"

namespace eitstore {

/// Signal envelope: smoothly increasing exponential followed by an abruptly
/// decaying exponential, continuous at the peak.
struct PulseShape {
  double rise_tau = 0.0;   // s
  double fall_tau = 0.0;   // s
  double peak_time = 0.0;  // s
  complexd peak_rabi{0.0, 0.0};  // rad/s

  void validate() const {
    if (!(fall_tau > 0.0) || !(rise_tau > fall_tau))
      throw std::invalid_argument("PulseShape: requires rise_tau > fall_tau > 0");
    if (!std::isfinite(peak_time)) throw std::invalid_argument("PulseShape: non-finite peak_time");
  }
};

inline complexd pulse_envelope(double t, const PulseShape& shape) {
  const double arg = (t <= shape.peak_time) ? (t - shape.peak_time) / shape.rise_tau
                                            : -(t - shape.peak_time) / shape.fall_tau;
  return shape.peak_rabi * std::exp(arg);
}

/// Write/store/retrieve schedule. The coupling is on outside
/// [t_switch_off, t_switch_off + storage_time]; the signal input is the pulse
/// envelope gated on smoothly from gate_start (the ideal rising exponential
/// extends to -infinity, the gate truncates it without a step).
struct SequenceTimeline {
  double t_pump_end = 0.0;    // end of any explicit pumping phase, s
  double t_switch_off = 0.0;  // coupling switch-off = start of storage, s
  double storage_time = 0.0;  // T, s
  PulseShape pulse;
  double switch_ramp = 0.0;  // coupling on/off ramp duration (0 = instantaneous), s
  double gate_start = 0.0;   // signal gate start, s
  double gate_ramp = 0.0;    // signal gate smoothstep width, s
  double duration = 0.0;     // total simulated time, s

  double t_switch_on() const { return t_switch_off + storage_time; }

  void validate() const {
    pulse.validate();
    if (storage_time < 0.0) throw std::invalid_argument("SequenceTimeline: storage_time must be >= 0");
    if (switch_ramp < 0.0 || gate_ramp < 0.0)
      throw std::invalid_argument("SequenceTimeline: ramp durations must be >= 0");
    // t_switch_off beyond the record means the coupling never switches
    // (constant-coupling runs).
    if (!(t_pump_end <= gate_start && gate_start < t_switch_off))
      throw std::invalid_argument(
          "SequenceTimeline: requires t_pump_end <= pulse start < t_switch_off");
    if (t_switch_off < duration && !(t_switch_on() < duration))
      throw std::invalid_argument(
          "SequenceTimeline: t_switch_off + storage_time must stay inside the record");
  }

  /// Coupling on/off factor in [0,1].
  double coupling_gate(double t) const {
    auto ramp_down = [this](double x) {
      if (switch_ramp <= 0.0) return x < 0.0 ? 1.0 : 0.0;
      return x < 0.0 ? 1.0 : (x >= switch_ramp ? 0.0 : 1.0 - x / switch_ramp);
    };
    if (t < t_switch_off) return 1.0;
    if (t < t_switch_on()) return ramp_down(t - t_switch_off);
    return 1.0 - ramp_down(t - t_switch_on());
  }

  /// Signal gate: smoothstep from 0 at gate_start to 1 at gate_start + gate_ramp.
  double signal_gate(double t) const {
    if (t <= gate_start) return 0.0;
    if (gate_ramp <= 0.0 || t >= gate_start + gate_ramp) return 1.0;
    const double x = (t - gate_start) / gate_ramp;
    return x * x * (3.0 - 2.0 * x);
  }

  complexd signal_input(double t) const { return signal_gate(t) * pulse_envelope(t, pulse); }
};

}  // namespace eitstore
