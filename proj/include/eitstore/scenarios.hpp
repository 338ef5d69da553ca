#pragma once

#include <atomic>
#include <cmath>
#include <future>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <type_traits>
#include <vector>

#include "eitstore/homodyne.hpp"
#include "eitstore/linear_propagate.hpp"
#include "eitstore/params.hpp"
#include "eitstore/phase.hpp"
#include "eitstore/simulate.hpp"
#include "eitstore/susceptibility.hpp"

namespace eitstore {

/// Helium D1 parameter set of the experiment: Doppler-effective optical
/// width 0.8 GHz, Raman decay 14 kHz, 6 cm cell at optical depth 3.5.
/// Gamma_0 and gamma_t are not critical (Gamma_D dominates) and sit at
/// 1.6 MHz and 10 kHz.
inline PhysicalParams paper_params(double delta = angular_from_hz(1.0e9),
                                   complexd coupling_rabi = complexd{angular_from_hz(20.0e6), 0.0},
                                   double optical_depth = 3.5, double eta_scale = 1.0) {
  PhysicalParams p;
  p.gamma0 = angular_from_hz(1.6e6);
  p.gamma_t = angular_from_hz(10.0e3);
  p.gamma_raman = angular_from_hz(14.0e3);
  p.gamma_opt = angular_from_hz(0.8e9);
  p.cell_length = 0.06;
  p.set_detuning(delta);
  p.eta_s = p.eta_c = eta_scale * derive_eta_from_optical_depth(optical_depth, p);
  p.omega_c_in = coupling_rabi;
  p.validate();
  return p;
}

/// Entrance coupling Rabi amplitude at the default calibration: the
/// transparency window |Omega_c|^2 / Gamma_D sits at 2 pi x 500 kHz, i.e.
/// Omega_c = 2 pi x 20 MHz for Gamma_D = 2 pi x 0.8 GHz (18 mW, 3 mm beam).
inline constexpr double default_coupling_rabi_hz = 20.0e6;

/// The simulations take an averaged coupling intensity over the cell as the
/// input parameter (stand-in for the strong measured coupling absorption the
/// homogeneous model cannot reproduce). The ratio is calibrated so the
/// storage sequence reproduces the reported leak scale of roughly 10-20% of
/// the input pulse energy.
inline constexpr double averaged_intensity_ratio = 1.0 / 8.0;

struct AnalysisPlan {
  std::size_t scan_k = 64;       // piezo positions per ensemble
  double contrast_alpha = 2.0;
  double threshold = 0.05;       // validity threshold (fraction of branch peak)
  double i_c_ratio = 0.5;        // i_c relative to the peak leak intensity
  double retrieval_guard = 100e-9;  // phi_eit reported from this long after switch-on
  long homodyne_stride = 1;      // extra decimation of the synthesized records
  NoiseSpec noise;               // default: none (deterministic runs)
  double notch_period = 0.0;     // > 0 runs the artifact filter
};

struct Scenario {
  std::string name;
  PhysicalParams params;  // omega_c_in already at its effective (averaged) value
  SequenceTimeline timeline;
  double dt = 0.0;
  Integrator integrator = Integrator::euler;
  InitMode init = InitMode::steady_state;
  long snapshot_stride = 100'000;
  int exit_stride = 1;
  AnalysisPlan analysis;
  unsigned long seed = 0;
  // manifest bookkeeping
  double optical_depth = 3.5;
  double eta_scale = 1.0;
  std::string coupling_mode = "averaged";
  double coupling_entrance_rabi_hz = default_coupling_rabi_hz;
  double signal_ratio = 0.05;  // Omega_s peak / effective Omega_c

  SimulationConfig solver_config() const {
    SimulationConfig cfg;
    cfg.params = params;
    cfg.timeline = timeline;
    cfg.dt = dt;
    cfg.integrator = integrator;
    cfg.init = init;
    cfg.snapshot_stride = snapshot_stride;
    cfg.exit_stride = exit_stride;
    return cfg;
  }
};

namespace detail {

inline SequenceTimeline storage_timeline(complexd signal_peak, double storage_time) {
  SequenceTimeline tl;
  tl.pulse.rise_tau = 2.0e-6;
  tl.pulse.fall_tau = 150.0e-9;
  tl.pulse.peak_time = 7.0e-6;
  tl.pulse.peak_rabi = signal_peak;
  tl.gate_start = 1.0e-6;
  tl.gate_ramp = 0.5e-6;
  // The sharp fall immediately precedes switch-off (3 fall constants, so all
  // but 0.25% of its energy has entered the cell). The stored spin wave then
  // carries the fall's broadband content, which is what makes the retrieved
  // phase time dependent.
  tl.t_switch_off = tl.pulse.peak_time + 3.0 * tl.pulse.fall_tau;
  tl.storage_time = storage_time;
  tl.duration = 12.5e-6 + std::max(0.0, storage_time - 0.6e-6);
  tl.validate();
  return tl;
}

}  // namespace detail

/// Named presets.
///   eit-desk    desk-scale grid (dt = 20 ps), paper parameters, Delta = 1 GHz
///   eit-paper   the full paper grid (dt = 2 ps, 100 spatial steps); slow
///   raman       far-detuned regime: 10 x eta, 200 mW coupling, paper grid, rk2
///   od-check    coupling off, pumped medium, weak CW probe (resonant optical depth)
inline Scenario make_scenario(std::string_view name) {
  Scenario s;
  s.name = std::string(name);
  const double entrance = angular_from_hz(default_coupling_rabi_hz);

  if (name == "eit-desk" || name == "eit-paper") {
    const double averaged = entrance * std::sqrt(averaged_intensity_ratio);
    s.params = paper_params(angular_from_hz(0.2e9), complexd{averaged, 0.0});
    s.timeline = detail::storage_timeline(complexd{averaged * s.signal_ratio, 0.0}, 0.6e-6);
    s.dt = (name == "eit-desk") ? 2.0e-11 : 2.0e-12;
    s.exit_stride = (name == "eit-desk") ? 1 : 10;
    s.analysis.homodyne_stride = (name == "eit-desk") ? 100 : 100;
    s.coupling_mode = "averaged";
    return s;
  }
  if (name == "raman") {
    const double coupling = entrance * std::sqrt(200.0 / 18.0);  // 200 mW vs 18 mW
    s.params = paper_params(angular_from_hz(10.0e9), complexd{coupling, 0.0}, 3.5, 10.0);
    s.eta_scale = 10.0;
    s.coupling_mode = "entrance";
    s.timeline = detail::storage_timeline(complexd{coupling * s.signal_ratio, 0.0}, 0.6e-6);
    s.dt = 2.0e-12;
    s.integrator = Integrator::rk2;
    s.exit_stride = 10;
    s.analysis.homodyne_stride = 100;
    return s;
  }
  if (name == "od-check") {
    s.params = paper_params(0.0, complexd{0.0, 0.0});
    s.params.gamma_t = angular_from_hz(10.0);  // keep the pumped two-level limit clean
    s.params.validate();
    s.init = InitMode::pure_p1;
    s.timeline.pulse.rise_tau = 1.0;  // quasi-CW probe
    s.timeline.pulse.fall_tau = 1e-3;
    s.timeline.pulse.peak_time = 3.0e-6;
    s.timeline.pulse.peak_rabi = complexd{angular_from_hz(0.2e6), 0.0};
    s.timeline.gate_start = 0.2e-6;
    s.timeline.gate_ramp = 0.3e-6;
    s.timeline.t_switch_off = 1.0e9;  // far beyond the record: coupling never switches
    s.timeline.storage_time = 0.0;
    s.timeline.duration = 3.0e-6;
    s.timeline.validate();
    s.dt = 2.0e-11;
    s.snapshot_stride = 50'000;
    s.coupling_mode = "entrance";
    return s;
  }
  throw std::invalid_argument("unknown scenario '" + std::string(name) + "'");
}

inline std::vector<std::string> scenario_names() {
  return {"eit-desk", "eit-paper", "raman", "od-check"};
}

struct ScenarioResult {
  Scenario scenario;
  SimulationRecord record;
  double ref_phase = 0.0;  // exit coupling phase during the write window
  PhaseTrace direct_leak;       // from the complex fields
  PhaseTrace direct_retrieved;
  PhaseTrace direct_phi_eit;
  HomodyneAnalysis homodyne;    // measurement pipeline on synthesized records
  double input_energy = 0.0;
  double leak_energy = 0.0;
  double retrieved_energy = 0.0;

  double leak_fraction() const { return input_energy > 0.0 ? leak_energy / input_energy : 0.0; }
  double retrieved_fraction() const {
    return input_energy > 0.0 ? retrieved_energy / input_energy : 0.0;
  }
};

/// Mean exit coupling phase over the write window.
inline double coupling_reference_phase(const SimulationRecord& rec, double t_off) {
  complexd acc{0.0, 0.0};
  for (std::size_t k = 0; k < rec.omega_c_exit.size(); ++k)
    if (rec.time_at(k) < t_off) acc += rec.omega_c_exit[k];
  if (std::abs(acc) == 0.0) return 0.0;
  return std::arg(acc);
}

inline ScenarioResult run_scenario(const Scenario& s) {
  ScenarioResult r;
  r.scenario = s;
  r.record = simulate_sequence(s.solver_config());

  const double t_off = s.timeline.t_switch_off;
  const double t_on = s.timeline.t_switch_on();
  const double t_end = s.timeline.duration;
  const double dt_out = r.record.dt_out;
  const bool switches = std::isfinite(t_off) && t_off < t_end;

  r.input_energy = energy_in_window(r.record.omega_s_input, dt_out, 0.0, t_end);
  r.leak_energy = energy_in_window(r.record.omega_s_exit, dt_out, 0.0, switches ? t_off : t_end);
  r.retrieved_energy =
      switches ? energy_in_window(r.record.omega_s_exit, dt_out, t_on, t_end) : 0.0;

  r.ref_phase = coupling_reference_phase(r.record, switches ? t_off : t_end);
  if (!switches) return r;  // constant-coupling runs: no branch analysis

  // The extra phase is reported only once the retrieved intensity has built
  // up (the first ~100 ns after switch-on are too dim to fit). Its reference
  // is the leak's flat plateau: once the input's sharp fall has begun, the
  // dispersed tail sweeps the exit phase, so samples past the pulse peak are
  // excluded from the reference (not from the leak trace itself).
  const double t_report = t_on + s.analysis.retrieval_guard;
  const double t_plateau = std::min(t_off, s.timeline.pulse.peak_time);
  r.direct_leak = field_phase_trace(r.record.omega_s_exit, dt_out, r.ref_phase, 0.0, t_off,
                                    s.analysis.threshold);
  r.direct_retrieved = field_phase_trace(r.record.omega_s_exit, dt_out, r.ref_phase, t_on,
                                         t_end, s.analysis.threshold);
  r.direct_phi_eit = compute_phi_eit(r.direct_leak.window(0.0, t_plateau),
                                     r.direct_retrieved.window(t_report, t_end));

  // Synthesized homodyne measurement on a decimated copy of the exit record.
  const long stride = std::max<long>(1, s.analysis.homodyne_stride);
  std::vector<complexd> exit_dec;
  std::vector<double> t_dec;
  for (std::size_t k = 0; k < r.record.omega_s_exit.size(); k += stride) {
    exit_dec.push_back(r.record.omega_s_exit[k]);
    t_dec.push_back(r.record.time_at(k));
  }
  double peak_leak = 0.0;
  for (std::size_t k = 0; k < exit_dec.size(); ++k)
    if (t_dec[k] < t_off) peak_leak = std::max(peak_leak, std::norm(exit_dec[k]));
  const double i_c = s.analysis.i_c_ratio * peak_leak;
  const complexd coupling_ref = std::polar(1.0, r.ref_phase);

  HomodyneEnsemble ensemble = synthesize_records(
      exit_dec, t_dec, coupling_ref, uniform_scan_phases(s.analysis.scan_k), i_c,
      s.analysis.contrast_alpha, t_off, t_on, s.analysis.noise);
  AnalyzeOptions opt;
  opt.threshold = s.analysis.threshold;
  opt.notch_period = s.analysis.notch_period;
  opt.median_smoothing = s.analysis.noise.white_sigma > 0.0;
  r.homodyne = analyze_ensemble(ensemble, opt);
  r.homodyne.phi_eit =
      compute_phi_eit(r.homodyne.leak.window(0.0, t_plateau),
                      r.homodyne.retrieved.window(t_report, t_end), &r.homodyne.leak_flat_warning);
  return r;
}

/// Run independent jobs over a bounded worker pool, preserving order.
template <typename Job>
std::vector<std::invoke_result_t<Job, std::size_t>> parallel_map(std::size_t n, Job job,
                                                                 unsigned workers) {
  using Result = std::invoke_result_t<Job, std::size_t>;
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  std::vector<Result> results(n);
  std::vector<std::future<void>> futures;
  std::atomic<std::size_t> next{0};
  const unsigned n_threads = std::min<std::size_t>(workers, n);
  for (unsigned w = 0; w < n_threads; ++w)
    futures.push_back(std::async(std::launch::async, [&]() {
      for (std::size_t k = next.fetch_add(1); k < n; k = next.fetch_add(1)) results[k] = job(k);
    }));
  for (auto& f : futures) f.get();  // propagates the first exception
  return results;
}

struct DetuningScan {
  std::vector<double> deltas;  // rad/s
  std::vector<ScenarioResult> runs;
};

/// One storage sequence + measurement pipeline per optical detuning, all at
/// two-photon resonance, scheduled over the worker pool.
inline DetuningScan run_detuning_scan(const std::vector<double>& deltas, const Scenario& base,
                                      unsigned workers = 0) {
  DetuningScan scan;
  scan.deltas = deltas;
  scan.runs = parallel_map(
      deltas.size(),
      [&](std::size_t k) {
        Scenario s = base;
        s.name = base.name + "-delta" + std::to_string(hz_from_angular(deltas[k]));
        s.params.set_detuning(deltas[k]);
        return run_scenario(s);
      },
      workers);
  return scan;
}

struct StorageVsPropagation {
  ScenarioResult storage;             // branch (i): full solver with storage
  std::vector<complexd> linear_exit;  // branch (ii): susceptibility propagation
  PhaseTrace storage_shifted;         // leak kept in place, retrieval shifted by -T
  PhaseTrace linear_trace;
  double rms_difference = 0.0;        // over the joint validity mask
  std::size_t compared_samples = 0;
  bool endpoint_warning = false;
};

/// Fig.-5-style comparison: the same pulse through (i) a storage sequence and
/// (ii) constant-coupling spectral propagation; the retrieval branch of (i)
/// is time-shifted by -T onto the propagation axis.
inline StorageVsPropagation run_storage_vs_propagation(double delta, const Scenario& base) {
  StorageVsPropagation out;
  Scenario s = base;
  s.params.set_detuning(delta);
  out.storage = run_scenario(s);

  const SimulationRecord& rec = out.storage.record;
  // Linearize around the same pumped medium the solver run starts from.
  const AtomicState ss = pump_to_steady_state(s.params, s.params.omega_c_in);
  const MediumPopulations pops{ss.pop_m1, ss.pop_e, ss.pop_p1};
  LinearPropagation lin = linear_propagate(rec.omega_s_input, rec.dt_out, s.params, pops);
  out.endpoint_warning = lin.endpoint_warning;
  out.linear_exit = std::move(lin.output);

  const double t_off = s.timeline.t_switch_off;
  const double t_end = s.timeline.duration;
  out.linear_trace = field_phase_trace(out.linear_exit, rec.dt_out, 0.0, 0.0, t_end,
                                       s.analysis.threshold);

  // Branch (i) on the propagation time axis: leak as-is, retrieval shifted by -T.
  const long shift = std::lround(s.timeline.storage_time / rec.dt_out);
  const PhaseTrace& leak = out.storage.direct_leak;
  const PhaseTrace& retr = out.storage.direct_retrieved;
  PhaseTrace shifted;
  shifted.t = out.linear_trace.t;
  shifted.delta_phi.assign(shifted.t.size(), 0.0);
  shifted.valid.assign(shifted.t.size(), 0);
  for (std::size_t k = 0; k < shifted.t.size(); ++k) {
    if (k < leak.size() && leak.valid[k] && leak.t[k] < t_off) {
      shifted.delta_phi[k] = leak.delta_phi[k];
      shifted.valid[k] = 1;
    }
    const std::size_t k_src = k + static_cast<std::size_t>(shift);
    if (k_src < retr.size() && retr.valid[k_src]) {
      shifted.delta_phi[k] = retr.delta_phi[k_src];
      shifted.valid[k] = 1;
    }
  }
  out.storage_shifted = std::move(shifted);

  double sum_sq = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < out.storage_shifted.size(); ++k) {
    if (!out.storage_shifted.valid[k] || !out.linear_trace.valid[k]) continue;
    const double d =
        principal_angle(out.storage_shifted.delta_phi[k] - out.linear_trace.delta_phi[k]);
    sum_sq += d * d;
    ++n;
  }
  out.compared_samples = n;
  out.rms_difference = n > 0 ? std::sqrt(sum_sq / static_cast<double>(n)) : 0.0;
  return out;
}

/// Far-detuned scan at {10, 15, 20} GHz on the raman preset.
inline DetuningScan run_raman_scan(const Scenario& base, unsigned workers = 0) {
  return run_detuning_scan(
      {angular_from_hz(10.0e9), angular_from_hz(15.0e9), angular_from_hz(20.0e9)}, base, workers);
}

}  // namespace eitstore
