#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "eitstore/atomic_state.hpp"
#include "eitstore/grid.hpp"
#include "eitstore/lax.hpp"
#include "eitstore/params.hpp"
#include "eitstore/pulse.hpp"
#include "eitstore/steady_state.hpp"
#include "eitstore/units.hpp"

namespace eitstore {

enum class Integrator { euler, rk2 };
enum class InitMode { steady_state, feeding_ratio, pure_p1 };

/// Raised when the co-integration produces non-finite values.
struct NumericalFailure : std::runtime_error {
  long step;
  explicit NumericalFailure(long step_, const std::string& what_)
      : std::runtime_error(what_), step(step_) {}
};

struct SimulationConfig {
  PhysicalParams params;
  SequenceTimeline timeline;
  double dt = 0.0;                // s; dz = c dt follows
  Integrator integrator = Integrator::euler;
  InitMode init = InitMode::steady_state;
  long snapshot_stride = 100'000;  // 0 disables full-grid snapshots
  int exit_stride = 1;             // record exit-face envelopes every k-th step
  double state_eps = 1e-6;         // tolerance for population-bound warnings
};

struct Snapshot {
  long step = 0;
  double t = 0.0;
  std::vector<AtomicState> states;
  std::vector<complexd> omega_c;
  std::vector<complexd> omega_s;
};

struct SimulationRecord {
  int nz = 0;
  double dz = 0.0;
  double dt = 0.0;      // solver step
  double dt_out = 0.0;  // sampling step of the recorded traces
  std::vector<complexd> omega_s_exit;   // Omega_s(L, t_k)
  std::vector<complexd> omega_c_exit;   // Omega_c(L, t_k)
  std::vector<complexd> omega_s_input;  // Omega_s(0, t_k), the injected record
  std::vector<Snapshot> snapshots;
  long population_warnings = 0;  // state-invariant violations beyond eps, over all snapshots
  double max_trace_error = 0.0;  // max |tr - 1| seen at snapshots

  double time_at(std::size_t k) const { return static_cast<double>(k) * dt_out; }
};

/// Stability factor of the chosen explicit integrator on the stiffest linear
/// rates of the Bloch system. Must be < 1 for a bounded scheme.
inline double integrator_amplification(const PhysicalParams& p, double dt, Integrator method) {
  auto factor = [&](complexd lambda) {
    const complexd z = -lambda * dt;
    const complexd r = (method == Integrator::euler) ? 1.0 + z : 1.0 + z + 0.5 * z * z;
    return std::abs(r);
  };
  return std::max({factor({p.gamma_t, 0.0}),
                   factor({p.gamma0 + p.gamma_t, 0.0}),
                   factor({p.gamma_raman, -p.delta_r}),
                   factor({p.gamma_opt, p.delta_c}),
                   factor({p.gamma_opt, p.delta_s})});
}

inline void check_integrator_stability(const PhysicalParams& p, double dt, Integrator method) {
  const double amp = integrator_amplification(p, dt, method);
  if (amp >= 1.0)
    throw std::invalid_argument(
        "integrator unstable at dt=" + std::to_string(dt) + " s (amplification " +
        std::to_string(amp) + " >= 1); reduce dt, lower the detuning, or switch to rk2");
}

/// Co-integrates the Bloch equations (explicit stepping per slice) with the
/// propagation equation (Lax stepping of both envelopes) through a full
/// write/store/retrieve sequence. Every slice starts from the pump steady
/// state unless configured otherwise.
inline SimulationRecord simulate_sequence(const SimulationConfig& cfg) {
  cfg.params.validate();
  cfg.timeline.validate();
  check_integrator_stability(cfg.params, cfg.dt, cfg.integrator);
  if (cfg.exit_stride < 1) throw std::invalid_argument("simulate_sequence: exit_stride must be >= 1");

  const PhysicalParams& p = cfg.params;
  const SequenceTimeline& tl = cfg.timeline;
  FieldGrid grid = FieldGrid::make(cfg.dt, p.cell_length, tl.duration);
  const int npts = grid.nz + 1;
  const double dt = grid.dt;
  const double dz = grid.dz;

  std::vector<AtomicState> states(npts);
  AtomicState init;
  switch (cfg.init) {
    case InitMode::steady_state:
      init = pump_to_steady_state(p, p.omega_c_in * tl.coupling_gate(0.0));
      break;
    case InitMode::feeding_ratio:
      init.pop_m1 = 1.0 / 3.0;
      init.pop_p1 = 2.0 / 3.0;
      break;
    case InitMode::pure_p1:
      init.pop_p1 = 1.0;
      break;
  }
  std::fill(states.begin(), states.end(), init);

  const complexd wc0 = p.omega_c_in * tl.coupling_gate(0.0);
  std::fill(grid.omega_c.begin(), grid.omega_c.end(), wc0);
  std::fill(grid.omega_s.begin(), grid.omega_s.end(), complexd{0.0, 0.0});
  grid.omega_s[0] = tl.signal_input(0.0);

  std::vector<complexd> next_c(npts), next_s(npts), sig_c(npts), sig_s(npts);

  SimulationRecord rec;
  rec.nz = grid.nz;
  rec.dz = dz;
  rec.dt = dt;
  rec.dt_out = dt * cfg.exit_stride;
  const std::size_t n_out = static_cast<std::size_t>(grid.nt / cfg.exit_stride) + 1;
  rec.omega_s_exit.reserve(n_out);
  rec.omega_c_exit.reserve(n_out);
  rec.omega_s_input.reserve(n_out);

  auto record_row = [&](const FieldGrid& g) {
    rec.omega_s_exit.push_back(g.omega_s[grid.nz]);
    rec.omega_c_exit.push_back(g.omega_c[grid.nz]);
    rec.omega_s_input.push_back(g.omega_s[0]);
  };
  auto take_snapshot = [&](long step, double t) {
    Snapshot snap;
    snap.step = step;
    snap.t = t;
    snap.states = states;
    snap.omega_c = grid.omega_c;
    snap.omega_s = grid.omega_s;
    for (const AtomicState& s : states) {
      rec.population_warnings += state_violations(s, cfg.state_eps);
      rec.max_trace_error = std::max(rec.max_trace_error, std::abs(s.trace() - 1.0));
    }
    rec.snapshots.push_back(std::move(snap));
  };

  record_row(grid);
  if (cfg.snapshot_stride > 0) take_snapshot(0, 0.0);

  constexpr long divergence_check_stride = 4096;
  const bool rk2 = cfg.integrator == Integrator::rk2;
  const double half_dt = 0.5 * dt;

  std::vector<complexd> sig_c_new(npts), sig_s_new(npts);

  for (long n = 0; n < grid.nt; ++n) {
    const double t_next = static_cast<double>(n + 1) * dt;

    for (int j = 0; j < npts; ++j) {
      sig_c[j] = std::conj(states[j].coh_c);  // sigma~_e-1 drives Omega_c
      sig_s[j] = std::conj(states[j].coh_s);  // sigma~_e1 drives Omega_s
    }

    // Bloch update first (fields vary slowly against dt), then the field
    // step with the source centered along the characteristic.
    if (rk2) {
      for (int j = 0; j < npts; ++j) {
        const AtomicState k1 =
            detail::bloch_rhs_unchecked(states[j], grid.omega_c[j], grid.omega_s[j], p);
        const AtomicState mid = states[j] + half_dt * k1;
        states[j] += dt * detail::bloch_rhs_unchecked(mid, grid.omega_c[j], grid.omega_s[j], p);
      }
    } else {
      for (int j = 0; j < npts; ++j)
        states[j] += dt * detail::bloch_rhs_unchecked(states[j], grid.omega_c[j], grid.omega_s[j], p);
    }
    for (int j = 0; j < npts; ++j) {
      sig_c_new[j] = std::conj(states[j].coh_c);
      sig_s_new[j] = std::conj(states[j].coh_s);
    }

    const complexd wc_in = p.omega_c_in * tl.coupling_gate(t_next);
    const complexd ws_in = tl.signal_input(t_next);
    lax_step(grid.omega_c, sig_c, sig_c_new, dz, dt, p.eta_c, wc_in, next_c);
    lax_step(grid.omega_s, sig_s, sig_s_new, dz, dt, p.eta_s, ws_in, next_s);

    grid.omega_c.swap(next_c);
    grid.omega_s.swap(next_s);

    if ((n + 1) % cfg.exit_stride == 0) record_row(grid);
    if (cfg.snapshot_stride > 0 && (n + 1) % cfg.snapshot_stride == 0) take_snapshot(n + 1, t_next);

    if ((n + 1) % divergence_check_stride == 0) {
      const AtomicState& probe = states[npts / 2];
      if (!probe.finite() || !std::isfinite(grid.omega_s[grid.nz].real()) ||
          !std::isfinite(grid.omega_c[grid.nz].real()))
        throw NumericalFailure(n + 1, "simulate_sequence: non-finite values at step " +
                                          std::to_string(n + 1));
    }
  }

  const AtomicState& last = states[npts / 2];
  if (!last.finite())
    throw NumericalFailure(grid.nt, "simulate_sequence: non-finite final state");
  return rec;
}

/// Discrete energy (arbitrary units) of a complex envelope trace over the
/// half-open time window [t_a, t_b).
inline double energy_in_window(const std::vector<complexd>& trace, double dt_out, double t_a,
                               double t_b) {
  double e = 0.0;
  for (std::size_t k = 0; k < trace.size(); ++k) {
    const double t = static_cast<double>(k) * dt_out;
    if (t >= t_a && t < t_b) e += std::norm(trace[k]);
  }
  return e * dt_out;
}

}  // namespace eitstore
