#pragma once

#include <cmath>
#include <stdexcept>

#include "eitstore/atomic_state.hpp"
#include "eitstore/params.hpp"

namespace eitstore {

/// Steady state of the Bloch equations with the signal off, solved directly
/// from rhs = 0. With Omega_s = 0 the Raman and signal-leg coherences are
/// undriven and vanish; the remaining populations + coupling coherence form a
/// linear system with the closed-form solution below. W is the optical
/// pumping rate out of |-1>.
inline AtomicState pump_to_steady_state(const PhysicalParams& p, complexd omega_c) {
  p.validate();
  if (!std::isfinite(omega_c.real()) || !std::isfinite(omega_c.imag()))
    throw std::invalid_argument("pump_to_steady_state: non-finite coupling amplitude");

  const double gd = p.gamma_opt;
  const double w_pump = 2.0 * std::norm(omega_c) * gd / (gd * gd + p.delta_c * p.delta_c);
  const double beta = w_pump / (p.gamma0 + p.gamma_t + w_pump);  // pop_e / pop_m1
  const double denom = p.gamma_t + w_pump - beta * (0.5 * p.gamma0 + w_pump);
  if (!(denom > 0.0)) throw std::runtime_error("pump_to_steady_state: degenerate rate balance");

  AtomicState s;
  s.pop_m1 = (p.gamma_t / 3.0) / denom;
  s.pop_e = beta * s.pop_m1;
  s.pop_p1 = 2.0 / 3.0 + 0.5 * p.gamma0 * s.pop_e / p.gamma_t;
  s.coh_c = complexd{0.0, 1.0} * std::conj(omega_c) * (s.pop_e - s.pop_m1) / complexd{gd, p.delta_c};
  return s;
}

/// Brute-force alternative: explicit time evolution of the same system until
/// the per-step change of every component falls below tol. Used as a
/// cross-check of the direct solve.
inline AtomicState evolve_to_steady_state(const PhysicalParams& p, complexd omega_c,
                                          double tol = 1e-10, long max_steps = 50'000'000) {
  const double fastest = p.gamma_opt + std::abs(p.delta_c) + std::abs(omega_c);
  const double dt = 0.2 / fastest;
  AtomicState s;
  s.pop_m1 = 1.0 / 3.0;
  s.pop_p1 = 2.0 / 3.0;
  for (long n = 0; n < max_steps; ++n) {
    const AtomicState step = dt * bloch_rhs(s, omega_c, complexd{0.0, 0.0}, p);
    s += step;
    const double change =
        std::max({std::abs(step.pop_m1), std::abs(step.pop_e), std::abs(step.pop_p1),
                  std::abs(step.coh_raman), std::abs(step.coh_c), std::abs(step.coh_s)});
    if (change < tol) return s;
  }
  throw std::runtime_error("evolve_to_steady_state: no convergence within iteration cap");
}

}  // namespace eitstore
