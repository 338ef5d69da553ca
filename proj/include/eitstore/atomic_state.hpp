#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include "eitstore/params.hpp"
#include "eitstore/units.hpp"

namespace eitstore {

/// Density-matrix slice at one grid point: three populations and the three
/// slowly-varying coherences. The conjugate coherences are implicit
/// (sigma_1-1 = conj(sigma_-11) etc.), so Hermiticity holds by construction.
struct AtomicState {
  double pop_m1 = 0.0;  // sigma_-1-1
  double pop_e = 0.0;   // sigma_ee
  double pop_p1 = 0.0;  // sigma_11
  complexd coh_raman{0.0, 0.0};  // sigma~_-11
  complexd coh_c{0.0, 0.0};      // sigma~_-1e (coupling leg)
  complexd coh_s{0.0, 0.0};      // sigma~_1e  (signal leg)

  double trace() const { return pop_m1 + pop_e + pop_p1; }

  bool finite() const {
    return std::isfinite(pop_m1) && std::isfinite(pop_e) && std::isfinite(pop_p1) &&
           std::isfinite(coh_raman.real()) && std::isfinite(coh_raman.imag()) &&
           std::isfinite(coh_c.real()) && std::isfinite(coh_c.imag()) &&
           std::isfinite(coh_s.real()) && std::isfinite(coh_s.imag());
  }

  AtomicState& operator+=(const AtomicState& o) {
    pop_m1 += o.pop_m1;
    pop_e += o.pop_e;
    pop_p1 += o.pop_p1;
    coh_raman += o.coh_raman;
    coh_c += o.coh_c;
    coh_s += o.coh_s;
    return *this;
  }
  friend AtomicState operator+(AtomicState a, const AtomicState& b) { return a += b; }
  friend AtomicState operator*(double f, AtomicState s) {
    s.pop_m1 *= f;
    s.pop_e *= f;
    s.pop_p1 *= f;
    s.coh_raman *= f;
    s.coh_c *= f;
    s.coh_s *= f;
    return s;
  }
};

/// Full 3x3 density matrix in the basis (|-1>, |e>, |1>), reconstructed from
/// the stored independent components. Always Hermitian.
inline std::array<std::array<complexd, 3>, 3> density_matrix(const AtomicState& s) {
  // sigma~_e-1 = conj(sigma~_-1e), sigma~_e1 = conj(sigma~_1e), sigma~_1-1 = conj(sigma~_-11)
  return {{{complexd{s.pop_m1, 0.0}, s.coh_c, s.coh_raman},
           {std::conj(s.coh_c), complexd{s.pop_e, 0.0}, std::conj(s.coh_s)},
           {std::conj(s.coh_raman), s.coh_s, complexd{s.pop_p1, 0.0}}}};
}

namespace detail {

/// RHS evaluation without input validation, for the solver's inner loop
/// (the solver runs its own divergence checks with step attribution).
inline AtomicState bloch_rhs_unchecked(const AtomicState& s, complexd omega_c, complexd omega_s,
                                       const PhysicalParams& p) {
  const complexd i{0.0, 1.0};
  const complexd wc_cc = omega_c * s.coh_c;  // Omega_c sigma~_-1e
  const complexd ws_cs = omega_s * s.coh_s;  // Omega_s sigma~_1e

  AtomicState d;
  d.pop_m1 = p.gamma_t / 3.0 - p.gamma_t * s.pop_m1 + 0.5 * p.gamma0 * s.pop_e + 2.0 * wc_cc.imag();
  d.pop_e = -(p.gamma0 + p.gamma_t) * s.pop_e - 2.0 * wc_cc.imag() - 2.0 * ws_cs.imag();
  d.pop_p1 = 2.0 * p.gamma_t / 3.0 - p.gamma_t * s.pop_p1 + 0.5 * p.gamma0 * s.pop_e + 2.0 * ws_cs.imag();
  d.coh_raman = -complexd{p.gamma_raman, -p.delta_r} * s.coh_raman +
                i * (std::conj(omega_c) * std::conj(s.coh_s) - omega_s * s.coh_c);
  d.coh_c = -complexd{p.gamma_opt, p.delta_c} * s.coh_c +
            i * (std::conj(omega_c) * (s.pop_e - s.pop_m1) - std::conj(omega_s) * s.coh_raman);
  d.coh_s = -complexd{p.gamma_opt, p.delta_s} * s.coh_s +
            i * (std::conj(omega_s) * (s.pop_e - s.pop_p1) - std::conj(omega_c) * std::conj(s.coh_raman));
  return d;
}

}  // namespace detail

/// Time derivative of the atomic variables under the rotating-wave Bloch
/// equations for one velocity class, with homogeneous optical broadening.
///
/// Feeding: gamma_t/3 into |-1> and 2 gamma_t/3 into |1> (the m_J = 0 state
/// is pumped over to |1> immediately, so its share arrives there); decay of
/// |e> branches Gamma_0/2 into each ground state; all populations leave at
/// the transit rate gamma_t. The trace therefore obeys
/// d(tr)/dt = gamma_t (1 - tr).
inline AtomicState bloch_rhs(const AtomicState& s, complexd omega_c, complexd omega_s,
                             const PhysicalParams& p) {
  if (!s.finite() || !std::isfinite(omega_c.real()) || !std::isfinite(omega_c.imag()) ||
      !std::isfinite(omega_s.real()) || !std::isfinite(omega_s.imag()))
    throw std::invalid_argument("bloch_rhs: non-finite state or field input");
  return detail::bloch_rhs_unchecked(s, omega_c, omega_s, p);
}

/// Physical-state checks with solver tolerance eps. Returns the number of
/// violated conditions (0 = clean).
inline int state_violations(const AtomicState& s, double eps = 1e-6) {
  int n = 0;
  for (double pop : {s.pop_m1, s.pop_e, s.pop_p1})
    if (pop < -eps || pop > 1.0 + eps) ++n;
  if (std::abs(s.trace() - 1.0) > eps) ++n;
  if (std::norm(s.coh_raman) > s.pop_m1 * s.pop_p1 + eps) ++n;
  if (std::norm(s.coh_c) > s.pop_m1 * s.pop_e + eps) ++n;
  if (std::norm(s.coh_s) > s.pop_p1 * s.pop_e + eps) ++n;
  return n;
}

}  // namespace eitstore
