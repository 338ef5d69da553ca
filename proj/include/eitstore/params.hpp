#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "eitstore/units.hpp"

namespace eitstore {

/// Medium and beam parameters of the three-level Lambda system.
///
/// The optical coherence decay gamma_opt is the effective homogeneous width
/// that stands in for the Doppler distribution; it applies to both optical
/// legs. Feeding of the ground states is tied to the transit rate gamma_t
/// (Lambda = gamma_t) so that the total population relaxes to one.
struct PhysicalParams {
  double gamma0 = 0.0;       // population decay rate of |e>, rad/s
  double gamma_t = 0.0;      // transit rate = total feeding rate, rad/s
  double gamma_raman = 0.0;  // ground-state (Raman) coherence decay, rad/s
  double gamma_opt = 0.0;    // effective optical coherence decay Gamma_D, rad/s
  double delta_c = 0.0;      // coupling detuning from Doppler-line center, rad/s
  double delta_s = 0.0;      // signal detuning from Doppler-line center, rad/s
  double delta_r = 0.0;      // two-photon detuning, convention delta_s - delta_c
  double eta_c = 0.0;        // coupling propagation constant, rad/(s m)
  double eta_s = 0.0;        // signal propagation constant, rad/(s m)
  double cell_length = 0.0;  // m
  complexd omega_c_in{0.0, 0.0};  // coupling Rabi amplitude at z=0 (plateau), rad/s

  void validate() const {
    auto fail = [](const std::string& msg) { throw std::invalid_argument("PhysicalParams: " + msg); };
    if (!(gamma0 > 0.0)) fail("gamma0 must be > 0");
    if (!(gamma_t > 0.0)) fail("gamma_t must be > 0");
    if (!(gamma_raman > 0.0)) fail("gamma_raman must be > 0");
    if (!(gamma_opt > 0.0)) fail("gamma_opt must be > 0");
    if (gamma_opt < 0.5 * gamma0) fail("gamma_opt must be >= gamma0/2");
    if (!(cell_length > 0.0)) fail("cell_length must be > 0");
    if (eta_c < 0.0 || eta_s < 0.0) fail("eta_c, eta_s must be >= 0");
    const double scale = std::max({1.0, std::abs(delta_s), std::abs(delta_c)});
    if (std::abs(delta_r - (delta_s - delta_c)) > 1e-9 * scale)
      fail("delta_r inconsistent with convention delta_r = delta_s - delta_c");
    for (double v : {gamma0, gamma_t, gamma_raman, gamma_opt, delta_c, delta_s, delta_r,
                     eta_c, eta_s, cell_length, omega_c_in.real(), omega_c_in.imag()})
      if (!std::isfinite(v)) fail("non-finite parameter value");
  }

  /// Set both optical detunings (two-photon resonance) and keep delta_r consistent.
  void set_detuning(double delta) {
    delta_c = delta_s = delta;
    delta_r = 0.0;
  }
};

/// Propagation constant eta that reproduces a given resonant optical depth.
///
/// In the weak-probe, coupling-off, on-resonance limit the field decays as
/// exp(-eta z / gamma_opt), so intensity transmission over the cell is
/// exp(-2 eta L / gamma_opt) = exp(-OD), giving eta = OD gamma_opt / (2 L).
inline double derive_eta_from_optical_depth(double target_od, const PhysicalParams& p) {
  if (!(target_od >= 0.0) || !std::isfinite(target_od))
    throw std::invalid_argument("derive_eta_from_optical_depth: optical depth must be >= 0");
  if (!(p.gamma_opt > 0.0) || !(p.cell_length > 0.0))
    throw std::invalid_argument("derive_eta_from_optical_depth: needs gamma_opt > 0 and cell_length > 0");
  return target_od * p.gamma_opt / (2.0 * p.cell_length);
}

/// Rabi frequency (rad/s) of a Gaussian-free top-hat beam of the given power.
/// hbar Omega = d E / 2 with E = sqrt(2 P / (eps0 c A)), A = pi (diameter/2)^2.
/// Phase 0 by convention.
inline complexd rabi_from_power(double power_w, double beam_diameter_m, double dipole_cm) {
  if (!(power_w >= 0.0)) throw std::invalid_argument("rabi_from_power: power must be >= 0");
  if (!(beam_diameter_m > 0.0)) throw std::invalid_argument("rabi_from_power: beam diameter must be > 0");
  if (!(dipole_cm > 0.0)) throw std::invalid_argument("rabi_from_power: dipole moment must be > 0");
  const double area = std::numbers::pi * 0.25 * beam_diameter_m * beam_diameter_m;
  const double field = std::sqrt(2.0 * power_w / (vacuum_permittivity * speed_of_light * area));
  return complexd{dipole_cm * field / (2.0 * hbar), 0.0};
}

}  // namespace eitstore
