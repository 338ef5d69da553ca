#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "eitstore/params.hpp"
#include "eitstore/units.hpp"

namespace eitstore {

/// Weak-probe EIT response under constant coupling, expressed as the complex
/// propagation coefficient per unit length: a signal spectral component at
/// offset delta from the carrier exits as E(delta, L) = E(delta, 0) exp(-kappa(delta) L).
///
/// Derived from the steady state of the coherence equations to first order in
/// Omega_s (populations pinned at sigma_11 = 1). A component at optical
/// frequency omega_s + delta sees optical detuning delta_s + delta and
/// two-photon offset delta_r + delta; eliminating the Raman coherence gives
///
///   kappa(delta) = eta_s (g - i dR) / [ (G - i dS)(g - i dR) + |Omega_c|^2 ]
///
/// with g = gamma_raman, G = gamma_opt, dR = delta_r + delta, dS = delta_s + delta.
/// Re kappa >= 0 always (passive medium); at dR = 0, g -> 0 the medium is
/// transparent, and with the coupling off kappa reduces to the two-level
/// absorption eta_s / (G - i dS).
inline complexd eit_susceptibility(double delta, const PhysicalParams& p) {
  const double d_r = p.delta_r + delta;
  const double d_s = p.delta_s + delta;
  const complexd raman{p.gamma_raman, -d_r};
  const complexd denom = complexd{p.gamma_opt, -d_s} * raman + std::norm(p.omega_c_in);
  return p.eta_s * raman / denom;
}

/// Zeroth-order populations the weak probe scatters against.
struct MediumPopulations {
  double pop_m1 = 0.0;
  double pop_e = 0.0;
  double pop_p1 = 1.0;
};

/// kappa(delta) linearized around a pinned population distribution instead of
/// the ideal fully pumped medium. The (pop_p1 - pop_e) factor scales the
/// direct response; the second term is the coupling light Raman-scattered off
/// the residual |-1> population (its steady coupling-leg coherence is driven
/// into the signal mode through the ground-state coherence).
inline complexd eit_susceptibility(double delta, const PhysicalParams& p,
                                   const MediumPopulations& pops) {
  const double d_r = p.delta_r + delta;
  const double d_s = p.delta_s + delta;
  const complexd raman{p.gamma_raman, -d_r};
  const complexd denom = complexd{p.gamma_opt, -d_s} * raman + std::norm(p.omega_c_in);
  const complexd num =
      (pops.pop_p1 - pops.pop_e) * raman -
      std::norm(p.omega_c_in) * (pops.pop_m1 - pops.pop_e) / complexd{p.gamma_opt, p.delta_c};
  return p.eta_s * num / denom;
}

/// Intensity transmission of a monochromatic weak probe at offset delta.
inline double weak_probe_transmission(double delta, const PhysicalParams& p) {
  return std::exp(-2.0 * eit_susceptibility(delta, p).real() * p.cell_length);
}

/// Sampled kappa(delta) curve. Construction enforces at least 10 samples per
/// gamma_raman linewidth so the EIT feature cannot be skipped over.
struct SusceptibilityCurve {
  std::vector<double> frequencies;  // offsets delta, rad/s
  std::vector<complexd> kappa;      // per-length propagation coefficients
  PhysicalParams params;

  static SusceptibilityCurve sample(const PhysicalParams& p, double delta_min, double delta_max,
                                    std::size_t n_requested) {
    p.validate();
    if (!(delta_max > delta_min)) throw std::invalid_argument("SusceptibilityCurve: empty range");
    const double max_step = p.gamma_raman / 10.0;
    const std::size_t n_min = static_cast<std::size_t>(std::ceil((delta_max - delta_min) / max_step)) + 1;
    const std::size_t n = std::max<std::size_t>(std::max(n_requested, n_min), 2);
    SusceptibilityCurve c;
    c.params = p;
    c.frequencies.resize(n);
    c.kappa.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double d = delta_min + (delta_max - delta_min) * static_cast<double>(k) / static_cast<double>(n - 1);
      c.frequencies[k] = d;
      c.kappa[k] = eit_susceptibility(d, p);
    }
    return c;
  }
};

/// FWHM of the transparency window: width of the transmission peak at half
/// height between T(0) and the two-level absorption background.
inline double transparency_window_fwhm(const PhysicalParams& p) {
  const double t_peak = weak_probe_transmission(0.0, p);
  const complexd kappa_bg = p.eta_s / complexd{p.gamma_opt, -p.delta_s};
  const double t_bg = std::exp(-2.0 * kappa_bg.real() * p.cell_length);
  if (t_peak <= t_bg) throw std::runtime_error("transparency_window_fwhm: no transparency peak");
  const double t_half = t_bg + 0.5 * (t_peak - t_bg);

  auto crossing = [&](double sign) {
    double lo = 0.0;
    double hi = p.gamma_raman;
    while (weak_probe_transmission(sign * hi, p) > t_half) {
      lo = hi;
      hi *= 2.0;
      if (hi > 1e6 * p.gamma_opt)
        throw std::runtime_error("transparency_window_fwhm: half level never crossed");
    }
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (weak_probe_transmission(sign * mid, p) > t_half ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };
  return crossing(+1.0) + crossing(-1.0);
}

}  // namespace eitstore
