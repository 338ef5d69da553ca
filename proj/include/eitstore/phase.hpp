#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "eitstore/units.hpp"

namespace eitstore {

/// Wrap an angle into (-pi, pi].
inline double principal_angle(double x) {
  x = std::fmod(x, two_pi);
  if (x > std::numbers::pi) x -= two_pi;
  if (x <= -std::numbers::pi) x += two_pi;
  return x;
}

/// Time series of a relative phase with a validity mask (intensity above
/// threshold). delta_phi is unwrapped over the valid samples; phi_eit is
/// filled on the retrieval branch by compute_phi_eit.
struct PhaseTrace {
  std::vector<double> t;          // s
  std::vector<double> delta_phi;  // rad, meaningful only where valid
  std::vector<std::uint8_t> valid;
  std::vector<double> phi_eit;    // rad, empty until computed

  std::size_t size() const { return t.size(); }
  std::size_t valid_count() const {
    std::size_t n = 0;
    for (auto v : valid) n += v;
    return n;
  }

  double mean_valid() const {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < size(); ++k)
      if (valid[k]) {
        sum += delta_phi[k];
        ++n;
      }
    if (n == 0) throw std::runtime_error("PhaseTrace: no valid samples");
    return sum / static_cast<double>(n);
  }

  double peak_to_peak_valid() const {
    double lo = 0.0, hi = 0.0;
    bool any = false;
    for (std::size_t k = 0; k < size(); ++k)
      if (valid[k]) {
        if (!any) {
          lo = hi = delta_phi[k];
          any = true;
        }
        lo = std::min(lo, delta_phi[k]);
        hi = std::max(hi, delta_phi[k]);
      }
    if (!any) throw std::runtime_error("PhaseTrace: no valid samples");
    return hi - lo;
  }

  /// Flip the overall sign of the phase trace (arccos-branch fix).
  void negate() {
    for (double& v : delta_phi) v = -v;
  }

  /// Keep validity only inside [t_a, t_b).
  PhaseTrace window(double t_a, double t_b) const {
    PhaseTrace out = *this;
    for (std::size_t k = 0; k < size(); ++k)
      if (!(t[k] >= t_a && t[k] < t_b)) out.valid[k] = 0;
    return out;
  }
};

/// Relative phase arg(field(t)) - ref_phase, unwrapped across valid samples;
/// valid where the intensity exceeds threshold x (peak intensity inside
/// [t_a, t_b)). Reference trace for pipeline cross-checks.
inline PhaseTrace field_phase_trace(const std::vector<complexd>& field, double dt, double ref_phase,
                                    double t_a, double t_b, double threshold = 0.05) {
  PhaseTrace tr;
  const std::size_t n = field.size();
  tr.t.resize(n);
  tr.delta_phi.assign(n, 0.0);
  tr.valid.assign(n, 0);
  double peak = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    tr.t[k] = static_cast<double>(k) * dt;
    if (tr.t[k] >= t_a && tr.t[k] < t_b) peak = std::max(peak, std::norm(field[k]));
  }
  const double gate = threshold * peak;
  bool have_prev = false;
  double prev = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (!(tr.t[k] >= t_a && tr.t[k] < t_b) || std::norm(field[k]) <= gate) continue;
    const double raw = std::arg(field[k]) - ref_phase;
    const double phi = have_prev ? prev + principal_angle(raw - prev) : principal_angle(raw);
    tr.delta_phi[k] = phi;
    tr.valid[k] = 1;
    prev = phi;
    have_prev = true;
  }
  return tr;
}

}  // namespace eitstore
