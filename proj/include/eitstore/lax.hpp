#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "eitstore/units.hpp"

namespace eitstore {

/// One Lax time step of the characteristic-form propagation equation
///   (d/dz + (1/c) d/dt) Omega = i eta sigma~,
/// i.e. Omega_t = -c Omega_z + c i eta sigma~.
///
/// Interior points use the Lax average of the spatial neighbours plus the
/// transport term; with the grid pinned at dz = c dt the amplification of the
/// j+1 neighbour vanishes and the update is the exact shift along the
/// characteristic. The source is integrated trapezoidally along that
/// characteristic segment: dz (S_j + S_{j-1})/2.
///
/// z = 0 is clamped to the injected input for the new time level; at the exit
/// face a one-sided upwind difference replaces the missing right neighbour.
inline void lax_step(std::span<const complexd> field, std::span<const complexd> sigma,
                     double dz, double dt, double eta, complexd inflow,
                     std::span<complexd> next) {
  const std::size_t n = field.size();
  if (n < 3 || sigma.size() != n || next.size() != n)
    throw std::invalid_argument("lax_step: rows need at least 3 points and equal sizes");
  const double cfl = speed_of_light * dt / dz;
  const double a_plus = 0.5 * (1.0 - cfl);
  const double a_minus = 0.5 * (1.0 + cfl);
  const complexd i_eta{0.0, eta};
  const double half_dz = 0.5 * dz;

  next[0] = inflow;
  for (std::size_t j = 1; j + 1 < n; ++j)
    next[j] = a_plus * field[j + 1] + a_minus * field[j - 1] +
              half_dz * (i_eta * (sigma[j] + sigma[j - 1]));
  next[n - 1] = (1.0 - cfl) * field[n - 1] + cfl * field[n - 2] +
                half_dz * (i_eta * (sigma[n - 1] + sigma[n - 2]));
}

inline std::vector<complexd> lax_step(std::span<const complexd> field,
                                      std::span<const complexd> sigma, double dz, double dt,
                                      double eta, complexd inflow) {
  std::vector<complexd> next(field.size());
  lax_step(field, sigma, dz, dt, eta, inflow, next);
  return next;
}

/// Lax step with the source centered along the characteristic segment from
/// (z_{j-1}, t_n) to (z_j, t_{n+1}): dz (S_{j-1}^n + S_j^{n+1}) / 2. The
/// coherences relax at gamma_opt, which is fast against dt, so sampling the
/// source at the old time level alone biases the transfer through the medium
/// at O(gamma_opt dt); the centered form removes that.
inline void lax_step(std::span<const complexd> field, std::span<const complexd> sigma_start,
                     std::span<const complexd> sigma_end, double dz, double dt, double eta,
                     complexd inflow, std::span<complexd> next) {
  const std::size_t n = field.size();
  if (n < 3 || sigma_start.size() != n || sigma_end.size() != n || next.size() != n)
    throw std::invalid_argument("lax_step: rows need at least 3 points and equal sizes");
  const double cfl = speed_of_light * dt / dz;
  const double a_plus = 0.5 * (1.0 - cfl);
  const double a_minus = 0.5 * (1.0 + cfl);
  const complexd i_eta{0.0, eta};
  const double half_dz = 0.5 * dz;

  next[0] = inflow;
  for (std::size_t j = 1; j + 1 < n; ++j)
    next[j] = a_plus * field[j + 1] + a_minus * field[j - 1] +
              half_dz * (i_eta * (sigma_start[j - 1] + sigma_end[j]));
  next[n - 1] = (1.0 - cfl) * field[n - 1] + cfl * field[n - 2] +
                half_dz * (i_eta * (sigma_start[n - 2] + sigma_end[n - 1]));
}

}  // namespace eitstore
