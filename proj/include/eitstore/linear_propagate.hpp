#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "eitstore/fft.hpp"
#include "eitstore/params.hpp"
#include "eitstore/susceptibility.hpp"
#include "eitstore/units.hpp"

namespace eitstore {

struct LinearPropagation {
  std::vector<complexd> output;  // exit envelope, same sampling as the input
  double endpoint_ratio = 0.0;   // max endpoint magnitude / peak magnitude
  bool endpoint_warning = false; // input not negligible at the record ends
};

/// Spectral-domain propagation with an arbitrary per-length coefficient:
/// each component is multiplied by exp(-kappa(delta) L).
///
/// The envelope convention ties a component exp(-i delta t) to optical
/// frequency omega_s + delta, so DFT bin k at signed angular frequency w_k
/// carries the detuning offset delta = -w_k.
///
/// The record is zero-padded to at least twice its length (power of two), and
/// the input must be negligible at both record ends; otherwise the circular
/// convolution wraps meaningfully and the result is flagged.
inline LinearPropagation propagate_spectral(std::span<const complexd> input, double dt,
                                            const std::function<complexd(double)>& kappa,
                                            double length, double endpoint_tol = 1e-6) {
  if (input.size() < 2 || !(dt > 0.0))
    throw std::invalid_argument("propagate_spectral: need >= 2 samples and dt > 0");

  LinearPropagation res;
  double peak = 0.0;
  for (const complexd& v : input) peak = std::max(peak, std::abs(v));
  if (peak > 0.0) {
    res.endpoint_ratio = std::max(std::abs(input.front()), std::abs(input.back())) / peak;
    res.endpoint_warning = res.endpoint_ratio > endpoint_tol;
  }

  const std::size_t n = input.size();
  const std::size_t m = fft::next_pow2(2 * n);
  std::vector<complexd> padded(m, complexd{0.0, 0.0});
  std::copy(input.begin(), input.end(), padded.begin());

  std::vector<complexd> spectrum = fft::forward(padded);
  for (std::size_t k = 0; k < m; ++k) {
    const double delta = -fft::bin_angular_frequency(k, m, dt);
    spectrum[k] *= std::exp(-kappa(delta) * length);
  }
  std::vector<complexd> out = fft::inverse(spectrum);
  out.resize(n);
  res.output = std::move(out);
  return res;
}

/// Exit envelope of a weak signal record propagated through the cell with the
/// coupling held constant (the EIT susceptibility filter).
inline LinearPropagation linear_propagate(std::span<const complexd> input, double dt,
                                          const PhysicalParams& p) {
  p.validate();
  return propagate_spectral(
      input, dt, [&p](double delta) { return eit_susceptibility(delta, p); }, p.cell_length);
}

/// Same filter, but linearized around a pinned population distribution
/// (matches a solver run whose pumping leaves population in |-1>).
inline LinearPropagation linear_propagate(std::span<const complexd> input, double dt,
                                          const PhysicalParams& p,
                                          const MediumPopulations& pops) {
  p.validate();
  return propagate_spectral(
      input, dt, [&p, &pops](double delta) { return eit_susceptibility(delta, p, pops); },
      p.cell_length);
}

}  // namespace eitstore
