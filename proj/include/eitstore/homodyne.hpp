#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "eitstore/fft.hpp"
#include "eitstore/phase.hpp"
#include "eitstore/units.hpp"

namespace eitstore {

/// Optional imperfections for synthesized interference records: white noise
/// and the additive oscillation the acousto-optic modulators imprint.
struct NoiseSpec {
  double white_sigma = 0.0;         // std dev, intensity units
  double artifact_amplitude = 0.0;  // intensity units
  double artifact_period = 90e-9;   // s
  unsigned long seed = 0;
};

/// Scanned-phase interference records I_k(t) plus the side information the
/// envelope method needs: the piezo offsets, the separately measured coupling
/// intensity, and the storage window where the coupling vanishes.
struct HomodyneEnsemble {
  std::vector<double> t;                     // s, uniform grid
  std::vector<std::vector<double>> records;  // K x N intensities
  std::vector<double> scan_phases;           // K piezo offsets theta_k, rad
  double i_c = 0.0;                          // coupling intensity (signal absent)
  double t_off = 0.0;                        // storage window start
  double t_on = 0.0;                         // storage window end

  std::size_t k_count() const { return records.size(); }
  bool in_storage(double time) const { return time >= t_off && time < t_on; }
  double dt() const { return t.size() > 1 ? t[1] - t[0] : 0.0; }

  double scan_span() const {
    if (scan_phases.empty()) return 0.0;
    const auto [lo, hi] = std::minmax_element(scan_phases.begin(), scan_phases.end());
    return *hi - *lo;
  }

  void validate() const {
    if (k_count() < 8) throw std::invalid_argument("HomodyneEnsemble: needs K >= 8 records");
    if (scan_phases.size() != k_count())
      throw std::invalid_argument("HomodyneEnsemble: one scan phase per record");
    if (!(i_c > 0.0)) throw std::invalid_argument("HomodyneEnsemble: i_c must be > 0");
    if (scan_span() < two_pi - 1e-9)
      throw std::invalid_argument("HomodyneEnsemble: scan phases must span >= 2 pi");
    for (const auto& r : records)
      if (r.size() != t.size()) throw std::invalid_argument("HomodyneEnsemble: ragged records");
  }
};

/// Evenly spaced piezo offsets covering the full [0, 2 pi] interval.
inline std::vector<double> uniform_scan_phases(std::size_t k) {
  if (k < 2) throw std::invalid_argument("uniform_scan_phases: need k >= 2");
  std::vector<double> phases(k);
  for (std::size_t i = 0; i < k; ++i)
    phases[i] = two_pi * static_cast<double>(i) / static_cast<double>(k - 1);
  return phases;
}

/// Inverse of the measurement model: generates the ensemble a scanned
/// homodyne measurement of the given exit envelope would record,
///   I_k(t) = I_c + I_s(t) + alpha sqrt(I_c I_s(t)) cos(dphi(t) + theta_k),
/// with I_c (and the interference term) zeroed during the storage window.
inline HomodyneEnsemble synthesize_records(const std::vector<complexd>& exit_signal,
                                           const std::vector<double>& t, complexd coupling_ref,
                                           const std::vector<double>& scan_phases, double i_c,
                                           double contrast_alpha, double t_off, double t_on,
                                           const NoiseSpec& noise = {}) {
  if (exit_signal.size() != t.size())
    throw std::invalid_argument("synthesize_records: signal/time size mismatch");
  if (!(contrast_alpha > 0.0 && contrast_alpha <= 2.0))
    throw std::invalid_argument("synthesize_records: contrast alpha must be in (0, 2]");
  if (std::abs(coupling_ref) == 0.0)
    throw std::invalid_argument("synthesize_records: coupling reference must be nonzero");

  HomodyneEnsemble e;
  e.t = t;
  e.scan_phases = scan_phases;
  e.i_c = i_c;
  e.t_off = t_off;
  e.t_on = t_on;

  const double ref_phase = std::arg(coupling_ref);
  const std::size_t n = t.size();
  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> gauss(0.0, noise.white_sigma);

  e.records.reserve(scan_phases.size());
  for (double theta : scan_phases) {
    std::vector<double> rec(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double i_s = std::norm(exit_signal[k]);
      double value;
      if (e.in_storage(t[k])) {
        value = i_s;
      } else {
        const double dphi = std::arg(exit_signal[k]) - ref_phase;
        value = i_c + i_s + contrast_alpha * std::sqrt(i_c * i_s) * std::cos(dphi + theta);
      }
      if (noise.artifact_amplitude > 0.0)
        value += noise.artifact_amplitude * std::sin(two_pi * t[k] / noise.artifact_period);
      if (noise.white_sigma > 0.0) value += gauss(rng);
      rec[k] = value;
    }
    e.records.push_back(std::move(rec));
  }
  return e;
}

struct EnvelopePair {
  std::vector<double> i_plus;
  std::vector<double> i_minus;
  bool unreliable = false;  // scan coverage below 2 pi
};

/// Pointwise extrema over the ensemble, optionally preceded by a 3-sample
/// median filter in time on each record (noise robustness).
inline EnvelopePair extract_envelopes(const HomodyneEnsemble& e, bool median3 = false) {
  if (e.k_count() < 8) throw std::invalid_argument("extract_envelopes: needs K >= 8 records");
  const std::size_t n = e.t.size();
  EnvelopePair env;
  env.unreliable = e.scan_span() < two_pi - 1e-9;
  env.i_plus.assign(n, -std::numeric_limits<double>::infinity());
  env.i_minus.assign(n, std::numeric_limits<double>::infinity());

  auto median_of_3 = [](double a, double b, double c) {
    return std::max(std::min(a, b), std::min(std::max(a, b), c));
  };
  for (const auto& rec : e.records) {
    for (std::size_t k = 0; k < n; ++k) {
      double v = rec[k];
      if (median3 && k > 0 && k + 1 < n) v = median_of_3(rec[k - 1], rec[k], rec[k + 1]);
      env.i_plus[k] = std::max(env.i_plus[k], v);
      env.i_minus[k] = std::min(env.i_minus[k], v);
    }
  }
  return env;
}

struct SignalRecovery {
  std::vector<double> i_s;
  double alpha = 0.0;
  bool calibration_warning = false;  // extended stretches of negative raw I_s
};

/// I_s from the envelope sum, alpha from the envelope difference. Inside the
/// storage window the coupling is absent and the records are I_s directly, so
/// no I_c is subtracted there. alpha uses the median over valid times to
/// resist the low-intensity blowup of the ratio.
inline SignalRecovery recover_signal_and_contrast(const EnvelopePair& env,
                                                  const HomodyneEnsemble& e,
                                                  double valid_threshold = 0.05) {
  const std::size_t n = e.t.size();
  if (env.i_plus.size() != n || env.i_minus.size() != n)
    throw std::invalid_argument("recover_signal_and_contrast: envelope/time size mismatch");
  SignalRecovery out;
  out.i_s.resize(n);
  std::size_t negative = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double mid = 0.5 * (env.i_plus[k] + env.i_minus[k]);
    const double raw = e.in_storage(e.t[k]) ? mid : mid - e.i_c;
    out.i_s[k] = std::max(0.0, raw);
    if (raw < -0.02 * e.i_c) ++negative;
  }
  out.calibration_warning = negative > n / 20;

  double peak = 0.0;
  for (std::size_t k = 0; k < n; ++k)
    if (!e.in_storage(e.t[k])) peak = std::max(peak, out.i_s[k]);
  std::vector<double> ratios;
  for (std::size_t k = 0; k < n; ++k) {
    if (e.in_storage(e.t[k]) || out.i_s[k] <= valid_threshold * peak) continue;
    ratios.push_back((env.i_plus[k] - env.i_minus[k]) / (2.0 * std::sqrt(e.i_c * out.i_s[k])));
  }
  if (ratios.empty()) throw std::runtime_error("recover_signal_and_contrast: no valid samples");
  std::nth_element(ratios.begin(), ratios.begin() + ratios.size() / 2, ratios.end());
  out.alpha = ratios[ratios.size() / 2];
  return out;
}

/// Per-time fit of one record against the interference model. The arccos
/// branch is picked by temporal continuity: each valid sample takes the
/// sign/2pi offset closest to the previous valid sample, which also carries
/// the phase across the storage gap. The overall sign of the first sample is
/// a convention (a single quadrature cannot observe it); callers can fix it
/// with the two-quadrature cross-check.
///
/// Validity is per branch: intensity above threshold x the branch's own peak,
/// and outside the storage window. Arguments beyond |1.05| flag calibration
/// trouble; persistent excess throws.
inline PhaseTrace extract_phase(const std::vector<double>& record, const HomodyneEnsemble& e,
                                const std::vector<double>& i_s, double alpha,
                                double threshold = 0.05) {
  const std::size_t n = e.t.size();
  if (record.size() != n || i_s.size() != n)
    throw std::invalid_argument("extract_phase: size mismatch");
  if (!(alpha > 0.0)) throw std::invalid_argument("extract_phase: alpha must be > 0");

  double peak_leak = 0.0, peak_retr = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (e.t[k] < e.t_off) peak_leak = std::max(peak_leak, i_s[k]);
    if (e.t[k] >= e.t_on) peak_retr = std::max(peak_retr, i_s[k]);
  }

  PhaseTrace tr;
  tr.t = e.t;
  tr.delta_phi.assign(n, 0.0);
  tr.valid.assign(n, 0);

  std::size_t out_of_range = 0, used = 0;
  bool have_prev = false;
  double prev = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (e.in_storage(e.t[k])) continue;
    const double branch_peak = (e.t[k] < e.t_off) ? peak_leak : peak_retr;
    if (i_s[k] <= threshold * branch_peak || i_s[k] <= 0.0) continue;
    const double x = (record[k] - e.i_c - i_s[k]) / (alpha * std::sqrt(e.i_c * i_s[k]));
    ++used;
    if (std::abs(x) > 1.05) ++out_of_range;
    const double a = std::acos(std::clamp(x, -1.0, 1.0));
    double phi;
    if (!have_prev) {
      phi = a;
    } else {
      const double d_plus = principal_angle(a - prev);
      const double d_minus = principal_angle(-a - prev);
      phi = prev + (std::abs(d_plus) <= std::abs(d_minus) ? d_plus : d_minus);
    }
    tr.delta_phi[k] = phi;
    tr.valid[k] = 1;
    prev = phi;
    have_prev = true;
  }
  if (used > 0 && out_of_range * 4 > used)
    throw std::runtime_error(
        "extract_phase: interference argument persistently outside [-1.05, 1.05]; "
        "contrast or calibration error");
  return tr;
}

/// Sign-unambiguous phase from two records whose scan offsets differ by
/// d_theta (ideally pi/2). Cross-check for the continuity method.
inline PhaseTrace extract_phase_two_quadrature(const std::vector<double>& rec_a,
                                               const std::vector<double>& rec_b, double d_theta,
                                               const HomodyneEnsemble& e,
                                               const std::vector<double>& i_s, double alpha,
                                               double threshold = 0.05) {
  const std::size_t n = e.t.size();
  const double sd = std::sin(d_theta);
  if (std::abs(sd) < 0.1)
    throw std::invalid_argument("extract_phase_two_quadrature: quadrature separation too small");

  double peak_leak = 0.0, peak_retr = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (e.t[k] < e.t_off) peak_leak = std::max(peak_leak, i_s[k]);
    if (e.t[k] >= e.t_on) peak_retr = std::max(peak_retr, i_s[k]);
  }

  PhaseTrace tr;
  tr.t = e.t;
  tr.delta_phi.assign(n, 0.0);
  tr.valid.assign(n, 0);
  bool have_prev = false;
  double prev = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (e.in_storage(e.t[k])) continue;
    const double branch_peak = (e.t[k] < e.t_off) ? peak_leak : peak_retr;
    if (i_s[k] <= threshold * branch_peak || i_s[k] <= 0.0) continue;
    const double denom = alpha * std::sqrt(e.i_c * i_s[k]);
    const double xa = (rec_a[k] - e.i_c - i_s[k]) / denom;  // cos(psi)
    const double xb = (rec_b[k] - e.i_c - i_s[k]) / denom;  // cos(psi + d_theta)
    const double sin_psi = (xa * std::cos(d_theta) - xb) / sd;
    const double raw = std::atan2(sin_psi, xa);
    const double phi = have_prev ? prev + principal_angle(raw - prev) : raw;
    tr.delta_phi[k] = phi;
    tr.valid[k] = 1;
    prev = phi;
    have_prev = true;
  }
  return tr;
}

struct FilterResult {
  std::vector<double> output;
  double removed_energy_fraction = 0.0;  // of the non-DC record energy
  bool overlap_warning = false;          // notch ate > 10% of the record energy
};

/// Spectral notch at 1/notch_period and its first harmonic, unit gain
/// elsewhere. Bands are removed symmetrically in +/- frequency so a real
/// record stays real.
inline FilterResult filter_artifacts(const std::vector<double>& record, double dt,
                                     double notch_period, double width_hz = 0.0) {
  if (record.size() < 4 || !(dt > 0.0))
    throw std::invalid_argument("filter_artifacts: need >= 4 samples and dt > 0");
  if (!(notch_period > 0.0)) throw std::invalid_argument("filter_artifacts: notch_period must be > 0");
  const double f0 = 1.0 / notch_period;
  if (width_hz <= 0.0) width_hz = 0.1 * f0;

  const std::size_t n = record.size();
  std::vector<complexd> buf(n);
  for (std::size_t k = 0; k < n; ++k) buf[k] = complexd{record[k], 0.0};
  std::vector<complexd> spec = fft::forward(buf);

  double total = 0.0, removed = 0.0;
  for (std::size_t k = 1; k < n; ++k) total += std::norm(spec[k]);
  for (std::size_t k = 0; k < n; ++k) {
    const double f = std::abs(fft::bin_angular_frequency(k, n, dt)) / two_pi;
    const bool in_notch =
        std::abs(f - f0) <= 0.5 * width_hz || std::abs(f - 2.0 * f0) <= 0.5 * width_hz;
    if (in_notch) {
      if (k > 0) removed += std::norm(spec[k]);
      spec[k] = complexd{0.0, 0.0};
    }
  }
  std::vector<complexd> out = fft::inverse(spec);

  FilterResult res;
  res.output.resize(n);
  for (std::size_t k = 0; k < n; ++k) res.output[k] = out[k].real();
  res.removed_energy_fraction = total > 0.0 ? removed / total : 0.0;
  res.overlap_warning = res.removed_energy_fraction > 0.10;
  return res;
}

/// Extra phase shift of the retrieved pulse: phi_eit(t) = dphi_r(t) - <dphi_l>.
/// The leak phase is expected flat; a peak-to-peak beyond 0.1 rad sets the
/// warning flag on the output (returned trace keeps the retrieval validity).
inline PhaseTrace compute_phi_eit(const PhaseTrace& leak, const PhaseTrace& retrieved,
                                  bool* leak_flat_warning = nullptr) {
  if (leak.valid_count() == 0 || retrieved.valid_count() == 0)
    throw std::runtime_error("compute_phi_eit: empty validity mask on a branch");
  if (leak_flat_warning) *leak_flat_warning = leak.peak_to_peak_valid() > 0.1;
  const double ref = leak.mean_valid();
  PhaseTrace out = retrieved;
  out.phi_eit.assign(out.size(), 0.0);
  for (std::size_t k = 0; k < out.size(); ++k)
    if (out.valid[k]) out.phi_eit[k] = out.delta_phi[k] - ref;
  return out;
}

inline double max_abs_phi_eit(const PhaseTrace& tr) {
  double m = 0.0;
  for (std::size_t k = 0; k < tr.size(); ++k)
    if (tr.valid[k]) m = std::max(m, std::abs(tr.phi_eit[k]));
  return m;
}

struct AnalyzeOptions {
  double threshold = 0.05;      // validity threshold, fraction of branch peak
  double notch_period = 0.0;    // > 0 enables artifact filtering before analysis
  double notch_width_hz = 0.0;  // 0 = auto
  bool median_smoothing = false;
};

struct HomodyneAnalysis {
  std::vector<double> i_s;
  double alpha = 0.0;
  std::size_t record_used = 0;
  PhaseTrace full;       // continuity-extracted over the whole record, sign-fixed
  PhaseTrace leak;       // writing branch
  PhaseTrace retrieved;  // retrieval branch
  PhaseTrace phi_eit;    // retrieval branch with phi_eit filled
  bool leak_flat_warning = false;
  bool envelope_unreliable = false;
  bool calibration_warning = false;
  bool filter_overlap_warning = false;
  long branch_repairs = 0;  // samples corrected against the quadrature trace
};

/// Full measurement pipeline on one ensemble: optional artifact filtering,
/// envelope extraction, I_s / alpha recovery, per-time phase fit on the best
/// conditioned record, global-sign fix against the two-quadrature cross-check,
/// and the leak-referenced phi_eit.
inline HomodyneAnalysis analyze_ensemble(const HomodyneEnsemble& input,
                                         const AnalyzeOptions& opt = {}) {
  input.validate();
  HomodyneEnsemble e = input;
  HomodyneAnalysis out;

  if (opt.notch_period > 0.0) {
    for (auto& rec : e.records) {
      FilterResult f = filter_artifacts(rec, e.dt(), opt.notch_period, opt.notch_width_hz);
      out.filter_overlap_warning |= f.overlap_warning;
      rec = std::move(f.output);
    }
  }

  const EnvelopePair env = extract_envelopes(e, opt.median_smoothing);
  out.envelope_unreliable = env.unreliable;
  SignalRecovery sig = recover_signal_and_contrast(env, e, opt.threshold);
  out.calibration_warning = sig.calibration_warning;
  out.i_s = std::move(sig.i_s);
  out.alpha = sig.alpha;

  // Best-conditioned record for the per-time fit: interference argument
  // closest to +-pi/2 on the writing branch, where arccos is steepest.
  double peak_leak = 0.0;
  for (std::size_t k = 0; k < e.t.size(); ++k)
    if (e.t[k] < e.t_off) peak_leak = std::max(peak_leak, out.i_s[k]);
  std::size_t best = 0;
  double best_score = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < e.k_count(); ++r) {
    double score = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 0; k < e.t.size(); ++k) {
      if (e.t[k] >= e.t_off || out.i_s[k] <= opt.threshold * peak_leak) continue;
      score += std::abs((e.records[r][k] - e.i_c - out.i_s[k]) /
                        (out.alpha * std::sqrt(e.i_c * out.i_s[k])));
      ++count;
    }
    if (count == 0) continue;
    score /= static_cast<double>(count);
    if (score < best_score) {
      best_score = score;
      best = r;
    }
  }
  out.record_used = best;
  out.full = extract_phase(e.records[best], e, out.i_s, out.alpha, opt.threshold);

  // Two-quadrature cross-check. A single record cannot observe the overall
  // sign of the phase, and where psi(t) parks near 0 or pi the arccos chain
  // can lock onto the reflected branch. When a record near quadrature
  // separation exists, the atan2-based trace has neither problem, so it
  // becomes the reported trace; the continuity trace is kept as the
  // cross-check (disagreeing samples are counted).
  std::size_t partner = best;
  double partner_dist = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < e.k_count(); ++r) {
    if (r == best) continue;
    const double d = std::abs(std::abs(principal_angle(e.scan_phases[r] - e.scan_phases[best])) -
                              0.5 * std::numbers::pi);
    if (d < partner_dist) {
      partner_dist = d;
      partner = r;
    }
  }
  const double d_theta =
      partner == best ? 0.0 : principal_angle(e.scan_phases[partner] - e.scan_phases[best]);
  if (std::abs(std::sin(d_theta)) >= 0.1) {
    PhaseTrace quad = extract_phase_two_quadrature(e.records[best], e.records[partner], d_theta,
                                                   e, out.i_s, out.alpha, opt.threshold);
    // overall sign of the continuity trace, from the quadrature reference
    double err_plus = 0.0, err_minus = 0.0;
    for (std::size_t k = 0; k < out.full.size(); ++k) {
      if (!out.full.valid[k] || !quad.valid[k]) continue;
      const double dp = principal_angle(out.full.delta_phi[k] - quad.delta_phi[k]);
      const double dm = principal_angle(-out.full.delta_phi[k] - quad.delta_phi[k]);
      err_plus += dp * dp;
      err_minus += dm * dm;
    }
    if (err_minus < err_plus) out.full.negate();

    for (std::size_t k = 0; k < out.full.size(); ++k)
      if (out.full.valid[k] && quad.valid[k] &&
          std::abs(principal_angle(out.full.delta_phi[k] - quad.delta_phi[k])) > 0.15)
        ++out.branch_repairs;
    out.full = std::move(quad);
  }

  out.leak = out.full.window(0.0, e.t_off);
  out.retrieved = out.full.window(e.t_on, std::numeric_limits<double>::infinity());
  out.phi_eit = compute_phi_eit(out.leak, out.retrieved, &out.leak_flat_warning);
  return out;
}

}  // namespace eitstore
