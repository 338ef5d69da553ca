#pragma once

#include <fftw3.h>

#include <mutex>
#include <span>
#include <stdexcept>
#include <vector>

#include "eitstore/units.hpp"

namespace eitstore::fft {

namespace detail {
// FFTW plan creation is not thread safe; execution of distinct plans is.
inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

inline std::vector<complexd> transform(std::span<const complexd> in, int sign) {
  if (in.empty()) return {};
  std::vector<complexd> out(in.size());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft_1d(static_cast<int>(in.size()),
                            reinterpret_cast<fftw_complex*>(const_cast<complexd*>(in.data())),
                            reinterpret_cast<fftw_complex*>(out.data()), sign, FFTW_ESTIMATE);
  }
  if (!plan) throw std::runtime_error("fft: planning failed");
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  return out;
}
}  // namespace detail

/// Unnormalized forward DFT: X[k] = sum_n x[n] exp(-2 pi i k n / N).
inline std::vector<complexd> forward(std::span<const complexd> in) {
  return detail::transform(in, FFTW_FORWARD);
}

/// Inverse DFT normalized by 1/N, so inverse(forward(x)) == x.
inline std::vector<complexd> inverse(std::span<const complexd> in) {
  auto out = detail::transform(in, FFTW_BACKWARD);
  const double scale = out.empty() ? 1.0 : 1.0 / static_cast<double>(out.size());
  for (complexd& v : out) v *= scale;
  return out;
}

/// Signed angular frequency of DFT bin k for sample spacing dt.
inline double bin_angular_frequency(std::size_t k, std::size_t n, double dt) {
  const auto half = n / 2;
  const double idx = (k <= half) ? static_cast<double>(k)
                                 : static_cast<double>(k) - static_cast<double>(n);
  return two_pi * idx / (static_cast<double>(n) * dt);
}

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace eitstore::fft
