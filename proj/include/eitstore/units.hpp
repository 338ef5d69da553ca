#pragma once

#include <complex>
#include <numbers>

namespace eitstore {

using complexd = std::complex<double>;

inline constexpr double speed_of_light = 299792458.0;            // m/s
inline constexpr double hbar = 1.054571817e-34;                  // J s
inline constexpr double vacuum_permittivity = 8.8541878128e-12;  // F/m
inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// All rates, detunings and Rabi frequencies are angular (rad/s) internally.
/// Configuration files speak ordinary frequency in Hz; this is the one
/// conversion point.
constexpr double angular_from_hz(double hz) { return two_pi * hz; }
constexpr double hz_from_angular(double w) { return w / two_pi; }

}  // namespace eitstore
