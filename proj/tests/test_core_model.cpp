#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <complex>
#include <limits>
#include <random>

#include "eitstore/atomic_state.hpp"
#include "eitstore/params.hpp"
#include "eitstore/scenarios.hpp"
#include "eitstore/steady_state.hpp"

using namespace eitstore;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Independent transcription of the rotating-wave equations, complex
// throughout, with the conjugate coherences written out explicitly. This is
// the oracle the production bloch_rhs (which folds terms into imaginary
// parts) is checked against.
struct FullDerivative {
  complexd d_mm, d_ee, d_pp, d_raman, d_c, d_s;
};

FullDerivative reference_rhs(const AtomicState& st, complexd wc, complexd ws,
                             const PhysicalParams& p) {
  const complexd i{0.0, 1.0};
  const complexd s_m1e = st.coh_c;
  const complexd s_em1 = std::conj(st.coh_c);
  const complexd s_1e = st.coh_s;
  const complexd s_e1 = std::conj(st.coh_s);
  const complexd s_m11 = st.coh_raman;
  const complexd s_1m1 = std::conj(st.coh_raman);

  FullDerivative d;
  d.d_mm = p.gamma_t / 3.0 - p.gamma_t * st.pop_m1 + 0.5 * p.gamma0 * st.pop_e +
           i * (std::conj(wc) * s_em1 - wc * s_m1e);
  d.d_ee = -(p.gamma0 + p.gamma_t) * st.pop_e +
           i * (wc * s_m1e - std::conj(wc) * s_em1 + ws * s_1e - std::conj(ws) * s_e1);
  d.d_pp = 2.0 * p.gamma_t / 3.0 - p.gamma_t * st.pop_p1 + 0.5 * p.gamma0 * st.pop_e +
           i * (std::conj(ws) * s_e1 - ws * s_1e);
  d.d_raman = -(complexd{p.gamma_raman, 0.0} - i * p.delta_r) * s_m11 +
              i * (std::conj(wc) * s_e1 - ws * s_m1e);
  d.d_c = -(complexd{p.gamma_opt, 0.0} + i * p.delta_c) * s_m1e +
          i * (std::conj(wc) * (st.pop_e - st.pop_m1) - std::conj(ws) * s_m11);
  d.d_s = -(complexd{p.gamma_opt, 0.0} + i * p.delta_s) * s_1e +
          i * (std::conj(ws) * (st.pop_e - st.pop_p1) - std::conj(wc) * s_1m1);
  return d;
}

AtomicState random_physical_state(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  AtomicState s;
  // random populations of trace one
  double a = u(rng), b = u(rng), c = u(rng);
  const double tot = a + b + c;
  s.pop_m1 = a / tot;
  s.pop_e = b / tot;
  s.pop_p1 = c / tot;
  // coherences inside the Cauchy-Schwarz ball
  auto coh = [&](double lim) {
    const double mag = std::sqrt(lim) * u(rng);
    const double ph = two_pi * u(rng);
    return std::polar(mag, ph);
  };
  s.coh_raman = coh(s.pop_m1 * s.pop_p1);
  s.coh_c = coh(s.pop_m1 * s.pop_e);
  s.coh_s = coh(s.pop_p1 * s.pop_e);
  return s;
}

}  // namespace

TEST_CASE("bloch_rhs: feeding and transit terms alone", "[core-model]") {
  PhysicalParams p = paper_params();
  AtomicState s;
  s.pop_p1 = 1.0;
  const AtomicState d = bloch_rhs(s, {0.0, 0.0}, {0.0, 0.0}, p);
  CHECK_THAT(d.pop_p1, WithinRel(2.0 * p.gamma_t / 3.0 - p.gamma_t, 1e-14));
  CHECK_THAT(d.pop_m1, WithinRel(p.gamma_t / 3.0, 1e-14));
  CHECK_THAT(d.pop_e, WithinAbs(0.0, 1e-30));
  CHECK(std::abs(d.coh_raman) == 0.0);
  CHECK(std::abs(d.coh_c) == 0.0);
  CHECK(std::abs(d.coh_s) == 0.0);
}

TEST_CASE("bloch_rhs: single-term activation of the signal coherence", "[core-model]") {
  PhysicalParams p = paper_params();
  AtomicState s;
  s.pop_p1 = 1.0;
  const double omega = angular_from_hz(1.0e6);
  const AtomicState d = bloch_rhs(s, {0.0, 0.0}, {omega, 0.0}, p);
  CHECK_THAT(d.coh_s.real(), WithinAbs(0.0, 1e-9));
  CHECK_THAT(d.coh_s.imag(), WithinRel(-omega, 1e-14));
}

TEST_CASE("bloch_rhs matches an independent transcription of the equations", "[core-model]") {
  PhysicalParams p = paper_params(angular_from_hz(1.3e9));
  p.delta_s = angular_from_hz(1.35e9);  // off two-photon resonance as well
  p.delta_r = p.delta_s - p.delta_c;
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const AtomicState s = random_physical_state(rng);
    const complexd wc = angular_from_hz(20e6) * complexd{u(rng), u(rng)};
    const complexd ws = angular_from_hz(2e6) * complexd{u(rng), u(rng)};
    const AtomicState d = bloch_rhs(s, wc, ws, p);
    const FullDerivative ref = reference_rhs(s, wc, ws, p);

    const double scale = p.gamma_opt;  // rad/s normalization
    CHECK_THAT(d.pop_m1, WithinAbs(ref.d_mm.real(), 1e-12 * scale));
    CHECK_THAT(d.pop_e, WithinAbs(ref.d_ee.real(), 1e-12 * scale));
    CHECK_THAT(d.pop_p1, WithinAbs(ref.d_pp.real(), 1e-12 * scale));
    CHECK_THAT(ref.d_mm.imag(), WithinAbs(0.0, 1e-12 * scale));
    CHECK_THAT(ref.d_ee.imag(), WithinAbs(0.0, 1e-12 * scale));
    CHECK_THAT(ref.d_pp.imag(), WithinAbs(0.0, 1e-12 * scale));
    CHECK_THAT(std::abs(d.coh_raman - ref.d_raman), WithinAbs(0.0, 1e-12 * scale));
    CHECK_THAT(std::abs(d.coh_c - ref.d_c), WithinAbs(0.0, 1e-12 * scale));
    CHECK_THAT(std::abs(d.coh_s - ref.d_s), WithinAbs(0.0, 1e-12 * scale));
  }
}

TEST_CASE("bloch_rhs: trace relaxes to one at the transit rate", "[core-model]") {
  PhysicalParams p = paper_params();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    AtomicState s = random_physical_state(rng);
    s.pop_e *= 1.7;  // non-unit trace
    const complexd wc = angular_from_hz(15e6) * complexd{u(rng), u(rng)};
    const complexd ws = angular_from_hz(1e6) * complexd{u(rng), u(rng)};
    const AtomicState d = bloch_rhs(s, wc, ws, p);
    const double expected = p.gamma_t * (1.0 - s.trace());
    CHECK_THAT(d.pop_m1 + d.pop_e + d.pop_p1, WithinAbs(expected, 1e-12 * p.gamma_opt));
  }
}

TEST_CASE("bloch_rhs is affine: linear in the state plus the feeding term", "[core-model]") {
  PhysicalParams p = paper_params();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const complexd wc{angular_from_hz(12e6), angular_from_hz(3e6)};
  const complexd ws{angular_from_hz(0.9e6), -angular_from_hz(0.2e6)};
  const AtomicState feeding = bloch_rhs(AtomicState{}, wc, ws, p);
  for (int trial = 0; trial < 20; ++trial) {
    const AtomicState s1 = random_physical_state(rng);
    const AtomicState s2 = random_physical_state(rng);
    const double a = 2.0 * u(rng), b = 2.0 * u(rng);
    const AtomicState lhs = bloch_rhs(a * s1 + b * s2, wc, ws, p);
    const AtomicState rhs_sum =
        a * bloch_rhs(s1, wc, ws, p) + b * bloch_rhs(s2, wc, ws, p) + (1.0 - a - b) * feeding;
    const double tol = 1e-12 * p.gamma_opt;
    CHECK_THAT(lhs.pop_m1, WithinAbs(rhs_sum.pop_m1, tol));
    CHECK_THAT(lhs.pop_e, WithinAbs(rhs_sum.pop_e, tol));
    CHECK_THAT(lhs.pop_p1, WithinAbs(rhs_sum.pop_p1, tol));
    CHECK_THAT(std::abs(lhs.coh_raman - rhs_sum.coh_raman), WithinAbs(0.0, tol));
    CHECK_THAT(std::abs(lhs.coh_c - rhs_sum.coh_c), WithinAbs(0.0, tol));
    CHECK_THAT(std::abs(lhs.coh_s - rhs_sum.coh_s), WithinAbs(0.0, tol));
  }
}

TEST_CASE("bloch_rhs rejects non-finite inputs", "[core-model]") {
  PhysicalParams p = paper_params();
  AtomicState s;
  s.pop_e = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(bloch_rhs(s, {0, 0}, {0, 0}, p), std::invalid_argument);
  AtomicState ok;
  CHECK_THROWS_AS(bloch_rhs(ok, {std::numeric_limits<double>::infinity(), 0}, {0, 0}, p),
                  std::invalid_argument);
}

TEST_CASE("free decay of the coherences follows the configured rates", "[core-model]") {
  PhysicalParams p = paper_params(0.0);
  AtomicState s;
  s.pop_m1 = 0.4;
  s.pop_p1 = 0.5;
  s.pop_e = 0.1;
  s.coh_raman = std::polar(0.12, 0.7);
  s.coh_c = std::polar(0.15, -0.4);
  s.coh_s = std::polar(0.18, 1.9);

  // rk2 at small steps; fields off, two-photon resonance
  auto integrate = [&](AtomicState st, double t_total, long n) {
    const double dt = t_total / static_cast<double>(n);
    for (long k = 0; k < n; ++k) {
      const AtomicState k1 = bloch_rhs(st, {0, 0}, {0, 0}, p);
      const AtomicState mid = st + (0.5 * dt) * k1;
      st += dt * bloch_rhs(mid, {0, 0}, {0, 0}, p);
    }
    return st;
  };

  SECTION("Raman coherence over 1 us at gamma_raman") {
    const AtomicState out = integrate(s, 1e-6, 100'000);
    const double expected = std::abs(s.coh_raman) * std::exp(-p.gamma_raman * 1e-6);
    CHECK_THAT(std::abs(out.coh_raman), WithinRel(expected, 1e-6));
  }
  SECTION("optical coherences over their own lifetime at gamma_opt") {
    const double t = 5.0 / p.gamma_opt;  // down to e^-5
    const AtomicState out = integrate(s, t, 200'000);
    CHECK_THAT(std::abs(out.coh_c), WithinRel(std::abs(s.coh_c) * std::exp(-5.0), 1e-6));
    CHECK_THAT(std::abs(out.coh_s), WithinRel(std::abs(s.coh_s) * std::exp(-5.0), 1e-6));
  }
  SECTION("modulus decreases monotonically") {
    AtomicState st = s;
    double prev_r = std::abs(st.coh_raman), prev_c = std::abs(st.coh_c);
    for (int k = 0; k < 50; ++k) {
      st = integrate(st, 2e-9, 200);
      CHECK(std::abs(st.coh_raman) <= prev_r * (1.0 + 1e-12));
      CHECK(std::abs(st.coh_c) <= prev_c * (1.0 + 1e-12));
      prev_r = std::abs(st.coh_raman);
      prev_c = std::abs(st.coh_c);
    }
  }
}

TEST_CASE("density matrix reconstruction is Hermitian and round-trips", "[core-model]") {
  std::mt19937_64 rng(3);
  const AtomicState s = random_physical_state(rng);
  const auto m = density_matrix(s);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) CHECK(m[r][c] == std::conj(m[c][r]));
  CHECK(m[0][0].real() == s.pop_m1);
  CHECK(m[1][1].real() == s.pop_e);
  CHECK(m[2][2].real() == s.pop_p1);
  CHECK(m[0][1] == s.coh_c);
  CHECK(m[0][2] == s.coh_raman);
  CHECK(m[2][1] == s.coh_s);
}

TEST_CASE("PhysicalParams validation", "[core-model]") {
  PhysicalParams p = paper_params();
  CHECK_NOTHROW(p.validate());

  PhysicalParams bad = p;
  bad.gamma0 = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = p;
  bad.gamma_opt = 0.4 * bad.gamma0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = p;
  bad.cell_length = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = p;
  bad.eta_s = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = p;
  bad.delta_r = angular_from_hz(1e6);  // breaks delta_r = delta_s - delta_c
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("derive_eta_from_optical_depth", "[core-model]") {
  PhysicalParams p = paper_params();
  SECTION("closed form at the experimental numbers") {
    const double eta = derive_eta_from_optical_depth(3.5, p);
    CHECK_THAT(eta, WithinRel(3.5 * angular_from_hz(0.8e9) / (2.0 * 0.06), 1e-14));
  }
  SECTION("zero depth gives zero eta") {
    CHECK(derive_eta_from_optical_depth(0.0, p) == 0.0);
  }
  SECTION("linearity in the optical depth") {
    CHECK_THAT(derive_eta_from_optical_depth(7.0, p),
               WithinRel(2.0 * derive_eta_from_optical_depth(3.5, p), 1e-14));
  }
  SECTION("consistency with the two-level susceptibility limit") {
    // coupling off, on resonance: exp(-2 kappa L) must equal exp(-OD)
    PhysicalParams q = paper_params(0.0, complexd{0.0, 0.0});
    const double trans = weak_probe_transmission(0.0, q);
    CHECK_THAT(trans, WithinRel(std::exp(-3.5), 1e-12));
  }
}

TEST_CASE("rabi_from_power", "[core-model]") {
  const double dipole = 2.1e-29;  // C m
  SECTION("zero power gives zero Rabi frequency") {
    CHECK(std::abs(rabi_from_power(0.0, 3e-3, dipole)) == 0.0);
  }
  SECTION("square-root power law") {
    const double w1 = rabi_from_power(0.018, 3e-3, dipole).real();
    const double w4 = rabi_from_power(4.0 * 0.018, 3e-3, dipole).real();
    CHECK_THAT(w4, WithinRel(2.0 * w1, 1e-12));
  }
  SECTION("explicit formula") {
    const double power = 0.018, diam = 3e-3;
    const double area = std::numbers::pi * 0.25 * diam * diam;
    const double field = std::sqrt(2.0 * power / (vacuum_permittivity * speed_of_light * area));
    CHECK_THAT(rabi_from_power(power, diam, dipole).real(),
               WithinRel(dipole * field / (2.0 * hbar), 1e-12));
  }
  SECTION("18 mW over a 3 mm beam lands near the default calibration") {
    // The He* D1 dipole moment puts the coupling Rabi frequency at the
    // 2 pi x 20 MHz scale used throughout.
    const double w = rabi_from_power(0.018, 3e-3, dipole).real();
    CHECK(w > angular_from_hz(10e6));
    CHECK(w < angular_from_hz(40e6));
  }
}

TEST_CASE("pump_to_steady_state", "[core-model]") {
  PhysicalParams p = paper_params(0.0, complexd{angular_from_hz(20e6), 0.0});
  const complexd wc = p.omega_c_in;

  SECTION("residual of the Bloch equations vanishes") {
    const AtomicState ss = pump_to_steady_state(p, wc);
    const AtomicState d = bloch_rhs(ss, wc, {0, 0}, p);
    const double tol = 1e-9 * p.gamma_opt;
    CHECK_THAT(d.pop_m1, WithinAbs(0.0, tol));
    CHECK_THAT(d.pop_e, WithinAbs(0.0, tol));
    CHECK_THAT(d.pop_p1, WithinAbs(0.0, tol));
    CHECK_THAT(std::abs(d.coh_raman), WithinAbs(0.0, tol));
    CHECK_THAT(std::abs(d.coh_c), WithinAbs(0.0, tol));
    CHECK_THAT(std::abs(d.coh_s), WithinAbs(0.0, tol));
  }
  SECTION("pumping dominates transit: nearly all population in |1>") {
    const AtomicState ss = pump_to_steady_state(p, wc);
    CHECK(ss.pop_p1 > 0.95);
    CHECK_THAT(ss.trace(), WithinRel(1.0, 1e-12));
  }
  SECTION("matches the affine-system linear solve (oracle)") {
    // Probe bloch_rhs as an affine map over the real components reachable
    // with Omega_s = 0 and solve A x = -b by Gaussian elimination.
    auto to_vec = [](const AtomicState& s) {
      return std::array<double, 9>{s.pop_m1,           s.pop_e,        s.pop_p1,
                                   s.coh_raman.real(), s.coh_raman.imag(),
                                   s.coh_c.real(),     s.coh_c.imag(),
                                   s.coh_s.real(),     s.coh_s.imag()};
    };
    auto from_unit = [](int i) {
      AtomicState s;
      if (i == 0) s.pop_m1 = 1.0;
      else if (i == 1) s.pop_e = 1.0;
      else if (i == 2) s.pop_p1 = 1.0;
      else if (i < 5) s.coh_raman = (i == 3) ? complexd{1, 0} : complexd{0, 1};
      else if (i < 7) s.coh_c = (i == 5) ? complexd{1, 0} : complexd{0, 1};
      else s.coh_s = (i == 7) ? complexd{1, 0} : complexd{0, 1};
      return s;
    };

    constexpr int n = 9;
    const AtomicState b_state = bloch_rhs(AtomicState{}, wc, {0, 0}, p);
    const auto b = to_vec(b_state);
    double a[n][n + 1];
    for (int col = 0; col < n; ++col) {
      const auto d = to_vec(bloch_rhs(from_unit(col), wc, {0, 0}, p));
      for (int row = 0; row < n; ++row) a[row][col] = (d[row] - b[row]);
    }
    for (int row = 0; row < n; ++row) a[row][n] = -b[row];
    // Gaussian elimination with partial pivoting
    for (int col = 0; col < n; ++col) {
      int piv = col;
      for (int row = col + 1; row < n; ++row)
        if (std::abs(a[row][col]) > std::abs(a[piv][col])) piv = row;
      for (int k = 0; k <= n; ++k) std::swap(a[col][k], a[piv][k]);
      REQUIRE(std::abs(a[col][col]) > 0.0);
      for (int row = 0; row < n; ++row) {
        if (row == col) continue;
        const double f = a[row][col] / a[col][col];
        for (int k = col; k <= n; ++k) a[row][k] -= f * a[col][k];
      }
    }
    const AtomicState ss = pump_to_steady_state(p, wc);
    const auto got = to_vec(ss);
    for (int row = 0; row < n; ++row) {
      const double solved = a[row][n] / a[row][row];
      CHECK_THAT(got[row], WithinAbs(solved, 1e-10));
    }
  }
  SECTION("weak coupling limit approaches the feeding ratio") {
    const AtomicState ss = pump_to_steady_state(p, complexd{angular_from_hz(1.0), 0.0});
    CHECK_THAT(ss.pop_m1, WithinAbs(1.0 / 3.0, 1e-6));
    CHECK_THAT(ss.pop_e, WithinAbs(0.0, 1e-6));
    CHECK_THAT(ss.pop_p1, WithinAbs(2.0 / 3.0, 1e-6));
  }
  SECTION("agrees with brute-force time evolution") {
    const AtomicState ss = pump_to_steady_state(p, wc);
    const AtomicState ev = evolve_to_steady_state(p, wc, 1e-12);
    CHECK_THAT(ev.pop_p1, WithinAbs(ss.pop_p1, 1e-6));
    CHECK_THAT(ev.pop_m1, WithinAbs(ss.pop_m1, 1e-6));
    CHECK_THAT(std::abs(ev.coh_c - ss.coh_c), WithinAbs(0.0, 1e-6));
  }
}

TEST_CASE("state_violations flags unphysical slices", "[core-model]") {
  AtomicState s;
  s.pop_m1 = 0.3;
  s.pop_e = 0.2;
  s.pop_p1 = 0.5;
  CHECK(state_violations(s) == 0);
  s.coh_raman = complexd{0.9, 0.0};  // beyond sqrt(pop_m1 pop_p1)
  CHECK(state_violations(s) > 0);
  s.coh_raman = 0.0;
  s.pop_e = -0.1;
  CHECK(state_violations(s) > 0);
}
