#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "eitstore/grid.hpp"
#include "eitstore/lax.hpp"
#include "eitstore/pulse.hpp"
#include "eitstore/scenarios.hpp"
#include "eitstore/simulate.hpp"

using namespace eitstore;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("pulse_envelope: two-sided exponential", "[solver]") {
  PulseShape shape;
  shape.rise_tau = 2e-6;
  shape.fall_tau = 150e-9;
  shape.peak_time = 5e-6;
  shape.peak_rabi = complexd{1.25e6, 0.0};
  shape.validate();

  SECTION("continuous at the joint") {
    CHECK(pulse_envelope(shape.peak_time, shape) == shape.peak_rabi);
  }
  SECTION("one rise constant before the peak") {
    CHECK_THAT(pulse_envelope(shape.peak_time - shape.rise_tau, shape).real(),
               WithinRel(shape.peak_rabi.real() / std::exp(1.0), 1e-12));
  }
  SECTION("150 ns fall constant after the peak") {
    CHECK_THAT(pulse_envelope(shape.peak_time + 150e-9, shape).real(),
               WithinRel(shape.peak_rabi.real() / std::exp(1.0), 1e-12));
  }
  SECTION("asymmetry is enforced") {
    PulseShape bad = shape;
    bad.fall_tau = bad.rise_tau;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  }
}

TEST_CASE("SequenceTimeline validation and gates", "[solver]") {
  SequenceTimeline tl;
  tl.pulse.rise_tau = 2e-6;
  tl.pulse.fall_tau = 150e-9;
  tl.pulse.peak_time = 7e-6;
  tl.pulse.peak_rabi = complexd{1.0, 0.0};
  tl.gate_start = 1e-6;
  tl.gate_ramp = 0.5e-6;
  tl.t_switch_off = 7.3e-6;
  tl.storage_time = 0.6e-6;
  tl.duration = 12e-6;
  CHECK_NOTHROW(tl.validate());

  SECTION("ordering violations throw") {
    SequenceTimeline bad = tl;
    bad.gate_start = 8e-6;  // pulse start after switch-off
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = tl;
    bad.storage_time = 10e-6;  // switch-on past the record
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = tl;
    bad.storage_time = -1e-6;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  }
  SECTION("coupling gate: on, off during storage, on again") {
    CHECK(tl.coupling_gate(0.0) == 1.0);
    CHECK(tl.coupling_gate(7.4e-6) == 0.0);
    CHECK(tl.coupling_gate(8.0e-6) == 1.0);
  }
  SECTION("signal gate rises smoothly from zero") {
    CHECK(tl.signal_gate(0.9e-6) == 0.0);
    CHECK(tl.signal_gate(1.25e-6) > 0.0);
    CHECK(tl.signal_gate(1.25e-6) < 1.0);
    CHECK(tl.signal_gate(1.6e-6) == 1.0);
    CHECK(std::abs(tl.signal_input(0.5e-6)) == 0.0);
  }
  SECTION("linear switch ramp") {
    SequenceTimeline ramped = tl;
    ramped.switch_ramp = 100e-9;
    CHECK_THAT(ramped.coupling_gate(7.35e-6), WithinAbs(0.5, 1e-12));
    CHECK_THAT(ramped.coupling_gate(7.95e-6), WithinAbs(0.5, 1e-12));
  }
}

TEST_CASE("FieldGrid enforces the characteristic alignment", "[solver]") {
  const FieldGrid g = FieldGrid::make(2e-12, 0.06, 1e-6);
  CHECK(g.dz == speed_of_light * 2e-12);
  CHECK(g.nz == 100);  // the paper grid: 100 spatial steps over 6 cm
  CHECK(std::abs(g.nz * g.dz - 0.06) <= g.dz);

  const FieldGrid desk = FieldGrid::make(2e-11, 0.06, 1e-6);
  CHECK(desk.nz == 10);

  CHECK_THROWS_AS(FieldGrid::make(1e-8, 0.06, 1e-6), std::invalid_argument);  // nz < 2
}

TEST_CASE("lax_step", "[solver]") {
  const double dt = 2e-11;
  const double dz = speed_of_light * dt;
  const std::size_t n = 11;

  SECTION("free propagation is the exact shift at CFL = 1") {
    std::vector<complexd> field(n), sigma(n, complexd{0, 0});
    for (std::size_t j = 0; j < n; ++j) field[j] = complexd{static_cast<double>(j), -1.0};
    const auto next = lax_step(field, sigma, dz, dt, 0.0, complexd{99.0, 0.0});
    CHECK(next[0] == complexd{99.0, 0.0});
    for (std::size_t j = 1; j < n; ++j) CHECK(next[j] == field[j - 1]);
  }
  SECTION("constant field with zero source is a fixed point") {
    std::vector<complexd> field(n, complexd{3.5, 1.5});
    std::vector<complexd> sigma(n, complexd{0, 0});
    const auto next = lax_step(field, sigma, dz, dt, 0.0, complexd{3.5, 1.5});
    for (std::size_t j = 0; j < n; ++j) {
      CHECK_THAT(next[j].real(), WithinRel(3.5, 1e-14));
      CHECK_THAT(next[j].imag(), WithinRel(1.5, 1e-14));
    }
  }
  SECTION("uniform constant source grows linearly along z") {
    const double eta = 1.5e11;
    const complexd sigma0{0.2, -0.1};
    std::vector<complexd> field(n, complexd{0, 0});
    std::vector<complexd> sigma(n, sigma0);
    // march for enough steps to cross the whole cell
    for (std::size_t step = 0; step < 3 * n; ++step)
      field = lax_step(field, sigma, dz, dt, eta, complexd{0.0, 0.0});
    const complexd expected = complexd{0.0, eta} * sigma0 * (dz * static_cast<double>(n - 1));
    CHECK_THAT(std::abs(field[n - 1] - expected), WithinAbs(0.0, 1e-9 * std::abs(expected)));
  }
}

TEST_CASE("simulate_sequence: zero signal input stays dark", "[solver]") {
  Scenario s = make_scenario("eit-desk");
  s.timeline.pulse.peak_rabi = complexd{0.0, 0.0};
  s.timeline.duration = 9e-6;
  SimulationConfig cfg = s.solver_config();
  cfg.snapshot_stride = 100'000;
  const SimulationRecord rec = simulate_sequence(cfg);
  for (const complexd& v : rec.omega_s_exit) CHECK(std::abs(v) == 0.0);
}

TEST_CASE("simulate_sequence: vacuum propagation reproduces the delayed input", "[solver]") {
  Scenario s = make_scenario("eit-desk");
  s.params.eta_s = s.params.eta_c = 0.0;  // no medium back-action
  s.timeline.duration = 9e-6;
  SimulationConfig cfg = s.solver_config();
  cfg.snapshot_stride = 0;
  const SimulationRecord rec = simulate_sequence(cfg);

  // exit(t) = input(t - L/c) on the characteristic grid: exactly nz samples late
  double num = 0.0, den = 0.0;
  const std::size_t nz = static_cast<std::size_t>(rec.nz);
  for (std::size_t k = nz; k < rec.omega_s_exit.size(); ++k) {
    num += std::norm(rec.omega_s_exit[k] - rec.omega_s_input[k - nz]);
    den += std::norm(rec.omega_s_input[k - nz]);
  }
  REQUIRE(den > 0.0);
  CHECK(std::sqrt(num / den) < 0.01);
}

TEST_CASE("integrator stability guard", "[solver]") {
  PhysicalParams p = paper_params(angular_from_hz(20e9));
  CHECK_THROWS_AS(check_integrator_stability(p, 2e-12, Integrator::euler), std::invalid_argument);
  CHECK_NOTHROW(check_integrator_stability(p, 2e-12, Integrator::rk2));
  PhysicalParams q = paper_params(angular_from_hz(1e9));
  CHECK_NOTHROW(check_integrator_stability(q, 2e-11, Integrator::euler));
}

TEST_CASE("simulate_sequence: trace stays pinned at snapshots", "[solver]") {
  Scenario s = make_scenario("eit-desk");
  s.timeline.duration = 10e-6;
  SimulationConfig cfg = s.solver_config();
  cfg.snapshot_stride = 50'000;
  const SimulationRecord rec = simulate_sequence(cfg);
  REQUIRE(!rec.snapshots.empty());
  CHECK(rec.max_trace_error < 1e-6);
  CHECK(rec.population_warnings == 0);
}
