#pragma once

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>

#include "eitstore/scenarios.hpp"
#include "eitstore/units.hpp"

namespace eitstore {

using json = nlohmann::ordered_json;

/// Configuration errors map to CLI exit code 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                                const std::string& path) {
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key))
      throw ConfigError("unknown key '" + path + key + "' (strict mode)");
}

inline double get_num(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.contains(key)) throw ConfigError("missing key '" + path + key + "'");
  if (!obj[key].is_number()) throw ConfigError("key '" + path + key + "' must be a number");
  return obj[key].get<double>();
}

inline double get_num_or(const json& obj, const std::string& key, double fallback) {
  return obj.contains(key) ? obj[key].get<double>() : fallback;
}

}  // namespace detail

/// Effective averaged-intensity ratio of a scenario (from its stored coupling
/// amplitude against the entrance calibration).
inline double averaged_intensity_ratio_of(const Scenario& s) {
  const double entrance = angular_from_hz(s.coupling_entrance_rabi_hz);
  if (entrance == 0.0) return 1.0;
  return std::norm(s.params.omega_c_in) / (entrance * entrance);
}

/// Fully explicit JSON form of a scenario. All frequencies are ordinary
/// frequencies in Hz (converted to rad/s internally); times in seconds.
inline json scenario_to_json(const Scenario& s) {
  json j;
  j["name"] = s.name;
  json phys;
  phys["gamma0_hz"] = hz_from_angular(s.params.gamma0);
  phys["gamma_t_hz"] = hz_from_angular(s.params.gamma_t);
  phys["gamma_raman_hz"] = hz_from_angular(s.params.gamma_raman);
  phys["gamma_opt_hz"] = hz_from_angular(s.params.gamma_opt);
  phys["delta_c_hz"] = hz_from_angular(s.params.delta_c);
  phys["delta_s_hz"] = hz_from_angular(s.params.delta_s);
  phys["optical_depth"] = s.optical_depth;
  phys["eta_scale"] = s.eta_scale;
  phys["cell_length_m"] = s.params.cell_length;
  json coupling;
  coupling["mode"] = s.coupling_mode;
  coupling["entrance_rabi_hz"] = s.coupling_entrance_rabi_hz;
  coupling["averaged_intensity_ratio"] =
      s.coupling_mode == "averaged" ? averaged_intensity_ratio_of(s) : 1.0;
  phys["coupling"] = coupling;
  phys["signal_ratio"] = s.signal_ratio;
  phys["signal_rabi_hz"] = hz_from_angular(std::abs(s.timeline.pulse.peak_rabi));
  j["physics"] = phys;

  json tl;
  tl["pulse_rise_s"] = s.timeline.pulse.rise_tau;
  tl["pulse_fall_s"] = s.timeline.pulse.fall_tau;
  tl["peak_time_s"] = s.timeline.pulse.peak_time;
  tl["gate_start_s"] = s.timeline.gate_start;
  tl["gate_ramp_s"] = s.timeline.gate_ramp;
  tl["switch_off_s"] = s.timeline.t_switch_off;
  tl["storage_s"] = s.timeline.storage_time;
  tl["switch_ramp_s"] = s.timeline.switch_ramp;
  tl["pump_end_s"] = s.timeline.t_pump_end;
  tl["duration_s"] = s.timeline.duration;
  j["timeline"] = tl;

  json grid;
  grid["dt_s"] = s.dt;
  grid["exit_stride"] = s.exit_stride;
  grid["snapshot_stride"] = s.snapshot_stride;
  j["grid"] = grid;

  j["integrator"] = s.integrator == Integrator::rk2 ? "rk2" : "euler";
  j["init"] = s.init == InitMode::pure_p1        ? "pure_p1"
              : s.init == InitMode::feeding_ratio ? "feeding_ratio"
                                                  : "steady_state";

  json an;
  an["scan_k"] = s.analysis.scan_k;
  an["contrast_alpha"] = s.analysis.contrast_alpha;
  an["threshold"] = s.analysis.threshold;
  an["i_c_ratio"] = s.analysis.i_c_ratio;
  an["retrieval_guard_s"] = s.analysis.retrieval_guard;
  an["homodyne_stride"] = s.analysis.homodyne_stride;
  an["notch_period_s"] = s.analysis.notch_period;
  json noise;
  noise["white_sigma"] = s.analysis.noise.white_sigma;
  noise["artifact_amplitude"] = s.analysis.noise.artifact_amplitude;
  noise["artifact_period_s"] = s.analysis.noise.artifact_period;
  noise["seed"] = s.analysis.noise.seed;
  an["noise"] = noise;
  j["analysis"] = an;
  return j;
}

inline Scenario scenario_from_json(const json& j) {
  detail::reject_unknown_keys(
      j, {"name", "physics", "timeline", "grid", "integrator", "init", "analysis"}, "");
  Scenario s;
  s.name = j.value("name", "inline");

  if (!j.contains("physics") || !j["physics"].is_object())
    throw ConfigError("missing object 'physics'");
  const json& phys = j["physics"];
  detail::reject_unknown_keys(phys,
                              {"gamma0_hz", "gamma_t_hz", "gamma_raman_hz", "gamma_opt_hz",
                               "delta_c_hz", "delta_s_hz", "optical_depth", "eta_scale",
                               "cell_length_m", "coupling", "signal_ratio", "signal_rabi_hz"},
                              "physics.");
  PhysicalParams& p = s.params;
  p.gamma0 = angular_from_hz(detail::get_num(phys, "gamma0_hz", "physics."));
  p.gamma_t = angular_from_hz(detail::get_num(phys, "gamma_t_hz", "physics."));
  p.gamma_raman = angular_from_hz(detail::get_num(phys, "gamma_raman_hz", "physics."));
  p.gamma_opt = angular_from_hz(detail::get_num(phys, "gamma_opt_hz", "physics."));
  p.delta_c = angular_from_hz(detail::get_num(phys, "delta_c_hz", "physics."));
  p.delta_s = angular_from_hz(detail::get_num(phys, "delta_s_hz", "physics."));
  p.delta_r = p.delta_s - p.delta_c;
  p.cell_length = detail::get_num(phys, "cell_length_m", "physics.");
  s.optical_depth = detail::get_num(phys, "optical_depth", "physics.");
  s.eta_scale = detail::get_num_or(phys, "eta_scale", 1.0);
  s.signal_ratio = detail::get_num_or(phys, "signal_ratio", 0.05);

  if (!phys.contains("coupling") || !phys["coupling"].is_object())
    throw ConfigError("missing object 'physics.coupling'");
  const json& coup = phys["coupling"];
  detail::reject_unknown_keys(coup,
                              {"mode", "entrance_rabi_hz", "averaged_intensity_ratio", "power_w",
                               "beam_diameter_m", "dipole_cm"},
                              "physics.coupling.");
  s.coupling_mode = coup.value("mode", "averaged");
  if (s.coupling_mode != "averaged" && s.coupling_mode != "entrance")
    throw ConfigError("physics.coupling.mode must be 'averaged' or 'entrance'");
  double entrance_hz;
  if (coup.contains("power_w")) {
    if (coup.contains("entrance_rabi_hz"))
      throw ConfigError("physics.coupling: give either entrance_rabi_hz or power_w, not both");
    const complexd rabi = rabi_from_power(
        detail::get_num(coup, "power_w", "physics.coupling."),
        detail::get_num(coup, "beam_diameter_m", "physics.coupling."),
        detail::get_num(coup, "dipole_cm", "physics.coupling."));
    entrance_hz = hz_from_angular(rabi.real());
  } else {
    entrance_hz = detail::get_num(coup, "entrance_rabi_hz", "physics.coupling.");
  }
  s.coupling_entrance_rabi_hz = entrance_hz;
  const double ratio =
      s.coupling_mode == "averaged"
          ? detail::get_num(coup, "averaged_intensity_ratio", "physics.coupling.")
          : 1.0;
  if (!(ratio > 0.0 && ratio <= 1.0))
    throw ConfigError("physics.coupling.averaged_intensity_ratio must be in (0, 1]");
  p.omega_c_in = complexd{angular_from_hz(entrance_hz) * std::sqrt(ratio), 0.0};

  try {
    p.eta_s = p.eta_c = s.eta_scale * derive_eta_from_optical_depth(s.optical_depth, p);
    p.validate();
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(std::string("physics: ") + ex.what());
  }

  if (!j.contains("timeline") || !j["timeline"].is_object())
    throw ConfigError("missing object 'timeline'");
  const json& tl = j["timeline"];
  detail::reject_unknown_keys(tl,
                              {"pulse_rise_s", "pulse_fall_s", "peak_time_s", "gate_start_s",
                               "gate_ramp_s", "switch_off_s", "storage_s", "switch_ramp_s",
                               "pump_end_s", "duration_s"},
                              "timeline.");
  s.timeline.pulse.rise_tau = detail::get_num(tl, "pulse_rise_s", "timeline.");
  s.timeline.pulse.fall_tau = detail::get_num(tl, "pulse_fall_s", "timeline.");
  s.timeline.pulse.peak_time = detail::get_num(tl, "peak_time_s", "timeline.");
  if (phys.contains("signal_rabi_hz"))
    s.timeline.pulse.peak_rabi =
        complexd{angular_from_hz(phys["signal_rabi_hz"].get<double>()), 0.0};
  else
    s.timeline.pulse.peak_rabi = s.params.omega_c_in * s.signal_ratio;
  s.timeline.gate_start = detail::get_num(tl, "gate_start_s", "timeline.");
  s.timeline.gate_ramp = detail::get_num(tl, "gate_ramp_s", "timeline.");
  s.timeline.t_switch_off = detail::get_num(tl, "switch_off_s", "timeline.");
  s.timeline.storage_time = detail::get_num(tl, "storage_s", "timeline.");
  s.timeline.switch_ramp = detail::get_num_or(tl, "switch_ramp_s", 0.0);
  s.timeline.t_pump_end = detail::get_num_or(tl, "pump_end_s", 0.0);
  s.timeline.duration = detail::get_num(tl, "duration_s", "timeline.");
  try {
    s.timeline.validate();
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(std::string("timeline: ") + ex.what());
  }

  if (!j.contains("grid") || !j["grid"].is_object()) throw ConfigError("missing object 'grid'");
  const json& grid = j["grid"];
  detail::reject_unknown_keys(grid, {"dt_s", "dz_m", "exit_stride", "snapshot_stride"}, "grid.");
  s.dt = detail::get_num(grid, "dt_s", "grid.");
  if (grid.contains("dz_m")) {
    const double dz = grid["dz_m"].get<double>();
    const double expected = speed_of_light * s.dt;
    if (std::abs(dz - expected) > 1e-9 * expected)
      throw ConfigError("grid.dz_m = " + std::to_string(dz) +
                        " violates the characteristic alignment dz = c dt = " +
                        std::to_string(expected) + " m");
  }
  s.exit_stride = static_cast<int>(detail::get_num_or(grid, "exit_stride", 1));
  s.snapshot_stride = static_cast<long>(detail::get_num_or(grid, "snapshot_stride", 100000));

  const std::string integ = j.value("integrator", "euler");
  if (integ == "euler")
    s.integrator = Integrator::euler;
  else if (integ == "rk2")
    s.integrator = Integrator::rk2;
  else
    throw ConfigError("integrator must be 'euler' or 'rk2'");

  const std::string init = j.value("init", "steady_state");
  if (init == "steady_state")
    s.init = InitMode::steady_state;
  else if (init == "feeding_ratio")
    s.init = InitMode::feeding_ratio;
  else if (init == "pure_p1")
    s.init = InitMode::pure_p1;
  else
    throw ConfigError("init must be 'steady_state', 'feeding_ratio' or 'pure_p1'");

  if (j.contains("analysis")) {
    const json& an = j["analysis"];
    detail::reject_unknown_keys(an,
                                {"scan_k", "contrast_alpha", "threshold", "i_c_ratio",
                                 "retrieval_guard_s", "homodyne_stride", "notch_period_s",
                                 "noise"},
                                "analysis.");
    s.analysis.scan_k = static_cast<std::size_t>(detail::get_num_or(an, "scan_k", 64));
    s.analysis.contrast_alpha = detail::get_num_or(an, "contrast_alpha", 2.0);
    s.analysis.threshold = detail::get_num_or(an, "threshold", 0.05);
    s.analysis.i_c_ratio = detail::get_num_or(an, "i_c_ratio", 0.5);
    s.analysis.retrieval_guard = detail::get_num_or(an, "retrieval_guard_s", 100e-9);
    s.analysis.homodyne_stride = static_cast<long>(detail::get_num_or(an, "homodyne_stride", 100));
    s.analysis.notch_period = detail::get_num_or(an, "notch_period_s", 0.0);
    if (an.contains("noise")) {
      const json& noise = an["noise"];
      detail::reject_unknown_keys(
          noise, {"white_sigma", "artifact_amplitude", "artifact_period_s", "seed"},
          "analysis.noise.");
      s.analysis.noise.white_sigma = detail::get_num_or(noise, "white_sigma", 0.0);
      s.analysis.noise.artifact_amplitude = detail::get_num_or(noise, "artifact_amplitude", 0.0);
      s.analysis.noise.artifact_period = detail::get_num_or(noise, "artifact_period_s", 90e-9);
      s.analysis.noise.seed = static_cast<unsigned long>(detail::get_num_or(noise, "seed", 0));
    }
  }
  return s;
}

struct RunConfig {
  Scenario scenario;
  std::string preset_name;  // empty for inline scenarios
  std::filesystem::path output_dir = "out";
  unsigned workers = 0;  // 0 = hardware concurrency
  unsigned long seed = 0;
  int verbosity = 1;
};

/// Parse a run configuration: either {"scenario": "<preset name>"} or
/// {"scenario": { ...inline... }}, plus execution settings. Unknown keys are
/// rejected. The returned config has every default resolved; echo_manifest
/// serializes it back so that parse(echo(config)) == config.
inline RunConfig parse_config(const json& j) {
  detail::reject_unknown_keys(
      j, {"scenario", "preset", "output_dir", "workers", "seed", "verbosity"}, "");
  RunConfig cfg;
  if (!j.contains("scenario")) throw ConfigError("missing 'scenario' (preset name or object)");
  if (j["scenario"].is_string()) {
    cfg.preset_name = j["scenario"].get<std::string>();
    try {
      cfg.scenario = make_scenario(cfg.preset_name);
    } catch (const std::invalid_argument& ex) {
      throw ConfigError(ex.what());
    }
  } else if (j["scenario"].is_object()) {
    if (j.contains("preset")) cfg.preset_name = j["preset"].get<std::string>();
    cfg.scenario = scenario_from_json(j["scenario"]);
  } else {
    throw ConfigError("'scenario' must be a preset name or an inline scenario object");
  }
  if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
  cfg.workers = static_cast<unsigned>(detail::get_num_or(j, "workers", 0));
  cfg.seed = static_cast<unsigned long>(detail::get_num_or(j, "seed", 0));
  cfg.verbosity = static_cast<int>(detail::get_num_or(j, "verbosity", 1));
  cfg.scenario.seed = cfg.seed;
  cfg.scenario.analysis.noise.seed = cfg.seed;
  return cfg;
}

inline RunConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& ex) {
    throw ConfigError("config '" + path.string() + "': " + ex.what());
  }
  return parse_config(j);
}

/// Fully resolved manifest: re-parsing it reproduces the run bit-identically.
inline json echo_manifest(const RunConfig& cfg) {
  json j;
  if (!cfg.preset_name.empty()) j["preset"] = cfg.preset_name;
  j["scenario"] = scenario_to_json(cfg.scenario);
  j["output_dir"] = cfg.output_dir.string();
  j["workers"] = cfg.workers;
  j["seed"] = cfg.seed;
  j["verbosity"] = cfg.verbosity;
  return j;
}

}  // namespace eitstore
