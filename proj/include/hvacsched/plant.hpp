#pragma once

#include <array>
#include <vector>

#include "hvacsched/config.hpp"
#include "hvacsched/csvio.hpp"

// Ground-truth building simulator: two-node RC envelope, variable-speed
// heat pump with temperature-lift COP, PI thermostat with dead-band,
// ramp limits and anti-windup. Forward Euler at 60 s substeps, hourly
// aggregation. All functions are pure over value-typed state.

namespace hvacsched {

inline constexpr int kHorizon = 24;
using Hourly = std::array<double, kHorizon>;

struct EnvelopeParams {
  double c_air = 1.5;    // kWh/degC, indoor air node
  double c_mass = 12.0;  // kWh/degC, envelope mass node
  double r_ax = 1.2;     // degC/kW, air <-> outdoor
  double r_ma = 0.35;    // degC/kW, mass <-> air
  double r_xm = 2.5;     // degC/kW, mass <-> outdoor
  void validate() const;
};

struct PartLoad {
  // Efficiency multiplier plf(r) = c0 + c1*r + c2*r^2 at load ratio r.
  // Defaults keep thermal output linear in power, which also keeps the
  // hourly power -> temperature map piecewise-linearizable exactly.
  double c0 = 1.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double at(double r) const { return c0 + c1 * r + c2 * r * r; }
};

struct HeatPumpParams {
  double cop0 = 3.5;     // nominal COP
  double k_lift = 0.06;  // COP loss per degC of (t_out - t_evap)
  PartLoad part_load;
  double p_min = 0.0;  // kW electrical
  double p_max = 50.0;
  void validate() const;
};

struct ThermostatParams {
  double k_p = 8.0;         // kW/degC
  double k_i = 0.8;         // kW/(degC*h)
  double p_offset = 0.0;    // kW
  double deadband = 1.0;    // degC
  double r_down = -40.0;    // kW/h
  double r_up = 30.0;       // kW/h
  double anti_windup = 50;  // kW bound on the integral contribution
  void validate() const;
};

struct PlantState {
  double t_indoor = 23.0;    // degC
  double t_mass = 23.0;      // degC
  double integral_err = 0.0; // degC*h
  double p_prev = 0.0;       // kW, previous commanded power
};

struct Environment {
  double t_out = 25.0;      // degC
  double t_evap = 12.0;     // degC
  double t_adj = 25.0;      // degC (adjacent space; model input only)
  double q_internal = 0.0;  // kW
};

using EnvDay = std::array<Environment, kHorizon>;

struct PlantParams {
  EnvelopeParams envelope;
  HeatPumpParams heat_pump;
  ThermostatParams thermostat;
  int substeps_per_hour = 60;
  void validate() const;
};

PlantParams plant_from_config(const Config& cfg);

// One day of hourly series. p/q are substep averages, t_indoor is the
// end-of-hour sample.
struct DayProfile {
  int day = 0;
  Hourly price{};   // cents/kWh
  Hourly t_out{};
  Hourly t_evap{};
  Hourly t_adj{};
  Hourly q_int{};
  Hourly t_set{};
  Hourly p{};
  Hourly q{};
  Hourly t_indoor{};
};

Environment env_at(const DayProfile& d, int hour);
EnvDay env_day(const DayProfile& d);

Csv day_csv_header();
void append_day(Csv& csv, const DayProfile& d);
std::vector<DayProfile> days_from_csv(const Csv& csv);

// PI thermostat step over dt hours. Reads/updates state.integral_err and
// state.p_prev; returns the commanded power.
double pi_step(double err, PlantState& state, const ThermostatParams& tp,
               double dt = 1.0, double p_min = 0.0, double p_max = 50.0);

// Thermal output (kW) of the heat pump at electrical power p.
double heat_pump_output(double p, double t_out, double t_evap,
                        const HeatPumpParams& hp);

// One forward-Euler RC update over dt hours (dt <= 1/30).
PlantState envelope_substep(const PlantState& s, double q_cool,
                            const Environment& e, const EnvelopeParams& ep,
                            double dt);

struct SimDay {
  DayProfile profile;
  PlantState final_state;
};

// Closed-loop day: thermostat -> heat pump -> envelope at substep
// resolution. integral_err and p_prev restart at zero (unit is off
// overnight); t_indoor/t_mass carry in from init.
SimDay simulate_day(const PlantState& init, const Hourly& setpoints,
                    const EnvDay& env, const PlantParams& pp);

// Open-loop day: hourly-constant electrical power commands, thermostat
// bypassed. Used for response identification and oracle checks.
SimDay simulate_day_direct_power(const PlantState& init, const Hourly& p_cmd,
                                 const EnvDay& env, const PlantParams& pp);

// Sensitivity of indoor temperature to per-block power injections:
// f(t, tau, n) = dT_i(end of hour t) / d(block-n power during hour tau),
// central differences around the block midpoint with the thermostat
// bypassed. t_free is the no-cooling trajectory.
struct PulseResponse {
  int n_blocks = 0;
  double block_width = 0.0;  // kW per block
  Hourly t_free{};
  std::vector<double> f;  // kHorizon * kHorizon * n_blocks

  double at(int t, int tau, int n) const {
    return f[static_cast<std::size_t>((t * kHorizon + tau) * n_blocks + n)];
  }
  double& at(int t, int tau, int n) {
    return f[static_cast<std::size_t>((t * kHorizon + tau) * n_blocks + n)];
  }
};

PulseResponse pulse_response(const PlantState& init, const EnvDay& env,
                             int n_blocks, const PlantParams& pp);

}  // namespace hvacsched
