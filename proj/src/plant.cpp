#include "hvacsched/plant.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace hvacsched {

namespace {

constexpr double kSetpointMin = 15.0;
constexpr double kSetpointMax = 35.0;

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::runtime_error(msg);
}

}  // namespace

void EnvelopeParams::validate() const {
  require(c_air > 0 && c_mass > 0 && r_ax > 0 && r_ma > 0 && r_xm > 0,
          "envelope parameters must be strictly positive");
  const double tau = c_mass * r_ma;
  require(tau >= 1.0 && tau <= 12.0,
          "envelope mass time constant c_mass*r_ma = " + format_double(tau) +
              " h outside [1, 12] h");
}

void HeatPumpParams::validate() const {
  require(cop0 > 1.0, "cop0 must exceed 1");
  require(p_min >= 0.0 && p_max > p_min, "need 0 <= p_min < p_max");
}

void ThermostatParams::validate() const {
  require(k_p >= 0.0 && k_i >= 0.0, "PI gains must be nonnegative");
  require(r_down < 0.0 && r_up > 0.0, "ramp limits must satisfy r_down < 0 < r_up");
  require(deadband >= 0.0, "deadband must be nonnegative");
  require(anti_windup > 0.0, "anti_windup must be positive");
}

void PlantParams::validate() const {
  envelope.validate();
  heat_pump.validate();
  thermostat.validate();
  require(substeps_per_hour >= 30, "need at least 30 substeps per hour");
}

PlantParams plant_from_config(const Config& cfg) {
  PlantParams pp;
  pp.envelope = {cfg.num("c_air"), cfg.num("c_mass"), cfg.num("r_ax"),
                 cfg.num("r_ma"), cfg.num("r_xm")};
  pp.heat_pump.cop0 = cfg.num("cop0");
  pp.heat_pump.k_lift = cfg.num("k_lift");
  pp.heat_pump.part_load = {cfg.num("plf_c0"), cfg.num("plf_c1"),
                            cfg.num("plf_c2")};
  pp.heat_pump.p_min = cfg.num("p_min");
  pp.heat_pump.p_max = cfg.num("p_max");
  pp.thermostat.k_p = cfg.num("k_p");
  pp.thermostat.k_i = cfg.num("k_i");
  pp.thermostat.p_offset = cfg.num("p_o");
  pp.thermostat.deadband = cfg.num("d_t");
  pp.thermostat.r_down = cfg.num("r_l");
  pp.thermostat.r_up = cfg.num("r_h");
  pp.thermostat.anti_windup = cfg.num("anti_windup");
  pp.validate();
  return pp;
}

Environment env_at(const DayProfile& d, int hour) {
  return {d.t_out[hour], d.t_evap[hour], d.t_adj[hour], d.q_int[hour]};
}

EnvDay env_day(const DayProfile& d) {
  EnvDay e;
  for (int h = 0; h < kHorizon; ++h) e[h] = env_at(d, h);
  return e;
}

Csv day_csv_header() {
  Csv c;
  c.header = {"day",      "hour", "price_c_per_kwh", "t_out",
              "t_evap",   "t_adj", "q_int_kw",       "t_set",
              "p_kw",     "q_kw",  "t_indoor"};
  return c;
}

void append_day(Csv& csv, const DayProfile& d) {
  for (int h = 0; h < kHorizon; ++h) {
    csv.rows.push_back({static_cast<double>(d.day), static_cast<double>(h),
                        d.price[h], d.t_out[h], d.t_evap[h], d.t_adj[h],
                        d.q_int[h], d.t_set[h], d.p[h], d.q[h], d.t_indoor[h]});
  }
}

std::vector<DayProfile> days_from_csv(const Csv& csv) {
  const Csv canon = day_csv_header();
  require(csv.header == canon.header, "day csv header mismatch");
  require(csv.rows.size() % kHorizon == 0,
          "day csv must hold whole days (24 rows each)");
  std::vector<DayProfile> days;
  for (std::size_t base = 0; base < csv.rows.size(); base += kHorizon) {
    DayProfile d;
    d.day = static_cast<int>(csv.rows[base][0]);
    for (int h = 0; h < kHorizon; ++h) {
      const auto& row = csv.rows[base + static_cast<std::size_t>(h)];
      require(static_cast<int>(row[0]) == d.day && static_cast<int>(row[1]) == h,
              "day csv rows out of order near day " + std::to_string(d.day));
      d.price[h] = row[2];
      d.t_out[h] = row[3];
      d.t_evap[h] = row[4];
      d.t_adj[h] = row[5];
      d.q_int[h] = row[6];
      d.t_set[h] = row[7];
      d.p[h] = row[8];
      d.q[h] = row[9];
      d.t_indoor[h] = row[10];
    }
    days.push_back(d);
  }
  return days;
}

double pi_step(double err, PlantState& state, const ThermostatParams& tp,
               double dt, double p_min, double p_max) {
  if (!std::isfinite(err) || !std::isfinite(state.integral_err) ||
      !std::isfinite(state.p_prev)) {
    throw std::runtime_error("pi_step: non-finite input");
  }
  // Dead-band: a unit that is off stays off until the error leaves +-D_T/2.
  if (std::abs(err) < 0.5 * tp.deadband && state.p_prev == 0.0) {
    return 0.0;
  }
  const double integral_next = state.integral_err + err * dt;
  const double raw = tp.p_offset - tp.k_p * err - tp.k_i * integral_next;
  const double lo = std::max(p_min, state.p_prev + tp.r_down * dt);
  const double hi = std::min(p_max, state.p_prev + tp.r_up * dt);
  const double p = std::clamp(raw, lo, hi);
  if (p == raw) {
    // Not saturated: commit the accumulation, bounded so the integral
    // contribution stays within +-anti_windup kW.
    state.integral_err = integral_next;
    if (tp.k_i > 0.0) {
      const double bound = tp.anti_windup / tp.k_i;
      state.integral_err = std::clamp(state.integral_err, -bound, bound);
    }
  }
  state.p_prev = p;
  return p;
}

double heat_pump_output(double p, double t_out, double t_evap,
                        const HeatPumpParams& hp) {
  require(p >= hp.p_min - 1e-9 && p <= hp.p_max + 1e-9,
          "heat_pump_output: power " + format_double(p) + " outside [" +
              format_double(hp.p_min) + ", " + format_double(hp.p_max) + "]");
  const double cop = std::max(1.0, hp.cop0 - hp.k_lift * (t_out - t_evap));
  const double plf = std::max(0.0, hp.part_load.at(p / hp.p_max));
  return p * cop * plf;
}

PlantState envelope_substep(const PlantState& s, double q_cool,
                            const Environment& e, const EnvelopeParams& ep,
                            double dt) {
  require(dt > 0.0 && dt <= 1.0 / 30 + 1e-12,
          "envelope_substep: dt must be in (0, 1/30] h");
  const double flow_ax = (e.t_out - s.t_indoor) / ep.r_ax;
  const double flow_ma = (s.t_mass - s.t_indoor) / ep.r_ma;
  const double flow_xm = (e.t_out - s.t_mass) / ep.r_xm;
  const double d_air = (flow_ax + flow_ma + e.q_internal - q_cool) *
                       (dt / ep.c_air);
  const double d_mass = (-flow_ma + flow_xm) * (dt / ep.c_mass);
  if (std::abs(d_air) > 5.0) {
    throw std::runtime_error(
        "envelope unstable: air node moved " + format_double(d_air) +
        " degC in one substep (raise c_air or shrink dt)");
  }
  if (std::abs(d_mass) > 5.0) {
    throw std::runtime_error(
        "envelope unstable: mass node moved " + format_double(d_mass) +
        " degC in one substep (raise c_mass or shrink dt)");
  }
  PlantState out = s;
  out.t_indoor += d_air;
  out.t_mass += d_mass;
  return out;
}

SimDay simulate_day(const PlantState& init, const Hourly& setpoints,
                    const EnvDay& env, const PlantParams& pp) {
  pp.validate();
  for (double ts : setpoints) {
    require(ts >= kSetpointMin && ts <= kSetpointMax,
            "set-point " + format_double(ts) + " outside [" +
                format_double(kSetpointMin) + ", " +
                format_double(kSetpointMax) + "] degC");
  }
  PlantState st = init;
  st.integral_err = 0.0;
  st.p_prev = 0.0;
  const double dt = 1.0 / pp.substeps_per_hour;
  SimDay out;
  for (int t = 0; t < kHorizon; ++t) {
    double p_sum = 0.0;
    double q_sum = 0.0;
    for (int s = 0; s < pp.substeps_per_hour; ++s) {
      const double err = setpoints[t] - st.t_indoor;
      const double p = pi_step(err, st, pp.thermostat, dt, pp.heat_pump.p_min,
                               pp.heat_pump.p_max);
      const double q = heat_pump_output(p, env[t].t_out, env[t].t_evap,
                                        pp.heat_pump);
      st = envelope_substep(st, q, env[t], pp.envelope, dt);
      p_sum += p;
      q_sum += q;
    }
    out.profile.t_set[t] = setpoints[t];
    out.profile.t_out[t] = env[t].t_out;
    out.profile.t_evap[t] = env[t].t_evap;
    out.profile.t_adj[t] = env[t].t_adj;
    out.profile.q_int[t] = env[t].q_internal;
    out.profile.p[t] = p_sum / pp.substeps_per_hour;
    out.profile.q[t] = q_sum / pp.substeps_per_hour;
    out.profile.t_indoor[t] = st.t_indoor;
  }
  out.final_state = st;
  return out;
}

SimDay simulate_day_direct_power(const PlantState& init, const Hourly& p_cmd,
                                 const EnvDay& env, const PlantParams& pp) {
  pp.validate();
  for (double p : p_cmd) {
    require(p >= pp.heat_pump.p_min - 1e-9 && p <= pp.heat_pump.p_max + 1e-9,
            "direct power command outside heat pump range");
  }
  PlantState st = init;
  const double dt = 1.0 / pp.substeps_per_hour;
  SimDay out;
  for (int t = 0; t < kHorizon; ++t) {
    const double p = p_cmd[t];
    const double q = heat_pump_output(p, env[t].t_out, env[t].t_evap,
                                      pp.heat_pump);
    for (int s = 0; s < pp.substeps_per_hour; ++s) {
      st = envelope_substep(st, q, env[t], pp.envelope, dt);
    }
    st.p_prev = p;
    out.profile.t_set[t] = 0.0;
    out.profile.t_out[t] = env[t].t_out;
    out.profile.t_evap[t] = env[t].t_evap;
    out.profile.t_adj[t] = env[t].t_adj;
    out.profile.q_int[t] = env[t].q_internal;
    out.profile.p[t] = p;
    out.profile.q[t] = q;
    out.profile.t_indoor[t] = st.t_indoor;
  }
  out.final_state = st;
  return out;
}

PulseResponse pulse_response(const PlantState& init, const EnvDay& env,
                             int n_blocks, const PlantParams& pp) {
  require(n_blocks >= 1, "pulse_response: need at least one block");
  require(pp.heat_pump.p_min == 0.0,
          "pulse_response assumes blocks stack from zero power");
  PulseResponse r;
  r.n_blocks = n_blocks;
  r.block_width = pp.heat_pump.p_max / n_blocks;
  r.f.assign(static_cast<std::size_t>(kHorizon) * kHorizon * n_blocks, 0.0);

  const Hourly zero{};
  r.t_free = simulate_day_direct_power(init, zero, env, pp).profile.t_indoor;

  const double h = 0.01 * r.block_width;
  for (int tau = 0; tau < kHorizon; ++tau) {
    for (int n = 0; n < n_blocks; ++n) {
      const double mid = (n + 0.5) * r.block_width;
      Hourly plus{};
      Hourly minus{};
      plus[tau] = mid + h;
      minus[tau] = mid - h;
      const auto up = simulate_day_direct_power(init, plus, env, pp);
      const auto dn = simulate_day_direct_power(init, minus, env, pp);
      for (int t = 0; t < kHorizon; ++t) {
        r.at(t, tau, n) =
            (up.profile.t_indoor[t] - dn.profile.t_indoor[t]) / (2.0 * h);
      }
    }
  }
  return r;
}

}  // namespace hvacsched
