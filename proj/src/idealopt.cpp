#include "hvacsched/idealopt.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include "hvacsched/csvio.hpp"

namespace hvacsched {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Hourly totals split into fill-ordered block loads.
std::vector<double> fill_split(const std::vector<double>& power,
                               const std::vector<double>& caps) {
  const int nh = static_cast<int>(power.size());
  const int ns = static_cast<int>(caps.size());
  std::vector<double> d(nh * ns, 0.0);
  for (int t = 0; t < nh; ++t) {
    double rem = power[t];
    for (int n = 0; n < ns; ++n) {
      const double v = std::clamp(rem, 0.0, caps[n]);
      d[t * ns + n] = v;
      rem -= v;
    }
  }
  return d;
}

double dot_objective(const LpProblem& p, const std::vector<double>& x) {
  double v = 0.0;
  for (int j = 0; j < p.n_vars(); ++j) v += p.c[j] * x[j];
  return v;
}

bool point_within(const LpProblem& p, const std::vector<double>& x,
                  double tol) {
  for (int j = 0; j < p.n_vars(); ++j) {
    if (x[j] < p.lo[j] - tol || x[j] > p.hi[j] + tol) return false;
  }
  for (int i = 0; i < p.n_rows(); ++i) {
    double lhs = 0.0;
    for (int j = 0; j < p.n_vars(); ++j) lhs += p.a[i][j] * x[j];
    if (p.rel[i] == Rel::le && lhs > p.b[i] + tol) return false;
    if (p.rel[i] == Rel::ge && lhs < p.b[i] - tol) return false;
    if (p.rel[i] == Rel::eq && std::abs(lhs - p.b[i]) > tol) return false;
  }
  return true;
}

// Redistributes each hour's total into fill order and sets the gate
// binaries to match. The gates are consistent by construction, so only
// the comfort, ramp and cap rows can reject the result.
std::vector<double> repack_fill_order(const std::vector<double>& x,
                                      const MipInstance& inst,
                                      const PwlModel& pwl) {
  std::vector<double> out(inst.problem.n_vars(), 0.0);
  for (int t = 0; t < inst.n_hours; ++t) {
    double rem = 0.0;
    for (int n = 0; n < inst.n_blocks; ++n) rem += x[inst.delta_var(t, n)];
    for (int n = 0; n < inst.n_blocks; ++n) {
      const double v = std::clamp(rem, 0.0, pwl.block_caps[n]);
      out[inst.delta_var(t, n)] = v;
      rem -= v;
    }
    for (int k = 0; k + 1 < inst.n_blocks; ++k) {
      out[inst.fill_var(t, k)] =
          out[inst.delta_var(t, k)] >= pwl.block_caps[k] ? 1.0 : 0.0;
    }
  }
  return out;
}

std::string rel_token(Rel r) {
  if (r == Rel::le) return "<=";
  if (r == Rel::eq) return "=";
  return ">=";
}

Rel rel_from_token(const std::string& s) {
  if (s == "<=") return Rel::le;
  if (s == "=") return Rel::eq;
  if (s == ">=") return Rel::ge;
  throw std::runtime_error("instance text: unknown relation '" + s + "'");
}

std::string num_token(double v) {
  return v == kLpInf ? "inf" : format_double(v);
}

double num_from_token(const std::string& s) {
  if (s == "inf") return kLpInf;
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size()) {
    throw std::runtime_error("instance text: bad number '" + s + "'");
  }
  return v;
}

}  // namespace

PwlModel build_pwl(const PlantParams& pp, const PlantState& init,
                   const EnvDay& env, int n_blocks) {
  const PulseResponse pr = pulse_response(init, env, n_blocks, pp);
  PwlModel m;
  m.n_blocks = n_blocks;
  m.block_caps.assign(n_blocks, pr.block_width);
  m.t_free = pr.t_free;
  m.f.assign(n_blocks, std::vector<Hourly>(kHorizon, Hourly{}));
  for (int n = 0; n < n_blocks; ++n) {
    for (int tau = 0; tau < kHorizon; ++tau) {
      for (int t = 0; t < kHorizon; ++t) m.f[n][tau][t] = pr.at(t, tau, n);
    }
  }

  // Half-sine probe: superposition must track the real plant closely or
  // a benchmark built on this model proves nothing.
  Hourly probe{};
  for (int t = 0; t < kHorizon; ++t) {
    probe[t] =
        0.5 * pp.heat_pump.p_max * (1.0 - std::cos(2.0 * kPi * t / kHorizon));
  }
  const std::vector<double> x = fill_split(
      std::vector<double>(probe.begin(), probe.end()), m.block_caps);
  const Hourly t_hat = pwl_trajectory(m, x, kHorizon);
  const SimDay truth = simulate_day_direct_power(init, probe, env, pp);
  double worst = 0.0;
  for (int t = 0; t < kHorizon; ++t) {
    worst = std::max(worst, std::abs(t_hat[t] - truth.profile.t_indoor[t]));
  }
  if (worst >= 0.05) {
    throw std::runtime_error("piecewise power model reconstruction off by " +
                             format_double(worst) + " degC on the probe day");
  }
  return m;
}

MipInstance build_mip(const PwlModel& pwl, const Hourly& price,
                      const ScheduleBounds& bounds, int n_hours) {
  bounds.validate();
  if (n_hours < 1 || n_hours > kHorizon) {
    throw std::invalid_argument("hour count must be in [1, 24]");
  }
  const int ns = pwl.n_blocks;
  if (ns < 1 || static_cast<int>(pwl.block_caps.size()) != ns ||
      static_cast<int>(pwl.f.size()) != ns) {
    throw std::invalid_argument("piecewise model is malformed");
  }
  MipInstance inst;
  inst.n_hours = n_hours;
  inst.n_blocks = ns;
  const int nv = n_hours * ns + n_hours * (ns - 1);
  LpProblem& p = inst.problem;
  p.c.assign(nv, 0.0);
  p.lo.assign(nv, 0.0);
  p.hi.assign(nv, 0.0);
  for (int t = 0; t < n_hours; ++t) {
    for (int n = 0; n < ns; ++n) {
      p.c[inst.delta_var(t, n)] = price[t] / 100.0;
      p.hi[inst.delta_var(t, n)] = pwl.block_caps[n];
    }
    for (int k = 0; k + 1 < ns; ++k) {
      p.hi[inst.fill_var(t, k)] = 1.0;
      inst.binaries.push_back(inst.fill_var(t, k));
    }
  }

  // Fill order: gate k may switch on only once block k is full, and
  // block k+1 may load only once gate k is on.
  for (int t = 0; t < n_hours; ++t) {
    for (int k = 0; k + 1 < ns; ++k) {
      std::vector<double> on(nv, 0.0);
      on[inst.fill_var(t, k)] = pwl.block_caps[k];
      on[inst.delta_var(t, k)] = -1.0;
      p.add_row(std::move(on), Rel::le, 0.0);
      std::vector<double> next(nv, 0.0);
      next[inst.delta_var(t, k + 1)] = 1.0;
      next[inst.fill_var(t, k)] = -pwl.block_caps[k + 1];
      p.add_row(std::move(next), Rel::le, 0.0);
    }
  }

  // Comfort ceiling over the occupied hours that fall inside the
  // horizon, and a floor at every hour: below ti_min the thermostat
  // loses the authority to deliver the planned power, so such
  // trajectories could not be recovered as set-points. The floor clamps
  // to the free trajectory because cooling cannot raise it.
  for (int t = 0; t < n_hours; ++t) {
    std::vector<double> warm(nv, 0.0);
    for (int tau = 0; tau <= t; ++tau) {
      for (int n = 0; n < ns; ++n) {
        warm[inst.delta_var(tau, n)] = pwl.f[n][tau][t];
      }
    }
    std::vector<double> cool = warm;
    for (double& v : cool) v = -v;
    if (t >= bounds.t_s && t <= bounds.t_e) {
      p.add_row(std::move(warm), Rel::le, bounds.ti_max - pwl.t_free[t]);
    }
    const double floor_t = std::min(bounds.ti_min, pwl.t_free[t]);
    p.add_row(std::move(cool), Rel::le, pwl.t_free[t] - floor_t);
  }

  // Ramp limits on total hourly power, from zero before hour 0.
  for (int t = 0; t < n_hours; ++t) {
    std::vector<double> up(nv, 0.0);
    for (int n = 0; n < ns; ++n) up[inst.delta_var(t, n)] = 1.0;
    if (t > 0) {
      for (int n = 0; n < ns; ++n) up[inst.delta_var(t - 1, n)] = -1.0;
    }
    std::vector<double> down = up;
    for (double& v : down) v = -v;
    p.add_row(std::move(up), Rel::le, bounds.ramp_hi);
    p.add_row(std::move(down), Rel::le, -bounds.ramp_lo);
  }

  // Hourly power rails, only where the block caps do not already imply
  // them.
  double caps_sum = 0.0;
  for (int n = 0; n < ns; ++n) caps_sum += pwl.block_caps[n];
  for (int t = 0; t < n_hours; ++t) {
    if (bounds.p_max < caps_sum - 1e-9) {
      std::vector<double> cap(nv, 0.0);
      for (int n = 0; n < ns; ++n) cap[inst.delta_var(t, n)] = 1.0;
      p.add_row(std::move(cap), Rel::le, bounds.p_max);
    }
    if (bounds.p_min > 0.0) {
      std::vector<double> floor_row(nv, 0.0);
      for (int n = 0; n < ns; ++n) floor_row[inst.delta_var(t, n)] = 1.0;
      p.add_row(std::move(floor_row), Rel::ge, bounds.p_min);
    }
  }
  p.validate();
  return inst;
}

Hourly pwl_trajectory(const PwlModel& pwl, const std::vector<double>& x,
                      int n_hours) {
  const int ns = pwl.n_blocks;
  if (static_cast<int>(x.size()) < n_hours * ns) {
    throw std::invalid_argument("solution vector too short for trajectory");
  }
  Hourly out = pwl.t_free;
  for (int t = 0; t < kHorizon; ++t) {
    const int tau_last = std::min(t, n_hours - 1);
    for (int tau = 0; tau <= tau_last; ++tau) {
      for (int n = 0; n < ns; ++n) {
        out[t] += pwl.f[n][tau][t] * x[tau * ns + n];
      }
    }
  }
  return out;
}

std::string dump_instance(const MipInstance& inst) {
  const LpProblem& p = inst.problem;
  std::ostringstream os;
  os << "hvacsched-mip 1\n";
  os << "dims " << inst.n_hours << ' ' << inst.n_blocks << '\n';
  os << "obj";
  for (int j = 0; j < p.n_vars(); ++j) os << ' ' << num_token(p.c[j]);
  os << "\nlo";
  for (int j = 0; j < p.n_vars(); ++j) os << ' ' << num_token(p.lo[j]);
  os << "\nhi";
  for (int j = 0; j < p.n_vars(); ++j) os << ' ' << num_token(p.hi[j]);
  os << "\nrows " << p.n_rows() << '\n';
  for (int i = 0; i < p.n_rows(); ++i) {
    os << rel_token(p.rel[i]) << ' ' << num_token(p.b[i]);
    for (int j = 0; j < p.n_vars(); ++j) os << ' ' << num_token(p.a[i][j]);
    os << '\n';
  }
  os << "bin " << static_cast<int>(inst.binaries.size());
  for (int idx : inst.binaries) os << ' ' << idx;
  os << '\n';
  return os.str();
}

MipInstance parse_instance(const std::string& text) {
  std::istringstream is(text);
  auto word = [&is]() {
    std::string w;
    if (!(is >> w)) throw std::runtime_error("instance text ended early");
    return w;
  };
  auto expect = [&word](const std::string& want) {
    const std::string got = word();
    if (got != want) {
      throw std::runtime_error("instance text: expected '" + want +
                               "', got '" + got + "'");
    }
  };
  expect("hvacsched-mip");
  expect("1");
  expect("dims");
  MipInstance inst;
  inst.n_hours = static_cast<int>(num_from_token(word()));
  inst.n_blocks = static_cast<int>(num_from_token(word()));
  if (inst.n_hours < 1 || inst.n_hours > kHorizon || inst.n_blocks < 1) {
    throw std::runtime_error("instance text: bad dimensions");
  }
  const int nv =
      inst.n_hours * inst.n_blocks + inst.n_hours * (inst.n_blocks - 1);
  LpProblem& p = inst.problem;
  expect("obj");
  p.c.resize(nv);
  for (int j = 0; j < nv; ++j) p.c[j] = num_from_token(word());
  expect("lo");
  p.lo.resize(nv);
  for (int j = 0; j < nv; ++j) p.lo[j] = num_from_token(word());
  expect("hi");
  p.hi.resize(nv);
  for (int j = 0; j < nv; ++j) p.hi[j] = num_from_token(word());
  expect("rows");
  const int m = static_cast<int>(num_from_token(word()));
  if (m < 0) throw std::runtime_error("instance text: negative row count");
  for (int i = 0; i < m; ++i) {
    const Rel r = rel_from_token(word());
    const double rhs = num_from_token(word());
    std::vector<double> coef(nv);
    for (int j = 0; j < nv; ++j) coef[j] = num_from_token(word());
    p.add_row(std::move(coef), r, rhs);
  }
  expect("bin");
  const int nb = static_cast<int>(num_from_token(word()));
  for (int k = 0; k < nb; ++k) {
    const int idx = static_cast<int>(num_from_token(word()));
    if (idx < 0 || idx >= nv) {
      throw std::runtime_error("instance text: binary index out of range");
    }
    inst.binaries.push_back(idx);
  }
  p.validate();
  return inst;
}

RecoveredSchedule recover_setpoints(const Hourly& p_star,
                                    const PlantParams& pp,
                                    const PlantState& init, const EnvDay& env,
                                    const ScheduleBounds& bounds) {
  pp.validate();
  bounds.validate();
  PlantState st = init;
  st.integral_err = 0.0;  // day-start reset, as in simulate_day
  st.p_prev = 0.0;
  const double dt = 1.0 / pp.substeps_per_hour;
  RecoveredSchedule out;
  for (int t = 0; t < kHorizon; ++t) {
    // Mean closed-loop power over the hour at set-point u.
    auto probe = [&](double u, PlantState* end) {
      PlantState s = st;
      double p_sum = 0.0;
      for (int i = 0; i < pp.substeps_per_hour; ++i) {
        const double err = u - s.t_indoor;
        const double pow_kw = pi_step(err, s, pp.thermostat, dt,
                                      pp.heat_pump.p_min, pp.heat_pump.p_max);
        const double q = heat_pump_output(pow_kw, env[t].t_out, env[t].t_evap,
                                          pp.heat_pump);
        s = envelope_substep(s, q, env[t], pp.envelope, dt);
        p_sum += pow_kw;
      }
      if (end) *end = s;
      return p_sum / pp.substeps_per_hour;
    };
    const double target = p_star[t];
    double lo = bounds.u_min;  // cold end delivers the most power
    double hi = bounds.u_max;
    const double p_cold = probe(lo, nullptr);
    const double p_warm = probe(hi, nullptr);
    double u = 0.0;
    if (target >= p_cold) {
      u = lo;
    } else if (target <= p_warm) {
      u = hi;
    } else {
      // Power is non-increasing in u but can jump at the dead-band, so
      // bisect the bracket down and keep the closer side.
      for (int it = 0; it < 48; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (probe(mid, nullptr) >= target) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      u = std::abs(probe(lo, nullptr) - target) <=
                  std::abs(probe(hi, nullptr) - target)
              ? lo
              : hi;
    }
    PlantState next = st;
    const double realized = probe(u, &next);
    out.setpoints[t] = u;
    out.residual[t] = std::abs(realized - target);
    st = next;
  }
  return out;
}

IdealDay solve_ideal_day(const PlantParams& pp, const PlantState& init,
                         const EnvDay& env, const Hourly& price,
                         const ScheduleBounds& bounds, int n_blocks) {
  const PwlModel pwl = build_pwl(pp, init, env, n_blocks);
  const MipInstance inst = build_mip(pwl, price, bounds);
  const LpSolution relax = solve_lp(inst.problem);
  if (relax.status == LpStatus::infeasible) {
    throw std::runtime_error(
        "benchmark day program is infeasible; widen the comfort band or "
        "raise the power limit");
  }
  if (relax.status == LpStatus::unbounded) {
    throw std::runtime_error("benchmark day program is unbounded");
  }

  IdealDay day;
  std::vector<double> x = repack_fill_order(relax.x, inst, pwl);
  // A feasible integral point scoring the relaxation bound is optimal,
  // no search needed.
  if (point_within(inst.problem, x, 1e-6) &&
      std::abs(dot_objective(inst.problem, x) - relax.objective) <= 1e-7) {
    day.objective = dot_objective(inst.problem, x);
    day.proven = true;
    day.nodes = 1;
  } else {
    BnbOptions opt;
    opt.binaries = inst.binaries;
    opt.max_nodes = 20000;
    const BnbResult r = solve_bnb(inst.problem, opt);
    if (r.status != LpStatus::optimal) {
      throw std::runtime_error(
          "benchmark day search found no integral schedule");
    }
    x = r.x;
    day.objective = r.objective;
    day.proven = r.proven;
    day.nodes = r.nodes;
  }
  for (int t = 0; t < kHorizon; ++t) {
    double sum = 0.0;
    for (int n = 0; n < n_blocks; ++n) sum += x[inst.delta_var(t, n)];
    day.power[t] = std::clamp(sum, pp.heat_pump.p_min, pp.heat_pump.p_max);
  }
  day.t_model = pwl_trajectory(pwl, x, kHorizon);
  const RecoveredSchedule rec =
      recover_setpoints(day.power, pp, init, env, bounds);
  day.setpoints = rec.setpoints;
  day.residual = rec.residual;
  return day;
}

}  // namespace hvacsched
