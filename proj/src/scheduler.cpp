#include "hvacsched/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "hvacsched/rng.hpp"

namespace hvacsched {
namespace {

// Signed excess outside [lo, hi]: positive above, negative below.
double excess(double x, double lo, double hi) {
  if (x > hi) return x - hi;
  if (x < lo) return x - lo;
  return 0.0;
}

Hourly ramp_of(const Hourly& p) {
  Hourly dp{};
  dp[0] = p[0];
  for (int t = 1; t < kHorizon; ++t) dp[t] = p[t] - p[t - 1];
  return dp;
}

struct Terms {
  Hourly y{};        // C*P/100, dollars
  Hourly k{};        // signed input excess
  Hourly s_ti{};     // signed state excesses
  Hourly s_q{};
  Hourly s_p{};
  Hourly s_ramp{};
};

Terms signed_terms(const Rollout& r, const Hourly& u,
                   const ScheduleProblem& prob) {
  const ScheduleBounds& b = prob.bounds;
  Terms tm;
  const Hourly dp = ramp_of(r.p);
  for (int t = 0; t < kHorizon; ++t) {
    tm.y[t] = prob.price[t] * r.p[t] / 100.0;
    tm.k[t] = excess(u[t], b.u_min, b.u_max);
    const bool occupied = t >= b.t_s && t <= b.t_e;
    tm.s_ti[t] = occupied ? excess(r.t_indoor[t], b.ti_min, b.ti_max) : 0.0;
    tm.s_q[t] = excess(r.q[t], b.q_min, b.q_max);
    tm.s_p[t] = excess(r.p[t], b.p_min, b.p_max);
    tm.s_ramp[t] = excess(dp[t], b.ramp_lo, b.ramp_hi);
  }
  return tm;
}

double breakdown_j(const Terms& tm, const ScheduleProblem& prob,
                   PenaltyBreakdown* breakdown) {
  PenaltyBreakdown bd;
  for (int t = 0; t < kHorizon; ++t) {
    const double y2 = prob.form == ObjectiveForm::quadratic
                          ? tm.y[t] * tm.y[t]
                          : tm.y[t] * std::abs(tm.y[t]);
    bd.cost += prob.lambda_y * y2;
    bd.input += prob.lambda_k * tm.k[t] * tm.k[t];
    bd.state += prob.lambda_h *
                (tm.s_ti[t] * tm.s_ti[t] + tm.s_q[t] * tm.s_q[t] +
                 tm.s_p[t] * tm.s_p[t] + tm.s_ramp[t] * tm.s_ramp[t]);
  }
  if (breakdown != nullptr) *breakdown = bd;
  return bd.total();
}

// dJ/du for the evaluated trace, reusing its terms.
Hourly gradient_of(const Terms& tm, const ScheduleProblem& prob,
                   const CompositeModel& model, const RolloutTrace& trace) {
  Hourly up_p{};
  Hourly up_q{};
  Hourly up_ti{};
  for (int t = 0; t < kHorizon; ++t) {
    const double dy = prob.form == ObjectiveForm::quadratic
                          ? 2.0 * tm.y[t]
                          : 2.0 * std::abs(tm.y[t]);
    up_p[t] = prob.lambda_y * dy * prob.price[t] / 100.0 +
              2.0 * prob.lambda_h * tm.s_p[t] +
              2.0 * prob.lambda_h * tm.s_ramp[t];
    if (t + 1 < kHorizon) {
      up_p[t] -= 2.0 * prob.lambda_h * tm.s_ramp[t + 1];
    }
    up_q[t] = 2.0 * prob.lambda_h * tm.s_q[t];
    up_ti[t] = 2.0 * prob.lambda_h * tm.s_ti[t];
  }
  Hourly g = rollout_vjp(model, trace, up_p, up_q, up_ti);
  for (int t = 0; t < kHorizon; ++t) {
    g[t] += 2.0 * prob.lambda_k * tm.k[t];
  }
  return g;
}

Hourly project(const Hourly& u, const ScheduleBounds& b) {
  Hourly out = u;
  for (double& v : out) v = std::clamp(v, b.u_min, b.u_max);
  return out;
}

}  // namespace

void ScheduleBounds::validate() const {
  if (!(u_min < u_max) || !(ti_min < ti_max) || !(p_min < p_max) ||
      !(ramp_lo < ramp_hi) || !(q_min < q_max)) {
    throw std::runtime_error("schedule bounds need min < max in every pair");
  }
  if (t_s < 0 || t_e < t_s || t_e >= kHorizon) {
    throw std::runtime_error(
        "occupied hours must satisfy 0 <= t_s <= t_e < 24");
  }
}

const char* objective_form_name(ObjectiveForm f) {
  return f == ObjectiveForm::quadratic ? "quadratic" : "signed";
}

ObjectiveForm objective_form_from_name(std::string_view name) {
  if (name == "quadratic") return ObjectiveForm::quadratic;
  if (name == "signed") return ObjectiveForm::signed_cost;
  throw std::runtime_error("unknown objective form '" + std::string(name) +
                           "' (expected quadratic or signed)");
}

ScheduleProblem problem_from_config(const Config& cfg) {
  ScheduleProblem p;
  p.bounds.u_min = cfg.num("t_set_min");
  p.bounds.u_max = cfg.num("t_set_max");
  p.bounds.ti_min = cfg.num("t_i_min");
  p.bounds.ti_max = cfg.num("t_i_max");
  p.bounds.t_s = cfg.integer("t_s");
  p.bounds.t_e = cfg.integer("t_e");
  p.bounds.p_min = cfg.num("p_min");
  p.bounds.p_max = cfg.num("p_max");
  p.bounds.ramp_lo = cfg.num("r_l");
  p.bounds.ramp_hi = cfg.num("r_h");
  p.bounds.validate();
  p.lambda_y = cfg.num("lambda_y");
  p.lambda_k = cfg.num("lambda_k");
  p.lambda_h = cfg.num("lambda_h");
  if (p.lambda_y < 0 || p.lambda_k < 0 || p.lambda_h < 0) {
    throw std::runtime_error("penalty weights must be nonnegative");
  }
  p.epochs = cfg.integer("n_eo");
  p.lr_hi = cfg.num("r_o_init");
  p.lr_lo = cfg.num("r_o_final");
  p.form = objective_form_from_name(cfg.str("objective_form"));
  p.limits.p_min = p.bounds.p_min;
  p.limits.p_max = p.bounds.p_max;
  return p;
}

DayProfile forecast_profile(const EnvDay& env, const Hourly& price) {
  DayProfile d;
  d.price = price;
  for (int t = 0; t < kHorizon; ++t) {
    d.t_out[t] = env[t].t_out;
    d.t_evap[t] = env[t].t_evap;
    d.t_adj[t] = env[t].t_adj;
    d.q_int[t] = env[t].q_internal;
  }
  return d;
}

Hourly constant_schedule(double value) {
  Hourly u;
  u.fill(value);
  return u;
}

Hourly input_penalty(const Hourly& u, const ScheduleBounds& b) {
  Hourly k{};
  for (int t = 0; t < kHorizon; ++t) {
    k[t] = std::abs(excess(u[t], b.u_min, b.u_max));
  }
  return k;
}

StatePenalty state_penalty(const Rollout& r, const ScheduleBounds& b) {
  StatePenalty h;
  const Hourly dp = ramp_of(r.p);
  for (int t = 0; t < kHorizon; ++t) {
    const bool occupied = t >= b.t_s && t <= b.t_e;
    h.t_indoor[t] =
        occupied ? std::abs(excess(r.t_indoor[t], b.ti_min, b.ti_max)) : 0.0;
    h.heat[t] = std::abs(excess(r.q[t], b.q_min, b.q_max));
    h.power[t] = std::abs(excess(r.p[t], b.p_min, b.p_max));
    h.ramp[t] = std::abs(excess(dp[t], b.ramp_lo, b.ramp_hi));
  }
  return h;
}

double objective_of(const Rollout& r, const Hourly& u,
                    const ScheduleProblem& prob,
                    PenaltyBreakdown* breakdown) {
  return breakdown_j(signed_terms(r, u, prob), prob, breakdown);
}

double objective(const Hourly& u, const ScheduleProblem& prob,
                 const CompositeModel& model, const HistoryBuffer& hist,
                 PenaltyBreakdown* breakdown) {
  const DayProfile exo = forecast_profile(prob.env, prob.price);
  const Rollout r = rollout_closed(model, u, exo, hist, prob.limits);
  return objective_of(r, u, prob, breakdown);
}

Hourly gradient(const Hourly& u, const ScheduleProblem& prob,
                const CompositeModel& model, const HistoryBuffer& hist,
                double* j_out) {
  const DayProfile exo = forecast_profile(prob.env, prob.price);
  const RolloutTrace trace =
      rollout_closed_traced(model, u, exo, hist, prob.limits);
  const Terms tm = signed_terms(trace.pred, u, prob);
  if (j_out != nullptr) *j_out = breakdown_j(tm, prob, nullptr);
  return gradient_of(tm, prob, model, trace);
}

ScheduleResult optimize(const ScheduleProblem& prob,
                        const CompositeModel& model,
                        const HistoryBuffer& hist, const Hourly& u_init) {
  prob.bounds.validate();
  const DayProfile exo = forecast_profile(prob.env, prob.price);
  const int drop_at =
      static_cast<int>(std::floor(prob.epochs * (2.0 / 3.0)));

  ScheduleResult res;
  Hourly u = u_init;
  Hourly u_best = u_init;
  double j_best = 0.0;
  for (int epoch = 0; epoch <= prob.epochs; ++epoch) {
    const RolloutTrace trace =
        rollout_closed_traced(model, u, exo, hist, prob.limits);
    const Terms tm = signed_terms(trace.pred, u, prob);
    const double j = breakdown_j(tm, prob, nullptr);
    if (!std::isfinite(j)) {
      throw std::runtime_error(
          "schedule search diverged: non-finite objective at epoch " +
          std::to_string(epoch));
    }
    res.j_history.push_back(j);
    if (epoch == 0 || j < j_best) {
      j_best = j;
      u_best = u;
      res.best_epoch = epoch;
    }
    if (epoch == prob.epochs) break;
    const Hourly g = gradient_of(tm, prob, model, trace);
    const double lr = epoch >= drop_at ? prob.lr_lo : prob.lr_hi;
    for (int t = 0; t < kHorizon; ++t) u[t] -= lr * g[t];
  }

  Hourly u_final = project(u_best, prob.bounds);
  RolloutTrace trace =
      rollout_closed_traced(model, u_final, exo, hist, prob.limits);
  double j_final = objective_of(trace.pred, u_final, prob, &res.breakdown);
  if (j_final > res.j_history.front()) {
    // Projection moved the best iterate uphill; fall back to the
    // projected start, which for an in-bounds u_init restores J(u_init).
    const Hourly u_start = project(u_init, prob.bounds);
    PenaltyBreakdown bd;
    RolloutTrace tr2 =
        rollout_closed_traced(model, u_start, exo, hist, prob.limits);
    const double j2 = objective_of(tr2.pred, u_start, prob, &bd);
    if (j2 < j_final) {
      u_final = u_start;
      trace = std::move(tr2);
      j_final = j2;
      res.breakdown = bd;
    }
  }
  res.setpoints = u_final;
  res.predicted = trace.pred;
  res.j_final = j_final;
  res.j_history.push_back(j_final);
  res.cost_pred = 0.0;
  for (int t = 0; t < kHorizon; ++t) {
    res.cost_pred += prob.price[t] * trace.pred.p[t] / 100.0;
  }
  return res;
}

ScheduleResult optimize_restarts(const ScheduleProblem& prob,
                                 const CompositeModel& model,
                                 const HistoryBuffer& hist,
                                 const Hourly& u_init, int restarts,
                                 std::uint64_t seed) {
  if (restarts < 1) {
    throw std::runtime_error("restart count must be at least 1");
  }
  ScheduleResult best;
  for (int r = 0; r < restarts; ++r) {
    Hourly u0 = u_init;
    if (r > 0) {
      Rng rng(derive_seed(seed, "restart" + std::to_string(r)));
      for (int t = 0; t < kHorizon; ++t) {
        u0[t] = std::clamp(u0[t] + rng.uniform(-1.0, 1.0), prob.bounds.u_min,
                           prob.bounds.u_max);
      }
    }
    ScheduleResult res = optimize(prob, model, hist, u0);
    if (r == 0 || res.j_final < best.j_final) best = std::move(res);
  }
  return best;
}

}  // namespace hvacsched
