#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "hvacsched/composite.hpp"
#include "hvacsched/config.hpp"
#include "hvacsched/plant.hpp"

// Day-ahead set-point search: a penalized energy-cost objective over the
// closed-loop predictor, minimized by plain gradient descent with a
// two-stage learning rate, best-iterate retention and a final projection
// onto the set-point bounds.

namespace hvacsched {

struct ScheduleBounds {
  double u_min = 15.0;  // degC set-point rails
  double u_max = 35.0;
  double ti_min = 22.0;  // degC comfort band over occupied hours
  double ti_max = 24.0;
  int t_s = 7;  // occupied hours t_s..t_e inclusive
  int t_e = 19;
  double p_min = 0.0;  // kW
  double p_max = 50.0;
  double ramp_lo = -40.0;  // kW/h on P^t - P^{t-1}, with P before hour 0 = 0
  double ramp_hi = 30.0;
  double q_min = -1e300;  // thermal output unbounded unless configured
  double q_max = 1e300;
  void validate() const;
};

// Eq.-style quadratic cost squares y = C*P even when C is negative;
// signed_cost uses y*|y| so negative-price consumption is rewarded.
enum class ObjectiveForm { quadratic, signed_cost };

const char* objective_form_name(ObjectiveForm f);
ObjectiveForm objective_form_from_name(std::string_view name);

struct ScheduleProblem {
  Hourly price{};  // cents/kWh, may be negative
  EnvDay env{};
  ScheduleBounds bounds;
  double lambda_y = 2.0;
  double lambda_k = 0.5;
  double lambda_h = 7.5;
  int epochs = 1000;
  double lr_hi = 1e-3;  // drops to lr_lo after 2/3 of the epochs
  double lr_lo = 1e-4;
  ObjectiveForm form = ObjectiveForm::quadratic;
  RolloutLimits limits;
};

// Weights, bounds, epochs and learning rates from config keys; price and
// environment stay for the caller.
ScheduleProblem problem_from_config(const Config& cfg);

// Day profile carrying the forecast columns a closed-loop rollout reads.
DayProfile forecast_profile(const EnvDay& env, const Hourly& price);

Hourly constant_schedule(double value);

// Hinge distance of each set-point outside [u_min, u_max]; always >= 0.
Hourly input_penalty(const Hourly& u, const ScheduleBounds& b);

// Hinge distances of the rolled-out states outside their bounds, one
// series per component. Comfort is zero outside occupied hours; the ramp
// uses P^t - P^{t-1} with zero power before hour 0.
struct StatePenalty {
  Hourly t_indoor{};
  Hourly heat{};
  Hourly power{};
  Hourly ramp{};
};
StatePenalty state_penalty(const Rollout& r, const ScheduleBounds& b);

struct PenaltyBreakdown {
  double cost = 0.0;   // lambda_y term
  double input = 0.0;  // lambda_k term
  double state = 0.0;  // lambda_h term
  double total() const { return cost + input + state; }
};

// J for a rollout already in hand; y^t = C^t * P^t / 100 (dollars).
double objective_of(const Rollout& r, const Hourly& u,
                    const ScheduleProblem& prob,
                    PenaltyBreakdown* breakdown = nullptr);

double objective(const Hourly& u, const ScheduleProblem& prob,
                 const CompositeModel& model, const HistoryBuffer& hist,
                 PenaltyBreakdown* breakdown = nullptr);

// Exact reverse-mode dJ/du through the closed-loop rollout, including
// the hinge subgradients (zero inside bounds).
Hourly gradient(const Hourly& u, const ScheduleProblem& prob,
                const CompositeModel& model, const HistoryBuffer& hist,
                double* j_out = nullptr);

struct ScheduleResult {
  Hourly setpoints{};  // within [u_min, u_max]
  Rollout predicted;   // closed-loop rollout of `setpoints`
  std::vector<double> j_history;  // objective per GD epoch, then final
  double j_final = 0.0;
  int best_epoch = 0;
  PenaltyBreakdown breakdown;
  double cost_pred = 0.0;  // dollars, sum price * predicted power / 100
};

// Plain GD from u_init, best-J iterate retained, final projection onto
// the set-point bounds. Guarantees J(result) <= J(u_init) whenever
// u_init is itself within bounds. Throws on a non-finite objective.
ScheduleResult optimize(const ScheduleProblem& prob,
                        const CompositeModel& model,
                        const HistoryBuffer& hist, const Hourly& u_init);

// optimize() from u_init plus `restarts - 1` seeded perturbations of it;
// the lowest final objective wins.
ScheduleResult optimize_restarts(const ScheduleProblem& prob,
                                 const CompositeModel& model,
                                 const HistoryBuffer& hist,
                                 const Hourly& u_init, int restarts,
                                 std::uint64_t seed);

}  // namespace hvacsched
