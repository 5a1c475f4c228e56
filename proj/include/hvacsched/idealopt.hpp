#pragma once

#include <string>
#include <vector>

#include "hvacsched/lp.hpp"
#include "hvacsched/plant.hpp"
#include "hvacsched/scheduler.hpp"

// Benchmark day optimizer built on the true plant physics: a piecewise
// linear map from hourly cooling power to indoor temperature, a mixed
// integer program over fill-ordered power blocks, and a thermostat
// inversion that turns the optimal power profile back into set-points.

namespace hvacsched {

// t_indoor[t] = t_free[t] + sum over tau <= t and n of
// f[n][tau][t] * delta[n at hour tau].
struct PwlModel {
  int n_blocks = 0;
  std::vector<double> block_caps;      // kW, sums to the power limit
  Hourly t_free{};                     // degC trajectory with no cooling
  std::vector<std::vector<Hourly>> f;  // [block][inject hour][read hour]
};

// Identifies the response tensor from the plant and validates that the
// superposition reconstructs a probe schedule within 0.05 degC.
PwlModel build_pwl(const PlantParams& pp, const PlantState& init,
                   const EnvDay& env, int n_blocks);

// Linear program over block loads delta(t, n) plus relaxed fill-order
// binaries; minimizes energy cost in dollars subject to the comfort
// ceiling over occupied hours, an every-hour floor at the comfort
// minimum (clamped to the free trajectory) so plans stay recoverable
// as set-points, per-hour ramp limits (hour 0 ramps from zero), block
// caps, and the fill-order coupling.
struct MipInstance {
  LpProblem problem;
  std::vector<int> binaries;
  int n_hours = 0;
  int n_blocks = 0;

  int delta_var(int t, int n) const { return t * n_blocks + n; }
  // Binary k gates block k+1: it is 1 exactly when block k is full.
  int fill_var(int t, int k) const {
    return n_hours * n_blocks + t * (n_blocks - 1) + k;
  }
};

MipInstance build_mip(const PwlModel& pwl, const Hourly& price,
                      const ScheduleBounds& bounds, int n_hours = kHorizon);

// Temperature trajectory implied by the first n_hours * n_blocks block
// loads of a solution vector, laid out as in MipInstance.
Hourly pwl_trajectory(const PwlModel& pwl, const std::vector<double>& x,
                      int n_hours);

// Plain text round trip for debugging.
std::string dump_instance(const MipInstance& inst);
MipInstance parse_instance(const std::string& text);

struct RecoveredSchedule {
  Hourly setpoints{};
  Hourly residual{};  // kW gap between requested and realizable power
};

// Per hour, bisects the thermostat set-point so the closed-loop hourly
// power matches p_star, carrying the plant state forward through the
// chosen set-points. Unreachable targets take the nearest achievable
// side and report the gap.
RecoveredSchedule recover_setpoints(const Hourly& p_star,
                                    const PlantParams& pp,
                                    const PlantState& init, const EnvDay& env,
                                    const ScheduleBounds& bounds);

struct IdealDay {
  Hourly power{};      // optimal hourly kW
  Hourly setpoints{};  // thermostat program reproducing it
  Hourly residual{};   // recovery gap per hour, kW
  Hourly t_model{};    // indoor trajectory the model expects
  double objective = 0.0;  // model energy cost, dollars
  bool proven = false;
  int nodes = 0;
};

IdealDay solve_ideal_day(const PlantParams& pp, const PlantState& init,
                         const EnvDay& env, const Hourly& price,
                         const ScheduleBounds& bounds, int n_blocks);

}  // namespace hvacsched
