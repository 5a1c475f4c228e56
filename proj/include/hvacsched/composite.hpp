#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "hvacsched/config.hpp"
#include "hvacsched/datastore.hpp"
#include "hvacsched/netcore.hpp"

// Interconnected predictor: a thermostat network (set-point -> power), a
// heat-pump network (power -> thermal output) and an envelope network
// (thermal output + environment -> indoor temperature), wired through
// three feedback loops. Open-loop evaluation feeds actual lagged data;
// closed-loop rollout recycles its own clamped predictions and carries
// exact reverse-mode gradients back to the set-point schedule. Reduced
// two- and one-network variants cover the same day interface.

namespace hvacsched {

enum class Topology { three_nets, two_nets, one_net };

const char* topology_name(Topology t);
Topology topology_from_name(std::string_view name);

// One per-step input: the value of `signal` at step time minus steps_back.
struct FeatureSpec {
  Signal signal;
  int steps_back;
};

struct FeatureSchema {
  std::vector<FeatureSpec> features;
  std::vector<Signal> outputs;

  int n_features() const { return static_cast<int>(features.size()); }
  int n_outputs() const { return static_cast<int>(outputs.size()); }
};

FeatureSchema schema_thermostat();    // (t_set, p[-1], t_i[-1]) -> p
FeatureSchema schema_heat_pump();     // (p, t_out, t_evap) -> q
FeatureSchema schema_envelope();      // (q, E, t_i[-1]) -> t_i
FeatureSchema schema_merged_plant();  // (p, E, t_i[-1]) -> t_i
FeatureSchema schema_monolithic();    // (t_set, E, t_i[-1]) -> (p, t_i)

struct SubModel {
  FeatureSchema schema;
  NetworkModel net;
};

struct CompositeModel {
  Topology topology = Topology::three_nets;
  int lag_steps = 24;
  std::vector<SubModel> nets;
};

struct SizeSpec {
  int n_layers = 1;
  int n_hidden = 8;
};

// sizes[k] applies to sub-network k of the three-network stack; reduced
// topologies use sizes[0] for the thermostat network and sizes[2] for
// the merged plant / monolithic network.
CompositeModel make_composite(Topology t, int lag_steps,
                              const std::array<SizeSpec, 3>& sizes,
                              std::uint64_t seed);
CompositeModel composite_from_config(Topology t, const Config& cfg,
                                     std::uint64_t seed);

// Last lag_steps values of every signal before an absolute start hour.
struct HistoryBuffer {
  int lag_steps = 0;
  std::array<std::vector<double>, 9> series;

  // Value steps_back hours before the start (steps_back in [1, lag_steps]).
  double before(Signal s, int steps_back) const;
};

HistoryBuffer history_ending_before(const DataStore& store, int abs_hour,
                                    int lag_steps);

// Supervised samples for one sub-network from actual archived rows.
std::vector<Sample> make_samples(const DataStore& store,
                                 const FeatureSchema& schema, int lag_steps,
                                 const std::vector<int>& rows);

struct CompositeTrainLog {
  std::vector<TrainLog> per_net;
};

// Trains every sub-network on its schema over the store's current splits.
// fit_normalizers refits input/output ranges from the training split
// before training; otherwise existing ranges are expanded only.
CompositeTrainLog train_subnets(CompositeModel& model, const DataStore& store,
                                const TrainConfig& cfg, bool fit_normalizers);

// Construct + train the requested topology in one step.
CompositeModel build_ablation(const DataStore& store, Topology t,
                              const Config& cfg, const TrainConfig& tcfg,
                              std::uint64_t seed);

struct RolloutLimits {
  double p_min = 0.0;
  double p_max = 50.0;
  double ti_lo = 0.0;   // divergence guard, not a clamp
  double ti_hi = 50.0;
};

struct Rollout {
  Hourly p{};
  Hourly q{};         // zero for topologies without a heat-pump network
  Hourly t_indoor{};
};

// Every network predicts every hour from actual lagged signals.
Rollout rollout_open(const CompositeModel& model, const DayProfile& day,
                     const HistoryBuffer& hist);

struct RolloutTrace {
  Rollout pred;   // p is clamped to the power limits before reuse
  Hourly p_raw{};
  std::vector<std::array<std::vector<double>, 3>> windows;  // [hour][net]
};

// Hour by hour, each network consumes the clamped predictions of its
// upstream peers and of earlier hours; exogenous columns come from `exo`
// (t_out/t_evap/t_adj/q_int; its other fields are ignored). Predicted
// indoor temperature outside [ti_lo, ti_hi] aborts with diagnostics.
RolloutTrace rollout_closed_traced(const CompositeModel& model,
                                   const Hourly& setpoints,
                                   const DayProfile& exo,
                                   const HistoryBuffer& hist,
                                   const RolloutLimits& limits);
Rollout rollout_closed(const CompositeModel& model, const Hourly& setpoints,
                       const DayProfile& exo, const HistoryBuffer& hist,
                       const RolloutLimits& limits);

// d(sum_t up_p[t] P[t] + up_q[t] Q[t] + up_ti[t] T_i[t]) / d(setpoints),
// reverse mode through the full unrolled day; clamp subgradients are
// zero where the power clamp saturated.
Hourly rollout_vjp(const CompositeModel& model, const RolloutTrace& trace,
                   const Hourly& up_p, const Hourly& up_q,
                   const Hourly& up_ti);

struct ScheduleJacobians {
  // Row-major [t][tau]: sensitivity of hour-t prediction to the hour-tau
  // set-point. Strictly zero above the diagonal.
  std::array<double, kHorizon * kHorizon> dp{};
  std::array<double, kHorizon * kHorizon> dti{};

  double p_at(int t, int tau) const { return dp[t * kHorizon + tau]; }
  double ti_at(int t, int tau) const { return dti[t * kHorizon + tau]; }
};

ScheduleJacobians rollout_grad(const CompositeModel& model,
                               const RolloutTrace& trace);

void save_composite_file(const std::string& path, const CompositeModel& m);
CompositeModel load_composite_file(const std::string& path);

}  // namespace hvacsched
