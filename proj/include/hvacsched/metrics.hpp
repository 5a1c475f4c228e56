#pragma once

#include <array>
#include <vector>

#include "hvacsched/config.hpp"
#include "hvacsched/plant.hpp"

// Evaluation quantities: daily energy cost, comfort-band violation over
// occupied hours, cost reduction against the rule baseline, and nRMSE.

namespace hvacsched {

struct HourBand {
  double lo = 22.0;
  double hi = 24.0;
  bool active = false;
};

using ComfortBand = std::array<HourBand, kHorizon>;

// Band [t_i_min, t_i_max] active for hours t_s..t_e inclusive.
ComfortBand comfort_band_from_config(const Config& cfg);

// Sum of price (cents/kWh) times power (kW) over the day, in dollars.
double energy_cost(const Hourly& price, const Hourly& power);

// Total degC-hours outside the active band.
double comfort_violation(const Hourly& t_indoor, const ComfortBand& band);

// 100 * (c_rule - c_case) / c_rule; requires a positive baseline cost.
double cost_reduction_rate(double c_case, double c_rule);

// RMSE over the pair, normalized by the actual range (or by the actual
// mean magnitude with by_mean). Zero-range actuals normalize by
// max(|actual|, 1).
double nrmse(const std::vector<double>& actual,
             const std::vector<double>& estimate, bool by_mean = false);

}  // namespace hvacsched
