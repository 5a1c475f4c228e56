#pragma once

#include <cstdint>

#include "hvacsched/datastore.hpp"
#include "hvacsched/plant.hpp"

// Seeded synthetic inputs: summer weather, occupancy-driven internal
// load, retail price profiles (flat, time-of-use, or a volatile shape
// with an afternoon spike and occasional negative early-morning hours),
// and the rule-based initial archive the networks bootstrap from.

namespace hvacsched {

enum class PriceKind { flat, time_of_use, volatile_spike };

struct GenConfig {
  std::uint64_t seed = 1;
  int n_days = 200;

  double weather_base = 27.0;    // degC sinusoid midline, peak at 15:00
  double weather_amp = 6.5;      // degC
  double weather_offset = 1.5;   // degC max day-level shift
  double weather_noise = 0.5;    // degC max hourly jitter
  double t_evap_base = 12.0;     // degC
  double t_adj_base = 25.0;      // degC

  double load_base_kw = 2.0;
  double load_peak_kw = 8.0;
  double load_noise_kw = 0.2;
  int t_start = 7;   // occupancy start hour
  int t_end = 19;    // occupancy end hour (inclusive)

  PriceKind price_kind = PriceKind::volatile_spike;
  double price_flat = 5.0;        // cents/kWh
  double price_off_peak = 2.5;
  double price_mid_peak = 5.5;
  double price_on_peak = 10.5;
  double price_spike_max = 12.1;  // cents/kWh, volatile afternoon peak cap
  double price_noise = 0.4;
  double negative_price_prob = 0.25;  // per day, volatile kind only

  void validate() const;
};

struct WeatherDay {
  Hourly t_out{};
  Hourly t_evap{};
  Hourly t_adj{};
};

WeatherDay gen_weather(int day, const GenConfig& cfg);
Hourly gen_internal_load(int day, const GenConfig& cfg);
Hourly gen_price(int day, const GenConfig& cfg);

// Exogenous inputs for one day (weather, load, price); t_set/p/q/t_indoor
// are left zero for the caller to fill.
DayProfile gen_day_inputs(int day, const GenConfig& cfg);

// One history-prefix day plus n_days of rule-based operation under a
// per-day set-point drawn from {22, 22.5, 23, 23.5, 24} degC, simulated
// with carried plant state and split with the seed.
DataStore gen_initial_dataset(const GenConfig& cfg, const PlantParams& plant,
                              int n_days = 50);

}  // namespace hvacsched
