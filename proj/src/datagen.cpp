#include "hvacsched/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "hvacsched/rng.hpp"

namespace hvacsched {
namespace {

constexpr double kPi = 3.14159265358979323846;

Rng day_rng(const GenConfig& cfg, const char* stream, int day) {
  return Rng(derive_seed(cfg.seed, std::string(stream) + ".day" +
                                       std::to_string(day)));
}

double jitter(Rng& rng, double scale) {
  return scale > 0.0 ? rng.uniform(-scale, scale) : 0.0;
}

}  // namespace

void GenConfig::validate() const {
  if (n_days < 1) throw std::runtime_error("n_days must be positive");
  if (weather_amp < 0 || weather_noise < 0 || weather_offset < 0) {
    throw std::runtime_error("weather scales must be nonnegative");
  }
  if (load_base_kw < 0 || load_peak_kw < 0 || load_noise_kw < 0) {
    throw std::runtime_error("load magnitudes must be nonnegative");
  }
  if (t_start < 0 || t_end >= kHorizon || t_start > t_end) {
    throw std::runtime_error("occupancy hours must satisfy 0 <= start <= end < 24");
  }
  if (negative_price_prob < 0 || negative_price_prob > 1) {
    throw std::runtime_error("negative price probability must be in [0, 1]");
  }
}

WeatherDay gen_weather(int day, const GenConfig& cfg) {
  Rng rng = day_rng(cfg, "weather", day);
  const double offset = jitter(rng, cfg.weather_offset);
  WeatherDay w;
  for (int h = 0; h < kHorizon; ++h) {
    const double sinusoid =
        cfg.weather_base +
        cfg.weather_amp * std::cos(2.0 * kPi * (h - 15) / 24.0);
    w.t_out[h] = sinusoid + offset + jitter(rng, cfg.weather_noise);
    w.t_evap[h] = cfg.t_evap_base + jitter(rng, 0.6 * cfg.weather_noise);
    w.t_adj[h] = cfg.t_adj_base + jitter(rng, cfg.weather_noise);
  }
  return w;
}

Hourly gen_internal_load(int day, const GenConfig& cfg) {
  Rng rng = day_rng(cfg, "load", day);
  Hourly q{};
  for (int h = 0; h < kHorizon; ++h) {
    double level = cfg.load_base_kw;
    if (h >= cfg.t_start && h <= cfg.t_end) {
      level += cfg.load_peak_kw;
    } else if (h == cfg.t_start - 1 || h == cfg.t_end + 1) {
      level += cfg.load_peak_kw * (2.0 / 3.0);
    } else if (h == cfg.t_start - 2 || h == cfg.t_end + 2) {
      level += cfg.load_peak_kw / 3.0;
    }
    q[h] = std::max(0.0, level + jitter(rng, cfg.load_noise_kw));
  }
  return q;
}

Hourly gen_price(int day, const GenConfig& cfg) {
  Rng rng = day_rng(cfg, "price", day);
  Hourly c{};
  if (cfg.price_kind == PriceKind::flat) {
    c.fill(cfg.price_flat);
    return c;
  }
  for (int h = 0; h < kHorizon; ++h) {
    if (h >= 13 && h <= 17) {
      c[h] = cfg.price_on_peak;
    } else if ((h >= 7 && h <= 12) || (h >= 18 && h <= 21)) {
      c[h] = cfg.price_mid_peak;
    } else {
      c[h] = cfg.price_off_peak;
    }
  }
  if (cfg.price_kind == PriceKind::time_of_use) return c;

  const int peak_hour = 13 + static_cast<int>(rng.below(5));
  const double spike =
      rng.uniform(0.75 * cfg.price_spike_max, cfg.price_spike_max);
  c[peak_hour] = spike;
  if (peak_hour > 13) c[peak_hour - 1] = 0.5 * (c[peak_hour - 1] + spike);
  if (peak_hour < 17) c[peak_hour + 1] = 0.5 * (c[peak_hour + 1] + spike);
  for (int h = 0; h < kHorizon; ++h) c[h] += jitter(rng, cfg.price_noise);
  if (rng.uniform() < cfg.negative_price_prob) {
    const int n_neg = 1 + static_cast<int>(rng.below(2));
    for (int k = 0; k < n_neg; ++k) {
      const int h = 2 + static_cast<int>(rng.below(4));
      c[h] = rng.uniform(-1.5, -0.2);
    }
  }
  return c;
}

DayProfile gen_day_inputs(int day, const GenConfig& cfg) {
  cfg.validate();
  DayProfile d;
  d.day = day;
  const WeatherDay w = gen_weather(day, cfg);
  d.t_out = w.t_out;
  d.t_evap = w.t_evap;
  d.t_adj = w.t_adj;
  d.q_int = gen_internal_load(day, cfg);
  d.price = gen_price(day, cfg);
  return d;
}

DataStore gen_initial_dataset(const GenConfig& cfg, const PlantParams& plant,
                              int n_days) {
  cfg.validate();
  plant.validate();
  if (n_days < 1) throw std::runtime_error("initial dataset needs >= 1 day");
  static constexpr double kMenu[5] = {22.0, 22.5, 23.0, 23.5, 24.0};
  DataStore store;
  store.history_prefix = 1;
  PlantState state;
  for (int day = 0; day <= n_days; ++day) {
    DayProfile d = gen_day_inputs(day, cfg);
    Rng rng = day_rng(cfg, "initset", day);
    d.t_set.fill(kMenu[rng.below(5)]);
    SimDay sim = simulate_day(state, d.t_set, env_day(d), plant);
    state = sim.final_state;
    sim.profile.day = day;
    sim.profile.price = d.price;
    store.append(sim.profile);
  }
  resplit(store, derive_seed(cfg.seed, "split.initial"));
  return store;
}

}  // namespace hvacsched
