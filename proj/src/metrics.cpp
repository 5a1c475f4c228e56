#include "hvacsched/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "hvacsched/csvio.hpp"

namespace hvacsched {

ComfortBand comfort_band_from_config(const Config& cfg) {
  const double lo = cfg.num("t_i_min");
  const double hi = cfg.num("t_i_max");
  const int t_s = static_cast<int>(cfg.integer("t_s"));
  const int t_e = static_cast<int>(cfg.integer("t_e"));
  if (!(lo < hi)) {
    throw std::runtime_error("comfort band needs t_i_min < t_i_max");
  }
  if (t_s < 0 || t_e >= kHorizon || t_s > t_e) {
    throw std::runtime_error("occupied hours must satisfy 0 <= t_s <= t_e < 24");
  }
  ComfortBand band;
  for (int h = 0; h < kHorizon; ++h) {
    band[h].lo = lo;
    band[h].hi = hi;
    band[h].active = (h >= t_s && h <= t_e);
  }
  return band;
}

double energy_cost(const Hourly& price, const Hourly& power) {
  double cents = 0.0;
  for (int h = 0; h < kHorizon; ++h) cents += price[h] * power[h];
  return cents / 100.0;
}

double comfort_violation(const Hourly& t_indoor, const ComfortBand& band) {
  double v = 0.0;
  for (int h = 0; h < kHorizon; ++h) {
    if (!band[h].active) continue;
    v += std::max(t_indoor[h] - band[h].hi, 0.0) +
         std::max(band[h].lo - t_indoor[h], 0.0);
  }
  return v;
}

double cost_reduction_rate(double c_case, double c_rule) {
  if (!(c_rule > 0.0)) {
    throw std::runtime_error("cost reduction undefined for baseline cost " +
                             format_double(c_rule));
  }
  return 100.0 * (c_rule - c_case) / c_rule;
}

double nrmse(const std::vector<double>& actual,
             const std::vector<double>& estimate, bool by_mean) {
  if (actual.empty() || actual.size() != estimate.size()) {
    throw std::runtime_error("nrmse needs two equal-length nonempty series");
  }
  double se = 0.0;
  double mn = actual[0], mx = actual[0], mean = 0.0, amax = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double d = actual[i] - estimate[i];
    se += d * d;
    mn = std::min(mn, actual[i]);
    mx = std::max(mx, actual[i]);
    mean += actual[i];
    amax = std::max(amax, std::abs(actual[i]));
  }
  const double rmse = std::sqrt(se / static_cast<double>(actual.size()));
  mean /= static_cast<double>(actual.size());
  double denom = by_mean ? std::abs(mean) : (mx - mn);
  if (denom <= 0.0) denom = std::max(amax, 1.0);
  return rmse / denom;
}

}  // namespace hvacsched
