#include "hvacsched/datastore.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "hvacsched/rng.hpp"

namespace hvacsched {

double DataStore::at(Signal sig, int abs_hour) const {
  if (abs_hour < 0 || abs_hour >= total_hours()) {
    throw std::out_of_range("store hour " + std::to_string(abs_hour) +
                            " outside [0, " + std::to_string(total_hours()) +
                            ")");
  }
  const DayProfile& d = episodes[static_cast<std::size_t>(abs_hour / kHorizon)];
  const int h = abs_hour % kHorizon;
  switch (sig) {
    case Signal::price: return d.price[h];
    case Signal::t_out: return d.t_out[h];
    case Signal::t_evap: return d.t_evap[h];
    case Signal::t_adj: return d.t_adj[h];
    case Signal::q_internal: return d.q_int[h];
    case Signal::t_set: return d.t_set[h];
    case Signal::power: return d.p[h];
    case Signal::heat: return d.q[h];
    case Signal::t_indoor: return d.t_indoor[h];
  }
  throw std::logic_error("unknown signal");
}

void DataStore::append(const DayProfile& d) { episodes.push_back(d); }

void resplit(DataStore& store, std::uint64_t seed) {
  const int n = store.n_rows();
  if (n <= 0) throw std::runtime_error("cannot split an empty store");
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng rng(seed);
  rng.shuffle(order);
  const int n_train = static_cast<int>(std::llround(0.8 * n));
  const int n_val =
      std::min(static_cast<int>(std::llround(0.1 * n)), n - n_train);
  store.split.assign(static_cast<std::size_t>(n), Split::test);
  for (int i = 0; i < n_train; ++i) {
    store.split[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] =
        Split::train;
  }
  for (int i = n_train; i < n_train + n_val; ++i) {
    store.split[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] =
        Split::val;
  }
  store.split_seed = seed;
}

std::vector<int> rows_in(const DataStore& store, Split which) {
  if (store.split.size() != static_cast<std::size_t>(store.n_rows())) {
    throw std::runtime_error("store split is stale: " +
                             std::to_string(store.split.size()) +
                             " assignments for " +
                             std::to_string(store.n_rows()) + " rows");
  }
  std::vector<int> rows;
  for (int r = 0; r < store.n_rows(); ++r) {
    if (store.split[static_cast<std::size_t>(r)] == which) rows.push_back(r);
  }
  return rows;
}

Csv store_csv(const DataStore& store) {
  Csv csv = day_csv_header();
  for (const auto& d : store.episodes) append_day(csv, d);
  return csv;
}

DataStore store_from_csv(const Csv& csv, int history_prefix) {
  DataStore store;
  store.episodes = days_from_csv(csv);
  store.history_prefix = history_prefix;
  if (history_prefix < 0 ||
      history_prefix >= static_cast<int>(store.episodes.size())) {
    throw std::runtime_error("history prefix " +
                             std::to_string(history_prefix) +
                             " leaves no target rows");
  }
  return store;
}

}  // namespace hvacsched
