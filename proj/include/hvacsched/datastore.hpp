#pragma once

#include <cstdint>
#include <vector>

#include "hvacsched/plant.hpp"

// Growing archive of executed days plus the per-row train/val/test split.
// Episodes form one continuous hourly timeline; the first history_prefix
// days provide lag context only and never appear as training targets.

namespace hvacsched {

enum class Signal {
  price,
  t_out,
  t_evap,
  t_adj,
  q_internal,
  t_set,
  power,
  heat,
  t_indoor,
};

enum class Split { train = 0, val = 1, test = 2 };

struct DataStore {
  std::vector<DayProfile> episodes;
  int history_prefix = 0;
  std::vector<Split> split;  // one entry per target row
  std::uint64_t split_seed = 0;

  // Target rows: hourly rows outside the history prefix.
  int n_rows() const {
    return kHorizon * (static_cast<int>(episodes.size()) - history_prefix);
  }
  int n_days() const {
    return static_cast<int>(episodes.size()) - history_prefix;
  }
  // Absolute hour index of target row r on the full timeline.
  int abs_hour(int row) const { return kHorizon * history_prefix + row; }
  int total_hours() const {
    return kHorizon * static_cast<int>(episodes.size());
  }

  double at(Signal sig, int abs_hour) const;
  void append(const DayProfile& d);
};

// Shuffle every target row with the given seed and deal 0.8/0.1/0.1
// (train gets floor(0.8 n), val floor(0.1 n), test the rest).
void resplit(DataStore& store, std::uint64_t seed);

std::vector<int> rows_in(const DataStore& store, Split which);

// Concatenated day CSV in timeline order (same schema as the plant).
Csv store_csv(const DataStore& store);
DataStore store_from_csv(const Csv& csv, int history_prefix);

}  // namespace hvacsched
