#include <algorithm>
#include <cmath>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "hvacsched/checkpoint.hpp"
#include "hvacsched/composite.hpp"
#include "hvacsched/config.hpp"
#include "hvacsched/datagen.hpp"
#include "hvacsched/datastore.hpp"
#include "hvacsched/metrics.hpp"
#include "hvacsched/rng.hpp"

using namespace hvacsched;

namespace {

void set_norm(Normalizer& nz, int j, double lo, double hi) {
  nz.lo[static_cast<std::size_t>(j)] = lo;
  nz.hi[static_cast<std::size_t>(j)] = hi;
}

void range_for(Signal s, double& lo, double& hi) {
  lo = 0;
  hi = 1;
  switch (s) {
    case Signal::t_set: lo = 15; hi = 35; break;
    case Signal::power: lo = 0; hi = 12; break;
    case Signal::heat: lo = 0; hi = 30; break;
    case Signal::t_indoor: lo = 10; hi = 40; break;
    case Signal::t_out: lo = 10; hi = 40; break;
    case Signal::t_evap: lo = 10; hi = 14; break;
    case Signal::t_adj: lo = 20; hi = 30; break;
    case Signal::q_internal: lo = 0; hi = 10; break;
    case Signal::price: lo = -2; hi = 13; break;
  }
}

// Untrained model with plausible signal ranges so rollouts stay tame.
CompositeModel probe_model(Topology t, std::uint64_t seed, int lag = 6) {
  std::array<SizeSpec, 3> sizes{{{1, 3}, {1, 3}, {1, 3}}};
  CompositeModel m = make_composite(t, lag, sizes, seed);
  for (auto& sub : m.nets) {
    for (int j = 0; j < sub.schema.n_features(); ++j) {
      double lo, hi;
      range_for(sub.schema.features[static_cast<std::size_t>(j)].signal, lo,
                hi);
      set_norm(sub.net.in_norm, j, lo, hi);
    }
    for (int o = 0; o < sub.schema.n_outputs(); ++o) {
      switch (sub.schema.outputs[static_cast<std::size_t>(o)]) {
        case Signal::power: set_norm(sub.net.out_norm, o, 0, 12); break;
        case Signal::heat: set_norm(sub.net.out_norm, o, 0, 30); break;
        case Signal::t_indoor: set_norm(sub.net.out_norm, o, 15, 30); break;
        default: break;
      }
    }
  }
  return m;
}

DayProfile probe_exo() {
  DayProfile d;
  for (int h = 0; h < kHorizon; ++h) {
    d.t_out[h] = 27.0 + 5.0 * std::sin(0.26 * h);
    d.t_evap[h] = 12.0 + 0.2 * std::cos(0.5 * h);
    d.t_adj[h] = 25.0 + 0.4 * std::sin(0.3 * h);
    d.q_int[h] = 3.0 + 2.0 * (h >= 8 && h <= 18);
    d.price[h] = 5.0;
  }
  return d;
}

HistoryBuffer probe_hist(int lag) {
  HistoryBuffer h;
  h.lag_steps = lag;
  const double base[9] = {5.0, 26.0, 12.0, 25.0, 3.0, 23.0, 3.0, 8.0, 22.0};
  for (int s = 0; s < 9; ++s) {
    h.series[static_cast<std::size_t>(s)].assign(
        static_cast<std::size_t>(lag), base[s]);
    for (int k = 0; k < lag; ++k) {
      h.series[static_cast<std::size_t>(s)][static_cast<std::size_t>(k)] +=
          0.01 * k;
    }
  }
  return h;
}

Hourly random_schedule(Rng& rng) {
  Hourly s{};
  for (int t = 0; t < kHorizon; ++t) s[t] = 19.0 + 8.0 * rng.uniform(0.0, 1.0);
  return s;
}

void zero_weights(CompositeModel& m) {
  for (auto& sub : m.nets) {
    for (auto& layer : sub.net.layers) {
      std::fill(layer.w.begin(), layer.w.end(), 0.0);
      std::fill(layer.b.begin(), layer.b.end(), 0.0);
    }
    std::fill(sub.net.head_w.begin(), sub.net.head_w.end(), 0.0);
    std::fill(sub.net.head_b.begin(), sub.net.head_b.end(), 0.0);
  }
}

// One synthetic day where signal s at absolute hour h stores 1000*s + h.
DayProfile coded_day(int day) {
  DayProfile d;
  d.day = day;
  for (int h = 0; h < kHorizon; ++h) {
    const int abs_h = kHorizon * day + h;
    d.price[h] = 0 * 1000 + abs_h;
    d.t_out[h] = 1 * 1000 + abs_h;
    d.t_evap[h] = 2 * 1000 + abs_h;
    d.t_adj[h] = 3 * 1000 + abs_h;
    d.q_int[h] = 4 * 1000 + abs_h;
    d.t_set[h] = 5 * 1000 + abs_h;
    d.p[h] = 6 * 1000 + abs_h;
    d.q[h] = 7 * 1000 + abs_h;
    d.t_indoor[h] = 8 * 1000 + abs_h;
  }
  return d;
}

DataStore coded_store(int n_days, int prefix) {
  DataStore st;
  st.history_prefix = prefix;
  for (int d = 0; d < n_days; ++d) st.episodes.push_back(coded_day(d));
  resplit(st, 9);
  return st;
}

}  // namespace

TEST_CASE("topologies construct the expected sub-networks") {
  std::array<SizeSpec, 3> sizes{{{1, 5}, {2, 6}, {1, 7}}};
  CompositeModel m3 = make_composite(Topology::three_nets, 10, sizes, 1);
  REQUIRE(m3.nets.size() == 3);
  CHECK(m3.nets[0].net.spec.n_features == 3);
  CHECK(m3.nets[0].net.spec.n_hidden == 5);
  CHECK(m3.nets[1].net.spec.n_features == 3);
  CHECK(m3.nets[1].net.spec.n_layers == 2);
  CHECK(m3.nets[2].net.spec.n_features == 6);
  CHECK(m3.nets[2].net.spec.n_hidden == 7);
  for (const auto& sub : m3.nets) {
    CHECK(sub.net.spec.seq_len == 10);
    CHECK(sub.net.spec.n_outputs == 1);
  }

  CompositeModel m2 = make_composite(Topology::two_nets, 10, sizes, 1);
  REQUIRE(m2.nets.size() == 2);
  CHECK(m2.nets[0].net.spec.n_hidden == 5);
  CHECK(m2.nets[1].net.spec.n_features == 6);
  CHECK(m2.nets[1].net.spec.n_hidden == 7);

  CompositeModel m1 = make_composite(Topology::one_net, 10, sizes, 1);
  REQUIRE(m1.nets.size() == 1);
  CHECK(m1.nets[0].net.spec.n_features == 6);
  CHECK(m1.nets[0].net.spec.n_outputs == 2);

  CHECK_THROWS_WITH_AS(make_composite(Topology::one_net, 1, sizes, 1),
                       doctest::Contains("at least 2"), std::runtime_error);

  CHECK(topology_from_name("three_nets") == Topology::three_nets);
  CHECK(topology_from_name(topology_name(Topology::one_net)) ==
        Topology::one_net);
  CHECK_THROWS_WITH_AS(topology_from_name("four_nets"),
                       doctest::Contains("unknown topology"),
                       std::runtime_error);
}

TEST_CASE("composite_from_config reads per-network sizes and the lag") {
  Config cfg = default_config();
  cfg.set("l_p", "8");
  cfg.set("n_hl_l1", "1");
  cfg.set("n_hn_l1", "4");
  cfg.set("n_hl_l3", "2");
  cfg.set("n_hn_l3", "5");
  CompositeModel m = composite_from_config(Topology::two_nets, cfg, 3);
  CHECK(m.lag_steps == 8);
  CHECK(m.nets[0].net.spec.n_hidden == 4);
  CHECK(m.nets[1].net.spec.n_layers == 2);
  CHECK(m.nets[1].net.spec.n_hidden == 5);
}

TEST_CASE("history buffer exposes the hours before a start point") {
  DataStore st = coded_store(3, 1);
  HistoryBuffer h = history_ending_before(st, 30, 4);
  CHECK(h.before(Signal::t_set, 1) == 5000 + 29);
  CHECK(h.before(Signal::t_set, 4) == 5000 + 26);
  CHECK(h.before(Signal::price, 2) == 0 + 28);
  CHECK(h.before(Signal::t_indoor, 3) == 8000 + 27);
  CHECK_THROWS_AS(h.before(Signal::power, 0), std::out_of_range);
  CHECK_THROWS_AS(h.before(Signal::power, 5), std::out_of_range);
  CHECK_THROWS_WITH_AS(history_ending_before(st, 3, 4),
                       doctest::Contains("missing history"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(history_ending_before(st, 80, 4),
                       doctest::Contains("missing history"),
                       std::runtime_error);
}

TEST_CASE("training windows read the schema lags off the archive") {
  DataStore st = coded_store(3, 1);
  const FeatureSchema sch = schema_envelope();
  const int lag = 3;
  std::vector<Sample> s = make_samples(st, sch, lag, {5});
  REQUIRE(s.size() == 1);
  const int h = st.abs_hour(5);
  REQUIRE(h == 29);
  REQUIRE(s[0].window.size() == 3u * 6u);
  for (int step = 0; step < lag; ++step) {
    const int tau = h - (lag - 1 - step);
    CHECK(s[0].window[step * 6 + 0] == 7000 + tau);      // heat, lag 0
    CHECK(s[0].window[step * 6 + 1] == 1000 + tau);      // t_out
    CHECK(s[0].window[step * 6 + 2] == 3000 + tau);      // t_adj
    CHECK(s[0].window[step * 6 + 3] == 2000 + tau);      // t_evap
    CHECK(s[0].window[step * 6 + 4] == 4000 + tau);      // q_internal
    CHECK(s[0].window[step * 6 + 5] == 8000 + tau - 1);  // t_indoor, lag 1
  }
  REQUIRE(s[0].target.size() == 1);
  CHECK(s[0].target[0] == 8000 + h);

  DataStore bare = coded_store(2, 0);
  CHECK_THROWS_WITH_AS(make_samples(bare, sch, 24, {0}),
                       doctest::Contains("lacks lag history"),
                       std::runtime_error);
}

TEST_CASE("zeroed networks roll out their output midpoints") {
  CompositeModel m = probe_model(Topology::three_nets, 11, 3);
  zero_weights(m);
  set_norm(m.nets[0].net.out_norm, 0, 4.0, 6.0);
  set_norm(m.nets[1].net.out_norm, 0, 0.0, 30.0);
  set_norm(m.nets[2].net.out_norm, 0, 20.0, 24.0);
  const DayProfile exo = probe_exo();
  const HistoryBuffer hist = probe_hist(3);

  Rollout r = rollout_closed(m, Hourly{}, exo, hist, RolloutLimits{});
  for (int t = 0; t < kHorizon; ++t) {
    CHECK(r.p[t] == 5.0);
    CHECK(r.q[t] == 15.0);
    CHECK(r.t_indoor[t] == 22.0);
  }

  SUBCASE("the power clamp binds and kills the schedule gradient") {
    RolloutLimits lim;
    lim.p_max = 4.5;
    RolloutTrace tr = rollout_closed_traced(m, Hourly{}, exo, hist, lim);
    for (int t = 0; t < kHorizon; ++t) {
      CHECK(tr.p_raw[t] == 5.0);
      CHECK(tr.pred.p[t] == 4.5);
    }
    Hourly up_p{};
    up_p.fill(1.0);
    Hourly g = rollout_vjp(m, tr, up_p, Hourly{}, Hourly{});
    for (int t = 0; t < kHorizon; ++t) CHECK(g[t] == 0.0);
  }

  SUBCASE("an implausible indoor prediction aborts the rollout") {
    set_norm(m.nets[2].net.out_norm, 0, 60.0, 80.0);
    CHECK_THROWS_WITH_AS(
        rollout_closed(m, Hourly{}, exo, hist, RolloutLimits{}),
        doctest::Contains("hour 0"), std::runtime_error);
    CHECK_THROWS_WITH_AS(
        rollout_closed(m, Hourly{}, exo, hist, RolloutLimits{}),
        doctest::Contains("70"), std::runtime_error);
  }
}

TEST_CASE("reverse-mode schedule gradients match finite differences") {
  const DayProfile exo = probe_exo();
  int model_seed = 100;
  for (Topology topo :
       {Topology::three_nets, Topology::two_nets, Topology::one_net}) {
    CAPTURE(topology_name(topo));
    const int lag = 5;
    CompositeModel m = probe_model(topo, ++model_seed, lag);
    const HistoryBuffer hist = probe_hist(lag);
    const RolloutLimits lim;
    Rng rng(40 + model_seed);
    for (int trial = 0; trial < 3; ++trial) {
      CAPTURE(trial);
      Hourly sched = random_schedule(rng);
      Hourly wp{}, wq{}, wti{};
      for (int t = 0; t < kHorizon; ++t) {
        wp[t] = rng.uniform(-1.0, 1.0);
        wq[t] = rng.uniform(-1.0, 1.0);
        wti[t] = rng.uniform(-1.0, 1.0);
      }
      if (topo != Topology::three_nets) wq.fill(0.0);

      RolloutTrace tr = rollout_closed_traced(m, sched, exo, hist, lim);
      Hourly g = rollout_vjp(m, tr, wp, wq, wti);

      auto value = [&](const Hourly& s) {
        Rollout r = rollout_closed(m, s, exo, hist, lim);
        double j = 0.0;
        for (int t = 0; t < kHorizon; ++t) {
          j += wp[t] * r.p[t] + wq[t] * r.q[t] + wti[t] * r.t_indoor[t];
        }
        return j;
      };
      const double h = 1e-5;
      for (int tau = 0; tau < kHorizon; ++tau) {
        Hourly plus = sched, minus = sched;
        plus[tau] += h;
        minus[tau] -= h;
        const double fd = (value(plus) - value(minus)) / (2.0 * h);
        const double tol = 2e-4 * std::max(std::abs(fd), std::abs(g[tau]));
        CAPTURE(tau);
        CHECK(std::abs(g[tau] - fd) <= std::max(tol, 1e-8));
      }
    }
  }
}

TEST_CASE("hour-by-hour jacobians are causal and match finite differences") {
  const int lag = 4;
  CompositeModel m = probe_model(Topology::three_nets, 77, lag);
  const DayProfile exo = probe_exo();
  const HistoryBuffer hist = probe_hist(lag);
  Rng rng(5);
  const Hourly sched = random_schedule(rng);
  RolloutTrace tr = rollout_closed_traced(m, sched, exo, hist, RolloutLimits{});
  ScheduleJacobians jac = rollout_grad(m, tr);

  for (int t = 0; t < kHorizon; ++t) {
    for (int tau = t + 1; tau < kHorizon; ++tau) {
      CHECK(jac.p_at(t, tau) == 0.0);
      CHECK(jac.ti_at(t, tau) == 0.0);
    }
  }

  const double h = 1e-5;
  for (int t : {7, 23}) {
    for (int tau = 0; tau <= t; ++tau) {
      Hourly plus = sched, minus = sched;
      plus[tau] += h;
      minus[tau] -= h;
      Rollout rp = rollout_closed(m, plus, exo, hist, RolloutLimits{});
      Rollout rm = rollout_closed(m, minus, exo, hist, RolloutLimits{});
      const double fd_p = (rp.p[t] - rm.p[t]) / (2.0 * h);
      const double fd_ti = (rp.t_indoor[t] - rm.t_indoor[t]) / (2.0 * h);
      CAPTURE(t);
      CAPTURE(tau);
      CHECK(std::abs(jac.p_at(t, tau) - fd_p) <=
            std::max(2e-4 * std::abs(fd_p), 1e-8));
      CHECK(std::abs(jac.ti_at(t, tau) - fd_ti) <=
            std::max(2e-4 * std::abs(fd_ti), 1e-8));
    }
  }
}

TEST_CASE("future set-point changes cannot touch earlier hours") {
  const int lag = 6;
  CompositeModel m = probe_model(Topology::three_nets, 21, lag);
  const DayProfile exo = probe_exo();
  const HistoryBuffer hist = probe_hist(lag);
  Rng rng(17);
  const Hourly s1 = random_schedule(rng);
  Hourly s2 = s1;
  s2[10] += 1.5;
  Rollout r1 = rollout_closed(m, s1, exo, hist, RolloutLimits{});
  Rollout r2 = rollout_closed(m, s2, exo, hist, RolloutLimits{});
  for (int t = 0; t < 10; ++t) {
    CHECK(r1.p[t] == r2.p[t]);
    CHECK(r1.q[t] == r2.q[t]);
    CHECK(r1.t_indoor[t] == r2.t_indoor[t]);
  }
  bool diverged = false;
  for (int t = 10; t < kHorizon; ++t) {
    diverged = diverged || r1.t_indoor[t] != r2.t_indoor[t] ||
               r1.p[t] != r2.p[t];
  }
  CHECK(diverged);
}

TEST_CASE("trained predictor tracks a simulated day open and closed loop") {
  GenConfig gcfg;
  gcfg.seed = 5;
  gcfg.price_kind = PriceKind::time_of_use;
  PlantParams pp;
  DataStore st = gen_initial_dataset(gcfg, pp, 20);
  REQUIRE(st.n_rows() == 20 * kHorizon);

  Config cfg = default_config();
  cfg.set("l_p", "8");
  for (const char* k : {"n_hl_l1", "n_hl_l2", "n_hl_l3"}) cfg.set(k, "1");
  for (const char* k : {"n_hn_l1", "n_hn_l2", "n_hn_l3"}) cfg.set(k, "6");
  TrainConfig tcfg;
  tcfg.epochs = 800;
  tcfg.lr = 2e-2;
  CompositeModel m = build_ablation(st, Topology::three_nets, cfg, tcfg, 2);

  const int day = static_cast<int>(st.episodes.size()) - 1;
  const DayProfile& actual = st.episodes[static_cast<std::size_t>(day)];
  const HistoryBuffer hist = history_ending_before(st, kHorizon * day, 8);

  Rollout open = rollout_open(m, actual, hist);
  Rollout closed = rollout_closed(m, actual.t_set, actual, hist,
                                  RolloutLimits{});
  std::vector<double> ti(actual.t_indoor.begin(), actual.t_indoor.end());
  std::vector<double> open_ti(open.t_indoor.begin(), open.t_indoor.end());
  std::vector<double> closed_ti(closed.t_indoor.begin(),
                                closed.t_indoor.end());
  const double e_open = nrmse(ti, open_ti);
  const double e_closed = nrmse(ti, closed_ti);
  CHECK(e_open < 0.3);
  CHECK(e_closed < 0.6);
  CHECK(e_open <= e_closed + 1e-12);

  std::vector<double> p(actual.p.begin(), actual.p.end());
  std::vector<double> open_p(open.p.begin(), open.p.end());
  CHECK(nrmse(p, open_p) < 0.3);
}

TEST_CASE("identical seeds rebuild identical composites") {
  GenConfig gcfg;
  gcfg.seed = 8;
  PlantParams pp;
  DataStore st = gen_initial_dataset(gcfg, pp, 8);
  Config cfg = default_config();
  cfg.set("l_p", "6");
  for (const char* k : {"n_hl_l1", "n_hl_l2", "n_hl_l3"}) cfg.set(k, "1");
  for (const char* k : {"n_hn_l1", "n_hn_l2", "n_hn_l3"}) cfg.set(k, "4");
  TrainConfig tcfg;
  tcfg.epochs = 60;

  CompositeModel a = build_ablation(st, Topology::two_nets, cfg, tcfg, 4);
  CompositeModel b = build_ablation(st, Topology::two_nets, cfg, tcfg, 4);
  REQUIRE(a.nets.size() == b.nets.size());
  for (std::size_t k = 0; k < a.nets.size(); ++k) {
    CHECK(a.nets[k].net.head_w == b.nets[k].net.head_w);
    CHECK(a.nets[k].net.layers[0].w == b.nets[k].net.layers[0].w);
    CHECK(a.nets[k].net.in_norm.lo == b.nets[k].net.in_norm.lo);
  }

  CompositeModel c = build_ablation(st, Topology::two_nets, cfg, tcfg, 5);
  CHECK(c.nets[0].net.layers[0].w != a.nets[0].net.layers[0].w);
}

TEST_CASE("retraining without a refit only widens the normalizers") {
  GenConfig gcfg;
  gcfg.seed = 3;
  PlantParams pp;
  DataStore st = gen_initial_dataset(gcfg, pp, 6);
  Config cfg = default_config();
  cfg.set("l_p", "4");
  for (const char* k : {"n_hl_l1", "n_hl_l2", "n_hl_l3"}) cfg.set(k, "1");
  for (const char* k : {"n_hn_l1", "n_hn_l2", "n_hn_l3"}) cfg.set(k, "3");
  TrainConfig tcfg;
  tcfg.epochs = 20;
  CompositeModel m = build_ablation(st, Topology::three_nets, cfg, tcfg, 6);
  const Normalizer before_in = m.nets[0].net.in_norm;

  train_subnets(m, st, tcfg, false);
  for (int j = 0; j < before_in.dim(); ++j) {
    CHECK(m.nets[0].net.in_norm.lo[j] <= before_in.lo[j]);
    CHECK(m.nets[0].net.in_norm.hi[j] >= before_in.hi[j]);
  }
}

TEST_CASE("composite checkpoints round-trip bitwise") {
  CompositeModel m = probe_model(Topology::three_nets, 31, 5);
  const auto path =
      (std::filesystem::temp_directory_path() / "composite_rt.ckpt").string();
  save_composite_file(path, m);
  CompositeModel r = load_composite_file(path);
  CHECK(r.topology == m.topology);
  CHECK(r.lag_steps == m.lag_steps);
  REQUIRE(r.nets.size() == m.nets.size());

  const DayProfile exo = probe_exo();
  const HistoryBuffer hist = probe_hist(5);
  Rng rng(2);
  const Hourly sched = random_schedule(rng);
  Rollout a = rollout_closed(m, sched, exo, hist, RolloutLimits{});
  Rollout b = rollout_closed(r, sched, exo, hist, RolloutLimits{});
  for (int t = 0; t < kHorizon; ++t) {
    CHECK(a.p[t] == b.p[t]);
    CHECK(a.q[t] == b.q[t]);
    CHECK(a.t_indoor[t] == b.t_indoor[t]);
  }
  std::filesystem::remove(path);

  const auto net_path =
      (std::filesystem::temp_directory_path() / "lone_net.ckpt").string();
  ckpt::save_network_file(net_path, m.nets[0].net);
  CHECK_THROWS_WITH_AS(load_composite_file(net_path),
                       doctest::Contains("kind mismatch"), std::runtime_error);
  std::filesystem::remove(net_path);
}

TEST_CASE("closed-loop rollout regression pin") {
  CompositeModel m = probe_model(Topology::three_nets, 99, 6);
  const DayProfile exo = probe_exo();
  const HistoryBuffer hist = probe_hist(6);
  Hourly sched;
  for (int t = 0; t < kHorizon; ++t) {
    sched[t] = 22.0 + 2.0 * std::sin(0.4 * t);
  }
  Rollout r = rollout_closed(m, sched, exo, hist, RolloutLimits{});
  CHECK(r.p[5] == doctest::Approx(6.1876182118075036).epsilon(1e-12));
  CHECK(r.t_indoor[23] == doctest::Approx(22.259460051764293).epsilon(1e-12));
}
