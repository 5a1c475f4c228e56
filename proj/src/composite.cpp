#include "hvacsched/composite.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

#include "hvacsched/checkpoint.hpp"
#include "hvacsched/csvio.hpp"
#include "hvacsched/rng.hpp"

namespace hvacsched {
namespace {

double exo_value(const DayProfile& d, Signal s, int hour) {
  switch (s) {
    case Signal::price: return d.price[hour];
    case Signal::t_out: return d.t_out[hour];
    case Signal::t_evap: return d.t_evap[hour];
    case Signal::t_adj: return d.t_adj[hour];
    case Signal::q_internal: return d.q_int[hour];
    case Signal::t_set: return d.t_set[hour];
    case Signal::power: return d.p[hour];
    case Signal::heat: return d.q[hour];
    case Signal::t_indoor: return d.t_indoor[hour];
  }
  throw std::logic_error("unknown signal");
}

int max_steps_back(const FeatureSchema& schema) {
  int m = 0;
  for (const auto& f : schema.features) m = std::max(m, f.steps_back);
  return m;
}

NetworkSpec spec_for(const FeatureSchema& schema, int lag_steps,
                     const SizeSpec& size) {
  NetworkSpec spec;
  spec.n_features = schema.n_features();
  spec.n_outputs = schema.n_outputs();
  spec.seq_len = lag_steps;
  spec.n_layers = size.n_layers;
  spec.n_hidden = size.n_hidden;
  return spec;
}

}  // namespace

const char* topology_name(Topology t) {
  switch (t) {
    case Topology::three_nets: return "three_nets";
    case Topology::two_nets: return "two_nets";
    case Topology::one_net: return "one_net";
  }
  throw std::logic_error("unknown topology");
}

Topology topology_from_name(std::string_view name) {
  if (name == "three_nets") return Topology::three_nets;
  if (name == "two_nets") return Topology::two_nets;
  if (name == "one_net") return Topology::one_net;
  throw std::runtime_error("unknown topology '" + std::string(name) +
                           "' (expected three_nets, two_nets or one_net)");
}

FeatureSchema schema_thermostat() {
  return {{{Signal::t_set, 0}, {Signal::power, 1}, {Signal::t_indoor, 1}},
          {Signal::power}};
}

FeatureSchema schema_heat_pump() {
  return {{{Signal::power, 0}, {Signal::t_out, 0}, {Signal::t_evap, 0}},
          {Signal::heat}};
}

FeatureSchema schema_envelope() {
  return {{{Signal::heat, 0},
           {Signal::t_out, 0},
           {Signal::t_adj, 0},
           {Signal::t_evap, 0},
           {Signal::q_internal, 0},
           {Signal::t_indoor, 1}},
          {Signal::t_indoor}};
}

FeatureSchema schema_merged_plant() {
  return {{{Signal::power, 0},
           {Signal::t_out, 0},
           {Signal::t_adj, 0},
           {Signal::t_evap, 0},
           {Signal::q_internal, 0},
           {Signal::t_indoor, 1}},
          {Signal::t_indoor}};
}

FeatureSchema schema_monolithic() {
  return {{{Signal::t_set, 0},
           {Signal::t_out, 0},
           {Signal::t_adj, 0},
           {Signal::t_evap, 0},
           {Signal::q_internal, 0},
           {Signal::t_indoor, 1}},
          {Signal::power, Signal::t_indoor}};
}

CompositeModel make_composite(Topology t, int lag_steps,
                              const std::array<SizeSpec, 3>& sizes,
                              std::uint64_t seed) {
  if (lag_steps < 2) {
    throw std::runtime_error("lag window must cover at least 2 steps");
  }
  CompositeModel m;
  m.topology = t;
  m.lag_steps = lag_steps;
  std::vector<std::pair<FeatureSchema, SizeSpec>> parts;
  switch (t) {
    case Topology::three_nets:
      parts = {{schema_thermostat(), sizes[0]},
               {schema_heat_pump(), sizes[1]},
               {schema_envelope(), sizes[2]}};
      break;
    case Topology::two_nets:
      parts = {{schema_thermostat(), sizes[0]},
               {schema_merged_plant(), sizes[2]}};
      break;
    case Topology::one_net:
      parts = {{schema_monolithic(), sizes[2]}};
      break;
  }
  for (std::size_t k = 0; k < parts.size(); ++k) {
    SubModel sub;
    sub.schema = parts[k].first;
    sub.net = make_network(
        spec_for(sub.schema, lag_steps, parts[k].second),
        derive_seed(seed, "subnet" + std::to_string(k)));
    m.nets.push_back(std::move(sub));
  }
  return m;
}

CompositeModel composite_from_config(Topology t, const Config& cfg,
                                     std::uint64_t seed) {
  std::array<SizeSpec, 3> sizes;
  sizes[0] = {static_cast<int>(cfg.integer("n_hl_l1")),
              static_cast<int>(cfg.integer("n_hn_l1"))};
  sizes[1] = {static_cast<int>(cfg.integer("n_hl_l2")),
              static_cast<int>(cfg.integer("n_hn_l2"))};
  sizes[2] = {static_cast<int>(cfg.integer("n_hl_l3")),
              static_cast<int>(cfg.integer("n_hn_l3"))};
  return make_composite(t, static_cast<int>(cfg.integer("l_p")), sizes, seed);
}

double HistoryBuffer::before(Signal s, int steps_back) const {
  if (steps_back < 1 || steps_back > lag_steps) {
    throw std::out_of_range("history lookback " + std::to_string(steps_back) +
                            " outside [1, " + std::to_string(lag_steps) + "]");
  }
  return series[static_cast<std::size_t>(s)]
               [static_cast<std::size_t>(steps_back - 1)];
}

HistoryBuffer history_ending_before(const DataStore& store, int abs_hour,
                                    int lag_steps) {
  if (abs_hour - lag_steps < 0 || abs_hour > store.total_hours()) {
    throw std::runtime_error("missing history: need " +
                             std::to_string(lag_steps) + " hours before hour " +
                             std::to_string(abs_hour) + ", store holds " +
                             std::to_string(store.total_hours()));
  }
  HistoryBuffer h;
  h.lag_steps = lag_steps;
  for (int sig = 0; sig < 9; ++sig) {
    auto& v = h.series[static_cast<std::size_t>(sig)];
    v.resize(static_cast<std::size_t>(lag_steps));
    for (int k = 1; k <= lag_steps; ++k) {
      v[static_cast<std::size_t>(k - 1)] =
          store.at(static_cast<Signal>(sig), abs_hour - k);
    }
  }
  return h;
}

std::vector<Sample> make_samples(const DataStore& store,
                                 const FeatureSchema& schema, int lag_steps,
                                 const std::vector<int>& rows) {
  const int F = schema.n_features();
  const int O = schema.n_outputs();
  std::vector<Sample> out;
  out.reserve(rows.size());
  for (int r : rows) {
    const int h = store.abs_hour(r);
    if (h - (lag_steps - 1) - max_steps_back(schema) < 0) {
      throw std::runtime_error("row " + std::to_string(r) +
                               " lacks lag history");
    }
    Sample s;
    s.window.resize(static_cast<std::size_t>(lag_steps) * F);
    for (int step = 0; step < lag_steps; ++step) {
      const int tau = h - (lag_steps - 1 - step);
      for (int j = 0; j < F; ++j) {
        s.window[static_cast<std::size_t>(step) * F + j] = store.at(
            schema.features[static_cast<std::size_t>(j)].signal,
            tau - schema.features[static_cast<std::size_t>(j)].steps_back);
      }
    }
    s.target.resize(static_cast<std::size_t>(O));
    for (int o = 0; o < O; ++o) {
      s.target[static_cast<std::size_t>(o)] =
          store.at(schema.outputs[static_cast<std::size_t>(o)], h);
    }
    out.push_back(std::move(s));
  }
  return out;
}

CompositeTrainLog train_subnets(CompositeModel& model, const DataStore& store,
                                const TrainConfig& cfg, bool fit_normalizers) {
  const std::vector<int> rows_tr = rows_in(store, Split::train);
  const std::vector<int> rows_va = rows_in(store, Split::val);
  CompositeTrainLog log;
  for (auto& sub : model.nets) {
    const std::vector<Sample> tr =
        make_samples(store, sub.schema, model.lag_steps, rows_tr);
    const std::vector<Sample> va =
        make_samples(store, sub.schema, model.lag_steps, rows_va);
    if (fit_normalizers) {
      sub.net.in_norm = fit_input_normalizer(tr, sub.schema.n_features());
      sub.net.out_norm = fit_output_normalizer(tr, sub.schema.n_outputs());
    } else {
      expand_normalizer(sub.net.in_norm, tr, true);
      expand_normalizer(sub.net.out_norm, tr, false);
    }
    log.per_net.push_back(train(sub.net, tr, va, cfg));
  }
  return log;
}

CompositeModel build_ablation(const DataStore& store, Topology t,
                              const Config& cfg, const TrainConfig& tcfg,
                              std::uint64_t seed) {
  CompositeModel model = composite_from_config(t, cfg, seed);
  train_subnets(model, store, tcfg, true);
  return model;
}

namespace {

// Window value for open-loop evaluation: actuals everywhere.
double open_value(const DayProfile& day, const HistoryBuffer& hist, Signal sig,
                  int tau) {
  if (tau >= 0) return exo_value(day, sig, tau);
  return hist.before(sig, -tau);
}

std::vector<double> build_open_window(const FeatureSchema& schema,
                                      int lag_steps, int t,
                                      const DayProfile& day,
                                      const HistoryBuffer& hist) {
  const int F = schema.n_features();
  std::vector<double> w(static_cast<std::size_t>(lag_steps) * F);
  for (int step = 0; step < lag_steps; ++step) {
    const int tau = t - (lag_steps - 1 - step);
    for (int j = 0; j < F; ++j) {
      const auto& f = schema.features[static_cast<std::size_t>(j)];
      w[static_cast<std::size_t>(step) * F + j] =
          open_value(day, hist, f.signal, tau - f.steps_back);
    }
  }
  return w;
}

// Window value during a closed-loop rollout: in-day predicted signals
// come from the (clamped) rollout, everything else from actuals.
double closed_value(const Rollout& pred, const Hourly& setpoints,
                    const DayProfile& exo, const HistoryBuffer& hist,
                    Signal sig, int tau) {
  if (tau < 0) return hist.before(sig, -tau);
  switch (sig) {
    case Signal::t_set: return setpoints[tau];
    case Signal::power: return pred.p[tau];
    case Signal::heat: return pred.q[tau];
    case Signal::t_indoor: return pred.t_indoor[tau];
    default: return exo_value(exo, sig, tau);
  }
}

}  // namespace

Rollout rollout_open(const CompositeModel& model, const DayProfile& day,
                     const HistoryBuffer& hist) {
  if (hist.lag_steps != model.lag_steps) {
    throw std::runtime_error("history depth " +
                             std::to_string(hist.lag_steps) +
                             " does not match lag window " +
                             std::to_string(model.lag_steps));
  }
  Rollout out;
  for (int t = 0; t < kHorizon; ++t) {
    for (const auto& sub : model.nets) {
      const std::vector<double> w =
          build_open_window(sub.schema, model.lag_steps, t, day, hist);
      const std::vector<double> y = forward(sub.net, w);
      for (int o = 0; o < sub.schema.n_outputs(); ++o) {
        switch (sub.schema.outputs[static_cast<std::size_t>(o)]) {
          case Signal::power: out.p[t] = y[static_cast<std::size_t>(o)]; break;
          case Signal::heat: out.q[t] = y[static_cast<std::size_t>(o)]; break;
          case Signal::t_indoor:
            out.t_indoor[t] = y[static_cast<std::size_t>(o)];
            break;
          default:
            throw std::logic_error("unexpected schema output");
        }
      }
    }
  }
  return out;
}

RolloutTrace rollout_closed_traced(const CompositeModel& model,
                                   const Hourly& setpoints,
                                   const DayProfile& exo,
                                   const HistoryBuffer& hist,
                                   const RolloutLimits& limits) {
  if (hist.lag_steps != model.lag_steps) {
    throw std::runtime_error("history depth " +
                             std::to_string(hist.lag_steps) +
                             " does not match lag window " +
                             std::to_string(model.lag_steps));
  }
  RolloutTrace trace;
  trace.windows.resize(kHorizon);
  Rollout& pred = trace.pred;
  for (int t = 0; t < kHorizon; ++t) {
    for (std::size_t k = 0; k < model.nets.size(); ++k) {
      const auto& sub = model.nets[k];
      const int F = sub.schema.n_features();
      std::vector<double> w(static_cast<std::size_t>(model.lag_steps) * F);
      for (int step = 0; step < model.lag_steps; ++step) {
        const int tau = t - (model.lag_steps - 1 - step);
        for (int j = 0; j < F; ++j) {
          const auto& f = sub.schema.features[static_cast<std::size_t>(j)];
          w[static_cast<std::size_t>(step) * F + j] = closed_value(
              pred, setpoints, exo, hist, f.signal, tau - f.steps_back);
        }
      }
      const std::vector<double> y = forward(sub.net, w);
      trace.windows[static_cast<std::size_t>(t)][k] = std::move(w);
      for (int o = 0; o < sub.schema.n_outputs(); ++o) {
        const double v = y[static_cast<std::size_t>(o)];
        switch (sub.schema.outputs[static_cast<std::size_t>(o)]) {
          case Signal::power:
            trace.p_raw[t] = v;
            pred.p[t] = std::clamp(v, limits.p_min, limits.p_max);
            break;
          case Signal::heat:
            pred.q[t] = v;
            break;
          case Signal::t_indoor:
            if (!(v >= limits.ti_lo && v <= limits.ti_hi)) {
              throw std::runtime_error(
                  "closed-loop rollout diverged: predicted indoor "
                  "temperature " +
                  format_double(v) + " degC at hour " + std::to_string(t) +
                  " outside [" + format_double(limits.ti_lo) + ", " +
                  format_double(limits.ti_hi) + "]");
            }
            pred.t_indoor[t] = v;
            break;
          default:
            throw std::logic_error("unexpected schema output");
        }
      }
    }
  }
  return trace;
}

Rollout rollout_closed(const CompositeModel& model, const Hourly& setpoints,
                       const DayProfile& exo, const HistoryBuffer& hist,
                       const RolloutLimits& limits) {
  return rollout_closed_traced(model, setpoints, exo, hist, limits).pred;
}

Hourly rollout_vjp(const CompositeModel& model, const RolloutTrace& trace,
                   const Hourly& up_p, const Hourly& up_q,
                   const Hourly& up_ti) {
  Hourly adj_p = up_p;
  Hourly adj_q = up_q;
  Hourly adj_ti = up_ti;
  Hourly dset{};
  const int L = model.lag_steps;
  for (int t = kHorizon - 1; t >= 0; --t) {
    for (int k = static_cast<int>(model.nets.size()) - 1; k >= 0; --k) {
      const auto& sub = model.nets[static_cast<std::size_t>(k)];
      std::vector<double> up(static_cast<std::size_t>(sub.schema.n_outputs()),
                             0.0);
      bool any = false;
      for (int o = 0; o < sub.schema.n_outputs(); ++o) {
        double a = 0.0;
        switch (sub.schema.outputs[static_cast<std::size_t>(o)]) {
          case Signal::power:
            // Zero subgradient where the clamp saturated.
            a = (trace.pred.p[t] == trace.p_raw[t]) ? adj_p[t] : 0.0;
            break;
          case Signal::heat: a = adj_q[t]; break;
          case Signal::t_indoor: a = adj_ti[t]; break;
          default: break;
        }
        up[static_cast<std::size_t>(o)] = a;
        any = any || a != 0.0;
      }
      if (!any) continue;
      const std::vector<double>& w =
          trace.windows[static_cast<std::size_t>(t)][static_cast<std::size_t>(
              k)];
      const std::vector<double> wg = backward_inputs_vjp(sub.net, w, up);
      const int F = sub.schema.n_features();
      for (int step = 0; step < L; ++step) {
        const int tau = t - (L - 1 - step);
        for (int j = 0; j < F; ++j) {
          const auto& f = sub.schema.features[static_cast<std::size_t>(j)];
          const int src = tau - f.steps_back;
          if (src < 0) continue;
          const double g = wg[static_cast<std::size_t>(step) * F + j];
          if (g == 0.0) continue;
          switch (f.signal) {
            case Signal::t_set: dset[src] += g; break;
            case Signal::power: adj_p[src] += g; break;
            case Signal::heat: adj_q[src] += g; break;
            case Signal::t_indoor: adj_ti[src] += g; break;
            default: break;
          }
        }
      }
    }
  }
  return dset;
}

ScheduleJacobians rollout_grad(const CompositeModel& model,
                               const RolloutTrace& trace) {
  ScheduleJacobians jac;
  for (int t = 0; t < kHorizon; ++t) {
    Hourly up_p{};
    Hourly up_q{};
    Hourly up_ti{};
    up_p[t] = 1.0;
    const Hourly dp = rollout_vjp(model, trace, up_p, up_q, up_ti);
    up_p[t] = 0.0;
    up_ti[t] = 1.0;
    const Hourly dti = rollout_vjp(model, trace, up_p, up_q, up_ti);
    for (int tau = 0; tau < kHorizon; ++tau) {
      jac.dp[static_cast<std::size_t>(t * kHorizon + tau)] = dp[tau];
      jac.dti[static_cast<std::size_t>(t * kHorizon + tau)] = dti[tau];
    }
  }
  return jac;
}

void save_composite_file(const std::string& path, const CompositeModel& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  ckpt::Writer w(out);
  ckpt::write_header(w, ckpt::kKindComposite);
  w.str(topology_name(m.topology));
  w.u32(static_cast<std::uint32_t>(m.lag_steps));
  w.u32(static_cast<std::uint32_t>(m.nets.size()));
  for (const auto& sub : m.nets) ckpt::save_network(w, sub.net);
  out.flush();
  if (!out) throw std::runtime_error("failed writing " + path);
}

CompositeModel load_composite_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  ckpt::Reader r(in);
  ckpt::read_header(r, ckpt::kKindComposite);
  const Topology t = topology_from_name(r.str());
  const int lag = static_cast<int>(r.u32());
  const std::uint32_t n = r.u32();
  std::array<SizeSpec, 3> sizes{};
  CompositeModel m = make_composite(t, lag, sizes, 0);
  if (m.nets.size() != n) {
    throw std::runtime_error("checkpoint sub-network count mismatch");
  }
  for (auto& sub : m.nets) {
    sub.net = ckpt::load_network(r);
    if (sub.net.spec.n_features != sub.schema.n_features() ||
        sub.net.spec.n_outputs != sub.schema.n_outputs() ||
        sub.net.spec.seq_len != lag) {
      throw std::runtime_error(
          "checkpoint network shape does not match its schema");
    }
  }
  return m;
}

}  // namespace hvacsched
