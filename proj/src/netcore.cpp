#include "hvacsched/netcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "hvacsched/kernels.hpp"
#include "hvacsched/rng.hpp"

namespace hvacsched {
namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_window(const NetworkModel& m, const std::vector<double>& window) {
  const std::size_t want = static_cast<std::size_t>(m.spec.seq_len) *
                           static_cast<std::size_t>(m.spec.n_features);
  if (window.size() != want) {
    throw std::runtime_error(
        "window shape mismatch: expected " + std::to_string(m.spec.seq_len) +
        "x" + std::to_string(m.spec.n_features) + " = " +
        std::to_string(want) + " values, got " + std::to_string(window.size()));
  }
}

}  // namespace

void NetworkSpec::validate() const {
  if (n_features < 1 || n_layers < 1 || n_hidden < 1 || seq_len < 1 ||
      n_outputs < 1) {
    throw std::runtime_error("network spec fields must all be positive");
  }
}

void Normalizer::cover(int j, double mn, double mx, double eps) {
  lo[j] = std::min(lo[j], mn);
  hi[j] = std::max(hi[j], mx);
  if (!(hi[j] - lo[j] >= eps)) {
    const double mid = 0.5 * (hi[j] + lo[j]);
    lo[j] = mid - 0.5 * eps;
    hi[j] = mid + 0.5 * eps;
  }
}

std::size_t NetworkModel::n_params() const {
  std::size_t n = head_w.size() + head_b.size();
  for (const auto& l : layers) n += l.w.size() + l.b.size();
  return n;
}

NetworkModel make_network(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  NetworkModel m;
  m.spec = spec;
  Rng rng(seed);
  const int H = spec.n_hidden;
  int in = spec.n_features;
  for (int l = 0; l < spec.n_layers; ++l) {
    LstmLayer ly;
    ly.in_dim = in;
    ly.hidden = H;
    const int cols = in + H;
    const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
    ly.w.resize(static_cast<std::size_t>(4 * H) * cols);
    for (auto& v : ly.w) v = rng.uniform(-bound, bound);
    ly.b.assign(static_cast<std::size_t>(4 * H), 0.0);
    for (int k = H; k < 2 * H; ++k) ly.b[k] = 1.0;  // open forget gates
    m.layers.push_back(std::move(ly));
    in = H;
  }
  const double hb = 1.0 / std::sqrt(static_cast<double>(H));
  m.head_w.resize(static_cast<std::size_t>(spec.n_outputs) * H);
  for (auto& v : m.head_w) v = rng.uniform(-hb, hb);
  m.head_b.assign(static_cast<std::size_t>(spec.n_outputs), 0.0);
  m.in_norm.lo.assign(static_cast<std::size_t>(spec.n_features), -1.0);
  m.in_norm.hi.assign(static_cast<std::size_t>(spec.n_features), 1.0);
  m.out_norm.lo.assign(static_cast<std::size_t>(spec.n_outputs), -1.0);
  m.out_norm.hi.assign(static_cast<std::size_t>(spec.n_outputs), 1.0);
  return m;
}

void Gradients::clear() {
  for (auto& l : layers) {
    std::fill(l.w.begin(), l.w.end(), 0.0);
    std::fill(l.b.begin(), l.b.end(), 0.0);
  }
  std::fill(head_w.begin(), head_w.end(), 0.0);
  std::fill(head_b.begin(), head_b.end(), 0.0);
}

double Gradients::norm() const {
  double s = 0.0;
  for (const auto& l : layers) {
    s += kern::norm2_sq(l.w.data(), l.w.size());
    s += kern::norm2_sq(l.b.data(), l.b.size());
  }
  s += kern::norm2_sq(head_w.data(), head_w.size());
  s += kern::norm2_sq(head_b.data(), head_b.size());
  return std::sqrt(s);
}

void Gradients::scale(double a) {
  for (auto& l : layers) {
    kern::scale(a, l.w.data(), l.w.size());
    kern::scale(a, l.b.data(), l.b.size());
  }
  kern::scale(a, head_w.data(), head_w.size());
  kern::scale(a, head_b.data(), head_b.size());
}

Gradients zeros_like(const NetworkModel& m) {
  Gradients g;
  g.layers.resize(m.layers.size());
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    g.layers[l].w.assign(m.layers[l].w.size(), 0.0);
    g.layers[l].b.assign(m.layers[l].b.size(), 0.0);
  }
  g.head_w.assign(m.head_w.size(), 0.0);
  g.head_b.assign(m.head_b.size(), 0.0);
  return g;
}

void forward_norm(const NetworkModel& m, const double* win, ForwardCache& cache,
                  double* y_norm) {
  const int T = m.spec.seq_len;
  const int L = m.spec.n_layers;
  const int H = m.spec.n_hidden;
  cache.xh.resize(L);
  cache.gates.resize(L);
  cache.c.resize(L);
  cache.tanh_c.resize(L);
  cache.h.resize(L);
  for (int l = 0; l < L; ++l) {
    const int cols = m.layers[l].in_dim + H;
    cache.xh[l].resize(static_cast<std::size_t>(T) * cols);
    cache.gates[l].resize(static_cast<std::size_t>(T) * 4 * H);
    cache.c[l].resize(static_cast<std::size_t>(T) * H);
    cache.tanh_c[l].resize(static_cast<std::size_t>(T) * H);
    cache.h[l].resize(static_cast<std::size_t>(T) * H);
  }
  for (int l = 0; l < L; ++l) {
    const LstmLayer& ly = m.layers[l];
    const int in = ly.in_dim;
    const int cols = in + H;
    const double* x_src = (l == 0) ? win : cache.h[l - 1].data();
    for (int s = 0; s < T; ++s) {
      double* xh = &cache.xh[l][static_cast<std::size_t>(s) * cols];
      std::copy(x_src + static_cast<std::size_t>(s) * in,
                x_src + static_cast<std::size_t>(s + 1) * in, xh);
      if (s == 0) {
        std::fill(xh + in, xh + cols, 0.0);
      } else {
        const double* h_prev = &cache.h[l][static_cast<std::size_t>(s - 1) * H];
        std::copy(h_prev, h_prev + H, xh + in);
      }
      double* z = &cache.gates[l][static_cast<std::size_t>(s) * 4 * H];
      std::copy(ly.b.begin(), ly.b.end(), z);
      kern::matvec(ly.w.data(), static_cast<std::size_t>(4 * H), cols, xh, z,
                   true);
      for (int k = 0; k < 2 * H; ++k) z[k] = sigmoid(z[k]);
      for (int k = 2 * H; k < 3 * H; ++k) z[k] = std::tanh(z[k]);
      for (int k = 3 * H; k < 4 * H; ++k) z[k] = sigmoid(z[k]);
      const double* c_prev =
          (s == 0) ? nullptr : &cache.c[l][static_cast<std::size_t>(s - 1) * H];
      double* c = &cache.c[l][static_cast<std::size_t>(s) * H];
      double* tc = &cache.tanh_c[l][static_cast<std::size_t>(s) * H];
      double* h = &cache.h[l][static_cast<std::size_t>(s) * H];
      for (int k = 0; k < H; ++k) {
        c[k] = (c_prev ? z[H + k] * c_prev[k] : 0.0) + z[k] * z[2 * H + k];
        tc[k] = std::tanh(c[k]);
        h[k] = z[3 * H + k] * tc[k];
      }
    }
  }
  const double* h_last =
      &cache.h[L - 1][static_cast<std::size_t>(m.spec.seq_len - 1) * H];
  std::copy(m.head_b.begin(), m.head_b.end(), y_norm);
  kern::matvec(m.head_w.data(), static_cast<std::size_t>(m.spec.n_outputs), H,
               h_last, y_norm, true);
}

void backward_norm(const NetworkModel& m, const ForwardCache& cache,
                   const double* upstream, Gradients* grads, double* win_grad) {
  const int T = m.spec.seq_len;
  const int L = m.spec.n_layers;
  const int H = m.spec.n_hidden;
  const int O = m.spec.n_outputs;

  std::vector<double> dabove(static_cast<std::size_t>(T) * H, 0.0);
  const double* h_last = &cache.h[L - 1][static_cast<std::size_t>(T - 1) * H];
  kern::matvec_t(m.head_w.data(), O, H, upstream,
                 &dabove[static_cast<std::size_t>(T - 1) * H], false);
  if (grads) {
    kern::ger(grads->head_w.data(), O, H, 1.0, upstream, h_last);
    kern::axpy(1.0, upstream, grads->head_b.data(), O);
  }

  std::vector<double> dbelow;
  std::vector<double> dh(H), dc(H), dz(static_cast<std::size_t>(4) * H);
  std::vector<double> dxh;
  for (int l = L - 1; l >= 0; --l) {
    const LstmLayer& ly = m.layers[l];
    const int in = ly.in_dim;
    const int cols = in + H;
    if (l > 0) dbelow.assign(static_cast<std::size_t>(T) * H, 0.0);
    if (l == 0 && win_grad) {
      std::fill(win_grad, win_grad + static_cast<std::size_t>(T) * in, 0.0);
    }
    dxh.resize(cols);
    std::fill(dh.begin(), dh.end(), 0.0);
    std::fill(dc.begin(), dc.end(), 0.0);
    for (int s = T - 1; s >= 0; --s) {
      const double* z = &cache.gates[l][static_cast<std::size_t>(s) * 4 * H];
      const double* tc = &cache.tanh_c[l][static_cast<std::size_t>(s) * H];
      const double* c_prev =
          (s == 0) ? nullptr : &cache.c[l][static_cast<std::size_t>(s - 1) * H];
      const double* da = &dabove[static_cast<std::size_t>(s) * H];
      for (int k = 0; k < H; ++k) {
        const double dht = da[k] + dh[k];
        const double i = z[k];
        const double f = z[H + k];
        const double g = z[2 * H + k];
        const double o = z[3 * H + k];
        dz[3 * H + k] = dht * tc[k] * o * (1.0 - o);
        double dck = dc[k] + dht * o * (1.0 - tc[k] * tc[k]);
        dz[k] = dck * g * i * (1.0 - i);
        dz[2 * H + k] = dck * i * (1.0 - g * g);
        dz[H + k] = dck * (c_prev ? c_prev[k] : 0.0) * f * (1.0 - f);
        dc[k] = dck * f;
      }
      const double* xh = &cache.xh[l][static_cast<std::size_t>(s) * cols];
      if (grads) {
        kern::ger(grads->layers[l].w.data(), static_cast<std::size_t>(4 * H),
                  cols, 1.0, dz.data(), xh);
        kern::axpy(1.0, dz.data(), grads->layers[l].b.data(),
                   static_cast<std::size_t>(4 * H));
      }
      kern::matvec_t(ly.w.data(), static_cast<std::size_t>(4 * H), cols,
                     dz.data(), dxh.data(), false);
      if (l > 0) {
        kern::axpy(1.0, dxh.data(), &dbelow[static_cast<std::size_t>(s) * H],
                   in);
      } else if (win_grad) {
        kern::axpy(1.0, dxh.data(), win_grad + static_cast<std::size_t>(s) * in,
                   in);
      }
      std::copy(dxh.begin() + in, dxh.end(), dh.begin());
    }
    if (l > 0) dabove.swap(dbelow);
  }
}

std::vector<double> forward(const NetworkModel& m,
                            const std::vector<double>& window) {
  check_window(m, window);
  const int T = m.spec.seq_len;
  const int F = m.spec.n_features;
  std::vector<double> wn(window.size());
  for (int s = 0; s < T; ++s) {
    for (int j = 0; j < F; ++j) {
      wn[static_cast<std::size_t>(s) * F + j] =
          m.in_norm.to_unit(j, window[static_cast<std::size_t>(s) * F + j]);
    }
  }
  ForwardCache cache;
  std::vector<double> yn(static_cast<std::size_t>(m.spec.n_outputs));
  forward_norm(m, wn.data(), cache, yn.data());
  std::vector<double> y(yn.size());
  for (int o = 0; o < m.spec.n_outputs; ++o) {
    y[o] = m.out_norm.from_unit(o, yn[o]);
  }
  return y;
}

Gradients backward_params(const NetworkModel& m,
                          const std::vector<double>& window, double upstream) {
  check_window(m, window);
  if (m.spec.n_outputs != 1) {
    throw std::runtime_error("backward_params expects a single-output model");
  }
  const int T = m.spec.seq_len;
  const int F = m.spec.n_features;
  std::vector<double> wn(window.size());
  for (int s = 0; s < T; ++s) {
    for (int j = 0; j < F; ++j) {
      wn[static_cast<std::size_t>(s) * F + j] =
          m.in_norm.to_unit(j, window[static_cast<std::size_t>(s) * F + j]);
    }
  }
  ForwardCache cache;
  double yn = 0.0;
  forward_norm(m, wn.data(), cache, &yn);
  Gradients g = zeros_like(m);
  const double up = upstream * m.out_norm.d_from_unit(0);
  backward_norm(m, cache, &up, &g, nullptr);
  return g;
}

std::vector<double> backward_inputs(const NetworkModel& m,
                                    const std::vector<double>& window) {
  check_window(m, window);
  if (m.spec.n_outputs != 1) {
    throw std::runtime_error("backward_inputs expects a single-output model");
  }
  const int T = m.spec.seq_len;
  const int F = m.spec.n_features;
  std::vector<double> wn(window.size());
  for (int s = 0; s < T; ++s) {
    for (int j = 0; j < F; ++j) {
      wn[static_cast<std::size_t>(s) * F + j] =
          m.in_norm.to_unit(j, window[static_cast<std::size_t>(s) * F + j]);
    }
  }
  ForwardCache cache;
  double yn = 0.0;
  forward_norm(m, wn.data(), cache, &yn);
  std::vector<double> dwin(window.size());
  const double up = m.out_norm.d_from_unit(0);
  backward_norm(m, cache, &up, nullptr, dwin.data());
  for (int s = 0; s < T; ++s) {
    for (int j = 0; j < F; ++j) {
      dwin[static_cast<std::size_t>(s) * F + j] *= m.in_norm.d_to_unit(j);
    }
  }
  return dwin;
}

std::vector<double> backward_inputs_vjp(const NetworkModel& m,
                                        const std::vector<double>& window,
                                        const std::vector<double>& upstream) {
  check_window(m, window);
  const int T = m.spec.seq_len;
  const int F = m.spec.n_features;
  const int O = m.spec.n_outputs;
  if (upstream.size() != static_cast<std::size_t>(O)) {
    throw std::runtime_error("upstream length " +
                             std::to_string(upstream.size()) +
                             " does not match " + std::to_string(O) +
                             " outputs");
  }
  std::vector<double> wn(window.size());
  for (int s = 0; s < T; ++s) {
    for (int j = 0; j < F; ++j) {
      wn[static_cast<std::size_t>(s) * F + j] =
          m.in_norm.to_unit(j, window[static_cast<std::size_t>(s) * F + j]);
    }
  }
  ForwardCache cache;
  std::vector<double> yn(static_cast<std::size_t>(O));
  forward_norm(m, wn.data(), cache, yn.data());
  std::vector<double> up(static_cast<std::size_t>(O));
  for (int o = 0; o < O; ++o) up[o] = upstream[o] * m.out_norm.d_from_unit(o);
  std::vector<double> dwin(window.size());
  backward_norm(m, cache, up.data(), nullptr, dwin.data());
  for (int s = 0; s < T; ++s) {
    for (int j = 0; j < F; ++j) {
      dwin[static_cast<std::size_t>(s) * F + j] *= m.in_norm.d_to_unit(j);
    }
  }
  return dwin;
}

Normalizer fit_input_normalizer(const std::vector<Sample>& train_set,
                                int n_features) {
  Normalizer nz;
  const double inf = std::numeric_limits<double>::infinity();
  nz.lo.assign(static_cast<std::size_t>(n_features), inf);
  nz.hi.assign(static_cast<std::size_t>(n_features), -inf);
  std::vector<double> mn(static_cast<std::size_t>(n_features), inf);
  std::vector<double> mx(static_cast<std::size_t>(n_features), -inf);
  for (const auto& s : train_set) {
    for (std::size_t i = 0; i < s.window.size(); ++i) {
      const int j = static_cast<int>(i % static_cast<std::size_t>(n_features));
      mn[j] = std::min(mn[j], s.window[i]);
      mx[j] = std::max(mx[j], s.window[i]);
    }
  }
  for (int j = 0; j < n_features; ++j) nz.cover(j, mn[j], mx[j]);
  return nz;
}

Normalizer fit_output_normalizer(const std::vector<Sample>& train_set,
                                 int n_outputs) {
  Normalizer nz;
  const double inf = std::numeric_limits<double>::infinity();
  nz.lo.assign(static_cast<std::size_t>(n_outputs), inf);
  nz.hi.assign(static_cast<std::size_t>(n_outputs), -inf);
  std::vector<double> mn(static_cast<std::size_t>(n_outputs), inf);
  std::vector<double> mx(static_cast<std::size_t>(n_outputs), -inf);
  for (const auto& s : train_set) {
    for (int o = 0; o < n_outputs; ++o) {
      mn[o] = std::min(mn[o], s.target[o]);
      mx[o] = std::max(mx[o], s.target[o]);
    }
  }
  for (int o = 0; o < n_outputs; ++o) nz.cover(o, mn[o], mx[o]);
  return nz;
}

void expand_normalizer(Normalizer& nz, const std::vector<Sample>& samples,
                       bool inputs) {
  const int d = nz.dim();
  for (const auto& s : samples) {
    if (inputs) {
      for (std::size_t i = 0; i < s.window.size(); ++i) {
        const int j = static_cast<int>(i % static_cast<std::size_t>(d));
        nz.cover(j, s.window[i], s.window[i]);
      }
    } else {
      for (int o = 0; o < d; ++o) nz.cover(o, s.target[o], s.target[o]);
    }
  }
}

namespace {

void normalize_set(const NetworkModel& m, const std::vector<Sample>& set,
                   std::vector<double>& wins, std::vector<double>& tgts) {
  const int T = m.spec.seq_len;
  const int F = m.spec.n_features;
  const int O = m.spec.n_outputs;
  const std::size_t W = static_cast<std::size_t>(T) * F;
  wins.resize(set.size() * W);
  tgts.resize(set.size() * static_cast<std::size_t>(O));
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (set[i].window.size() != W ||
        set[i].target.size() != static_cast<std::size_t>(O)) {
      throw std::runtime_error("sample shape mismatch in training set");
    }
    for (std::size_t k = 0; k < W; ++k) {
      const int j = static_cast<int>(k % static_cast<std::size_t>(F));
      wins[i * W + k] = m.in_norm.to_unit(j, set[i].window[k]);
    }
    for (int o = 0; o < O; ++o) {
      tgts[i * O + o] = m.out_norm.to_unit(o, set[i].target[o]);
    }
  }
}

}  // namespace

TrainLog train(NetworkModel& m, const std::vector<Sample>& train_set,
               const std::vector<Sample>& val_set, const TrainConfig& cfg) {
  if (train_set.empty()) throw std::runtime_error("train: empty training set");
  const int O = m.spec.n_outputs;
  const std::size_t W =
      static_cast<std::size_t>(m.spec.seq_len) * m.spec.n_features;

  std::vector<double> twin, ttgt, vwin, vtgt;
  normalize_set(m, train_set, twin, ttgt);
  normalize_set(m, val_set, vwin, vtgt);

  ForwardCache cache;
  Gradients grads = zeros_like(m);
  std::vector<double> y(static_cast<std::size_t>(O));
  std::vector<double> up(static_cast<std::size_t>(O));

  TrainLog log;
  log.train_loss.reserve(static_cast<std::size_t>(cfg.epochs));
  log.val_loss.reserve(static_cast<std::size_t>(cfg.epochs));
  std::vector<LstmLayer> best_layers = m.layers;
  std::vector<double> best_head_w = m.head_w;
  std::vector<double> best_head_b = m.head_b;
  double best_val = std::numeric_limits<double>::infinity();

  const int drop_at =
      static_cast<int>(std::floor(cfg.lr_drop_epoch_fraction * cfg.epochs));
  const std::size_t n = train_set.size();
  const double denom = static_cast<double>(n) * O;

  for (int e = 0; e < cfg.epochs; ++e) {
    const double lr = (e >= drop_at) ? cfg.lr / cfg.lr_drop_factor : cfg.lr;
    grads.clear();
    double mse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      forward_norm(m, &twin[i * W], cache, y.data());
      for (int o = 0; o < O; ++o) {
        const double d = y[o] - ttgt[i * O + o];
        mse += d * d;
        up[o] = 2.0 * d / denom;
      }
      backward_norm(m, cache, up.data(), &grads, nullptr);
    }
    mse /= denom;
    if (!std::isfinite(mse)) {
      throw std::runtime_error("training diverged: non-finite loss at epoch " +
                               std::to_string(e));
    }
    const double gn = grads.norm();
    if (gn > cfg.grad_clip) grads.scale(cfg.grad_clip / gn);
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
      kern::axpy(-lr, grads.layers[l].w.data(), m.layers[l].w.data(),
                 m.layers[l].w.size());
      kern::axpy(-lr, grads.layers[l].b.data(), m.layers[l].b.data(),
                 m.layers[l].b.size());
    }
    kern::axpy(-lr, grads.head_w.data(), m.head_w.data(), m.head_w.size());
    kern::axpy(-lr, grads.head_b.data(), m.head_b.data(), m.head_b.size());

    double vloss = mse;
    if (!val_set.empty()) {
      vloss = 0.0;
      for (std::size_t i = 0; i < val_set.size(); ++i) {
        forward_norm(m, &vwin[i * W], cache, y.data());
        for (int o = 0; o < O; ++o) {
          const double d = y[o] - vtgt[i * O + o];
          vloss += d * d;
        }
      }
      vloss /= static_cast<double>(val_set.size()) * O;
      if (!std::isfinite(vloss)) {
        throw std::runtime_error(
            "training diverged: non-finite validation loss at epoch " +
            std::to_string(e));
      }
    }
    log.train_loss.push_back(mse);
    log.val_loss.push_back(vloss);
    if (vloss < best_val) {
      best_val = vloss;
      log.best_epoch = e;
      best_layers = m.layers;
      best_head_w = m.head_w;
      best_head_b = m.head_b;
    }
  }
  m.layers = std::move(best_layers);
  m.head_w = std::move(best_head_w);
  m.head_b = std::move(best_head_b);
  return log;
}

}  // namespace hvacsched
