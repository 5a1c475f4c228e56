#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "hvacsched/netcore.hpp"
#include "hvacsched/rng.hpp"

using namespace hvacsched;

namespace {

// Flat parameter view over a model, layer weights first, head last.
std::size_t flat_count(const NetworkModel& m) { return m.n_params(); }

double* flat_at(NetworkModel& m, std::size_t k) {
  for (auto& l : m.layers) {
    if (k < l.w.size()) return &l.w[k];
    k -= l.w.size();
    if (k < l.b.size()) return &l.b[k];
    k -= l.b.size();
  }
  if (k < m.head_w.size()) return &m.head_w[k];
  k -= m.head_w.size();
  return &m.head_b[k];
}

const double* flat_grad_at(const Gradients& g, std::size_t k) {
  for (const auto& l : g.layers) {
    if (k < l.w.size()) return &l.w[k];
    k -= l.w.size();
    if (k < l.b.size()) return &l.b[k];
    k -= l.b.size();
  }
  if (k < g.head_w.size()) return &g.head_w[k];
  k -= g.head_w.size();
  return &g.head_b[k];
}

bool grad_close(double fd, double an) {
  const double denom = std::max(std::abs(fd), std::abs(an));
  if (denom < 1e-8) return std::abs(fd - an) < 1e-8;
  return std::abs(fd - an) / denom < 1e-4;
}

NetworkModel small_net() {
  NetworkSpec spec;
  spec.n_features = 3;
  spec.n_layers = 2;
  spec.n_hidden = 4;
  spec.seq_len = 5;
  NetworkModel m = make_network(spec, 42);
  m.in_norm.lo = {-2.0, 0.0, 10.0};
  m.in_norm.hi = {3.0, 50.0, 35.0};
  m.out_norm.lo = {0.0};
  m.out_norm.hi = {50.0};
  return m;
}

std::vector<double> random_window(const NetworkModel& m, Rng& rng) {
  std::vector<double> w(static_cast<std::size_t>(m.spec.seq_len) *
                        m.spec.n_features);
  for (int s = 0; s < m.spec.seq_len; ++s) {
    for (int j = 0; j < m.spec.n_features; ++j) {
      w[static_cast<std::size_t>(s) * m.spec.n_features + j] =
          rng.uniform(m.in_norm.lo[j], m.in_norm.hi[j]);
    }
  }
  return w;
}

}  // namespace

TEST_CASE("parameter gradients match central finite differences") {
  NetworkModel m = small_net();
  Rng rng(301);
  const std::vector<double> window = random_window(m, rng);
  const Gradients g = backward_params(m, window, 1.0);

  const std::size_t n = flat_count(m);
  REQUIRE(n >= 100);
  std::size_t checked = 0;
  for (std::size_t k = 0; k < n; ++k) {
    double* p = flat_at(m, k);
    const double orig = *p;
    const double h = 1e-5 * std::max(1.0, std::abs(orig));
    *p = orig + h;
    const double yp = forward(m, window)[0];
    *p = orig - h;
    const double ym = forward(m, window)[0];
    *p = orig;
    const double fd = (yp - ym) / (2.0 * h);
    const double an = *flat_grad_at(g, k);
    INFO("param ", k, " fd=", fd, " an=", an);
    CHECK(grad_close(fd, an));
    ++checked;
  }
  CHECK(checked == n);
}

TEST_CASE("input gradients match central finite differences") {
  NetworkModel m = small_net();
  Rng rng(302);
  for (int trial = 0; trial < 4; ++trial) {
    std::vector<double> window = random_window(m, rng);
    const std::vector<double> g = backward_inputs(m, window);
    REQUIRE(g.size() == window.size());
    for (std::size_t k = 0; k < window.size(); ++k) {
      const double orig = window[k];
      const double h = 1e-5 * std::max(1.0, std::abs(orig));
      window[k] = orig + h;
      const double yp = forward(m, window)[0];
      window[k] = orig - h;
      const double ym = forward(m, window)[0];
      window[k] = orig;
      const double fd = (yp - ym) / (2.0 * h);
      INFO("trial ", trial, " input ", k, " fd=", fd, " an=", g[k]);
      CHECK(grad_close(fd, g[k]));
    }
  }
}

TEST_CASE("multi-output gradients match finite differences") {
  NetworkSpec spec;
  spec.n_features = 2;
  spec.n_layers = 1;
  spec.n_hidden = 3;
  spec.seq_len = 4;
  spec.n_outputs = 2;
  NetworkModel m = make_network(spec, 9);
  Rng rng(303);
  std::vector<double> win(static_cast<std::size_t>(spec.seq_len) *
                          spec.n_features);
  for (auto& v : win) v = rng.uniform(-1.0, 1.0);

  const double up[2] = {0.7, -1.3};
  ForwardCache cache;
  double y[2];
  forward_norm(m, win.data(), cache, y);
  Gradients g = zeros_like(m);
  std::vector<double> wg(win.size());
  backward_norm(m, cache, up, &g, wg.data());

  auto combo = [&](const double* w) {
    ForwardCache c2;
    double yy[2];
    forward_norm(m, w, c2, yy);
    return up[0] * yy[0] + up[1] * yy[1];
  };
  for (std::size_t k = 0; k < win.size(); ++k) {
    const double orig = win[k];
    const double h = 1e-5;
    win[k] = orig + h;
    const double yp = combo(win.data());
    win[k] = orig - h;
    const double ym = combo(win.data());
    win[k] = orig;
    const double fd = (yp - ym) / (2.0 * h);
    INFO("input ", k);
    CHECK(grad_close(fd, wg[k]));
  }
  const std::size_t n = flat_count(m);
  for (std::size_t k = 0; k < n; ++k) {
    double* p = flat_at(m, k);
    const double orig = *p;
    const double h = 1e-5 * std::max(1.0, std::abs(orig));
    *p = orig + h;
    const double yp = combo(win.data());
    *p = orig - h;
    const double ym = combo(win.data());
    *p = orig;
    const double fd = (yp - ym) / (2.0 * h);
    INFO("param ", k);
    CHECK(grad_close(fd, *flat_grad_at(g, k)));
  }
}

TEST_CASE("zeroed parameters output the center of the output range") {
  NetworkModel m = small_net();
  for (auto& l : m.layers) {
    std::fill(l.w.begin(), l.w.end(), 0.0);
    std::fill(l.b.begin(), l.b.end(), 0.0);
  }
  std::fill(m.head_w.begin(), m.head_w.end(), 0.0);
  std::fill(m.head_b.begin(), m.head_b.end(), 0.0);
  Rng rng(304);
  const auto y = forward(m, random_window(m, rng));
  CHECK(std::abs(y[0] - 25.0) < 1e-15);
}

TEST_CASE("zero upstream produces exactly zero gradients") {
  NetworkModel m = small_net();
  Rng rng(305);
  const Gradients g = backward_params(m, random_window(m, rng), 0.0);
  for (const auto& l : g.layers) {
    for (double v : l.w) CHECK(v == 0.0);
    for (double v : l.b) CHECK(v == 0.0);
  }
  for (double v : g.head_w) CHECK(v == 0.0);
  for (double v : g.head_b) CHECK(v == 0.0);
}

TEST_CASE("output is bounded by the head weights") {
  Rng rng(306);
  for (int trial = 0; trial < 20; ++trial) {
    NetworkSpec spec;
    spec.n_features = 1 + static_cast<int>(rng.below(4));
    spec.n_layers = 1 + static_cast<int>(rng.below(2));
    spec.n_hidden = 2 + static_cast<int>(rng.below(6));
    spec.seq_len = 1 + static_cast<int>(rng.below(24));
    NetworkModel m = make_network(spec, rng.bits());
    double bound = std::abs(m.head_b[0]);
    for (double w : m.head_w) bound += std::abs(w);
    std::vector<double> win(static_cast<std::size_t>(spec.seq_len) *
                            spec.n_features);
    for (auto& v : win) v = rng.uniform(-40.0, 40.0);
    ForwardCache cache;
    double y = 0.0;
    forward_norm(m, win.data(), cache, &y);
    CHECK(std::abs(y) <= bound + 1e-12);
  }
}

TEST_CASE("tiny window perturbations move the output proportionally") {
  NetworkModel m = small_net();
  Rng rng(311);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> window = random_window(m, rng);
    const double y0 = forward(m, window)[0];
    const std::size_t k = rng.below(window.size());
    window[k] += 1e-8;
    const double y1 = forward(m, window)[0];
    CHECK(std::abs(y1 - y0) < 1e-4);
  }
}

TEST_CASE("normalizer maps bounds to the unit interval and back") {
  Normalizer nz;
  nz.lo = {-5.0, 0.0, 21.0};
  nz.hi = {5.0, 50.0, 27.0};
  Rng rng(307);
  for (int j = 0; j < 3; ++j) {
    CHECK(nz.to_unit(j, nz.lo[j]) == -1.0);
    CHECK(nz.to_unit(j, nz.hi[j]) == 1.0);
    for (int t = 0; t < 50; ++t) {
      const double x = rng.uniform(nz.lo[j], nz.hi[j]);
      CHECK(std::abs(nz.from_unit(j, nz.to_unit(j, x)) - x) < 1e-12);
    }
    CHECK(std::abs(nz.d_to_unit(j) * nz.d_from_unit(j) - 1.0) < 1e-15);
  }
}

TEST_CASE("normalizer fitting covers the data and widens flat features") {
  std::vector<Sample> set;
  for (int i = 0; i < 10; ++i) {
    Sample s;
    s.window = {static_cast<double>(i), 7.0, static_cast<double>(-i), 7.0};
    s.target = {3.0};
    set.push_back(s);
  }
  const Normalizer in = fit_input_normalizer(set, 2);
  CHECK(in.lo[0] == -9.0);
  CHECK(in.hi[0] == 9.0);
  CHECK(in.lo[1] < 7.0);
  CHECK(in.hi[1] > 7.0);
  CHECK(in.hi[1] - in.lo[1] >= 9.9e-7);

  const Normalizer out = fit_output_normalizer(set, 1);
  CHECK(out.hi[0] - out.lo[0] >= 9.9e-7);
  CHECK(std::abs(out.from_unit(0, out.to_unit(0, 3.0)) - 3.0) < 1e-12);
}

TEST_CASE("expanding a normalizer never shrinks its bounds") {
  std::vector<Sample> first;
  Sample a;
  a.window = {0.0, 1.0, 2.0, 3.0};
  a.target = {1.0};
  first.push_back(a);
  Normalizer nz = fit_input_normalizer(first, 2);
  const auto lo0 = nz.lo;
  const auto hi0 = nz.hi;

  std::vector<Sample> second;
  Sample b;
  b.window = {1.0, -8.0, 1.5, 12.0};
  b.target = {2.0};
  second.push_back(b);
  expand_normalizer(nz, second, true);
  for (int j = 0; j < 2; ++j) {
    CHECK(nz.lo[j] <= lo0[j]);
    CHECK(nz.hi[j] >= hi0[j]);
  }
  CHECK(nz.lo[1] == -8.0);
  CHECK(nz.hi[1] == 12.0);

  expand_normalizer(nz, first, true);
  CHECK(nz.lo[1] == -8.0);
  CHECK(nz.hi[1] == 12.0);
}

TEST_CASE("seeded construction and training are reproducible") {
  NetworkSpec spec;
  spec.n_features = 2;
  spec.n_layers = 1;
  spec.n_hidden = 4;
  spec.seq_len = 6;
  NetworkModel a = make_network(spec, 11);
  NetworkModel b = make_network(spec, 11);
  CHECK(a.layers[0].w == b.layers[0].w);
  CHECK(a.layers[0].b == b.layers[0].b);
  CHECK(a.head_w == b.head_w);
  NetworkModel c = make_network(spec, 12);
  CHECK(a.layers[0].w != c.layers[0].w);

  Rng rng(308);
  std::vector<Sample> set;
  for (int i = 0; i < 12; ++i) {
    Sample s;
    s.window.resize(12);
    for (auto& v : s.window) v = rng.uniform(-1.0, 1.0);
    s.target = {s.window[10] - 0.5 * s.window[3]};
    set.push_back(s);
  }
  TrainConfig cfg;
  cfg.epochs = 40;
  cfg.lr = 1e-2;
  auto run = [&](NetworkModel& m) {
    m.in_norm = fit_input_normalizer(set, 2);
    m.out_norm = fit_output_normalizer(set, 1);
    return train(m, set, {}, cfg);
  };
  TrainLog la = run(a);
  TrainLog lb = run(b);
  CHECK(la.train_loss == lb.train_loss);
  CHECK(a.layers[0].w == b.layers[0].w);
  CHECK(a.head_w == b.head_w);
  CHECK(a.head_b == b.head_b);
}

TEST_CASE("training fits a constant target") {
  NetworkSpec spec;
  spec.n_features = 1;
  spec.n_layers = 1;
  spec.n_hidden = 4;
  spec.seq_len = 6;
  NetworkModel m = make_network(spec, 21);
  Rng rng(309);
  std::vector<Sample> set;
  for (int i = 0; i < 8; ++i) {
    Sample s;
    s.window.resize(6);
    for (auto& v : s.window) v = rng.uniform(-3.0, 3.0);
    s.target = {5.0};
    set.push_back(s);
  }
  m.in_norm = fit_input_normalizer(set, 1);
  m.out_norm = fit_output_normalizer(set, 1);
  TrainConfig cfg;
  cfg.epochs = 300;
  cfg.lr = 2e-2;
  const TrainLog log = train(m, set, {}, cfg);
  REQUIRE(log.train_loss.size() == 300);
  CHECK(log.train_loss.back() < 1e-3);
  CHECK(log.train_loss.back() < log.train_loss.front());
  for (double v : log.train_loss) CHECK(std::isfinite(v));
  CHECK(std::abs(forward(m, set[0].window)[0] - 5.0) < 1e-3);
}

TEST_CASE("training recovers a teacher network") {
  NetworkSpec spec;
  spec.n_features = 2;
  spec.n_layers = 1;
  spec.n_hidden = 4;
  spec.seq_len = 6;
  NetworkModel teacher = make_network(spec, 7);
  Rng rng(310);
  std::vector<Sample> train_set, val_set, test_set;
  auto draw = [&]() {
    Sample s;
    s.window.resize(12);
    for (auto& v : s.window) v = rng.uniform(-1.0, 1.0);
    s.target = forward(teacher, s.window);
    return s;
  };
  for (int i = 0; i < 64; ++i) train_set.push_back(draw());
  for (int i = 0; i < 16; ++i) val_set.push_back(draw());
  for (int i = 0; i < 20; ++i) test_set.push_back(draw());

  NetworkSpec student_spec = spec;
  student_spec.n_hidden = 6;
  NetworkModel student = make_network(student_spec, 99);
  student.in_norm = fit_input_normalizer(train_set, 2);
  student.out_norm = fit_output_normalizer(train_set, 1);
  TrainConfig cfg;
  cfg.epochs = 2000;
  cfg.lr = 3e-2;
  const TrainLog log = train(student, train_set, val_set, cfg);
  CHECK(log.best_epoch >= 0);
  CHECK(log.val_loss[static_cast<std::size_t>(log.best_epoch)] ==
        *std::min_element(log.val_loss.begin(), log.val_loss.end()));
  CHECK(log.val_loss[static_cast<std::size_t>(log.best_epoch)] < 5e-2);

  double se = 0.0, var = 0.0, mean = 0.0;
  for (const auto& s : test_set) mean += s.target[0];
  mean /= static_cast<double>(test_set.size());
  for (const auto& s : test_set) {
    const double d = forward(student, s.window)[0] - s.target[0];
    se += d * d;
    var += (s.target[0] - mean) * (s.target[0] - mean);
  }
  CHECK(se < 0.25 * var);
}

TEST_CASE("training rejects non-finite targets with the failing epoch") {
  NetworkSpec spec;
  spec.n_features = 1;
  spec.n_layers = 1;
  spec.n_hidden = 2;
  spec.seq_len = 3;
  NetworkModel m = make_network(spec, 5);
  std::vector<Sample> set(2);
  set[0].window = {0.0, 0.5, 1.0};
  set[0].target = {1.0};
  set[1].window = {1.0, 0.5, 0.0};
  set[1].target = {std::numeric_limits<double>::quiet_NaN()};
  m.in_norm = fit_input_normalizer(set, 1);
  m.out_norm.lo = {0.0};
  m.out_norm.hi = {2.0};
  TrainConfig cfg;
  cfg.epochs = 10;
  CHECK_THROWS_WITH_AS(train(m, set, {}, cfg),
                       doctest::Contains("epoch 0"), std::runtime_error);
}

TEST_CASE("window shape mismatches are rejected with both dimensions") {
  NetworkModel m = small_net();
  std::vector<double> bad(7, 0.0);
  CHECK_THROWS_WITH_AS(forward(m, bad), doctest::Contains("5x3"),
                       std::runtime_error);
  CHECK_THROWS_AS(backward_params(m, bad, 1.0), std::runtime_error);
  CHECK_THROWS_AS(backward_inputs(m, bad), std::runtime_error);
}

TEST_CASE("invalid network specs are rejected") {
  NetworkSpec spec;
  spec.n_hidden = 0;
  CHECK_THROWS_AS(make_network(spec, 1), std::runtime_error);
  spec.n_hidden = 4;
  spec.seq_len = 0;
  CHECK_THROWS_AS(make_network(spec, 1), std::runtime_error);
}

TEST_CASE("gradient vector norm and scaling behave like one flat vector") {
  NetworkModel m = small_net();
  Gradients g = zeros_like(m);
  g.layers[0].w[0] = 3.0;
  g.layers[1].b[2] = 4.0;
  CHECK(std::abs(g.norm() - 5.0) < 1e-15);
  g.scale(0.5);
  CHECK(g.layers[0].w[0] == 1.5);
  CHECK(g.layers[1].b[2] == 2.0);
  g.clear();
  CHECK(g.norm() == 0.0);
}

TEST_CASE("forward output is pinned for a fixed seed") {
  NetworkModel m = small_net();
  std::vector<double> window(15);
  for (std::size_t k = 0; k < window.size(); ++k) {
    const int j = static_cast<int>(k % 3);
    const double t = static_cast<double>(k) / 14.0;
    window[k] = m.in_norm.lo[j] + t * (m.in_norm.hi[j] - m.in_norm.lo[j]);
  }
  const double y = forward(m, window)[0];
  CHECK(std::abs(y - 25.263880412482649) < 1e-12);
}
