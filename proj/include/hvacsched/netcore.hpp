#pragma once

#include <cstdint>
#include <vector>

// Recurrent-network engine: stacked LSTM layers, min-max normalizers to
// [-1, 1], a linear head, reverse-mode gradients w.r.t. parameters and
// inputs, and a full-batch gradient-descent trainer.

namespace hvacsched {

struct NetworkSpec {
  int n_features = 1;
  int n_layers = 1;
  int n_hidden = 8;
  int seq_len = 24;
  int n_outputs = 1;
  void validate() const;
};

struct Normalizer {
  std::vector<double> lo, hi;

  int dim() const { return static_cast<int>(lo.size()); }
  double to_unit(int j, double x) const {
    return 2.0 * (x - lo[j]) / (hi[j] - lo[j]) - 1.0;
  }
  double from_unit(int j, double u) const {
    return lo[j] + (u + 1.0) * 0.5 * (hi[j] - lo[j]);
  }
  double d_to_unit(int j) const { return 2.0 / (hi[j] - lo[j]); }
  double d_from_unit(int j) const { return (hi[j] - lo[j]) * 0.5; }

  // Widen to cover [mn, mx] for feature j; degenerate spans get eps.
  void cover(int j, double mn, double mx, double eps = 1e-6);
};

// Gate weights fused as rows [input; forget; candidate; output], each H
// rows, over the concatenated [x; h_prev] column space.
struct LstmLayer {
  int in_dim = 0;
  int hidden = 0;
  std::vector<double> w;  // 4H x (in_dim + hidden), row-major
  std::vector<double> b;  // 4H
};

struct NetworkModel {
  NetworkSpec spec;
  std::vector<LstmLayer> layers;
  std::vector<double> head_w;  // n_outputs x hidden
  std::vector<double> head_b;  // n_outputs
  Normalizer in_norm;          // n_features
  Normalizer out_norm;         // n_outputs

  std::size_t n_params() const;
};

NetworkModel make_network(const NetworkSpec& spec, std::uint64_t seed);

struct LayerGrads {
  std::vector<double> w, b;
};

struct Gradients {
  std::vector<LayerGrads> layers;
  std::vector<double> head_w, head_b;

  void clear();
  double norm() const;
  void scale(double a);
};

Gradients zeros_like(const NetworkModel& m);

// Per-window scratch reused across calls; grows on demand.
struct ForwardCache {
  std::vector<std::vector<double>> xh;      // per layer: T x (in+H)
  std::vector<std::vector<double>> gates;   // per layer: T x 4H
  std::vector<std::vector<double>> c;       // per layer: T x H
  std::vector<std::vector<double>> tanh_c;  // per layer: T x H
  std::vector<std::vector<double>> h;       // per layer: T x H
  std::vector<double> scratch;
};

// Normalized-space passes (window and outputs in [-1, 1] units).
void forward_norm(const NetworkModel& m, const double* win_norm,
                  ForwardCache& cache, double* y_norm);
// upstream: d(loss)/d(y_norm), length n_outputs. Accumulates into grads
// when given; writes d(loss)/d(win_norm) when win_grad given.
void backward_norm(const NetworkModel& m, const ForwardCache& cache,
                   const double* upstream, Gradients* grads,
                   double* win_grad);

// Raw-space wrappers (window of seq_len*n_features raw feature values).
std::vector<double> forward(const NetworkModel& m,
                            const std::vector<double>& window);
Gradients backward_params(const NetworkModel& m,
                          const std::vector<double>& window, double upstream);
std::vector<double> backward_inputs(const NetworkModel& m,
                                    const std::vector<double>& window);
// General input VJP: upstream is d(loss)/d(y_raw) per output; returns
// d(loss)/d(window) in raw units. Works for any output count.
std::vector<double> backward_inputs_vjp(const NetworkModel& m,
                                        const std::vector<double>& window,
                                        const std::vector<double>& upstream);

struct Sample {
  std::vector<double> window;  // seq_len * n_features, raw
  std::vector<double> target;  // n_outputs, raw
};

// Min/max over every step of every training window / target.
Normalizer fit_input_normalizer(const std::vector<Sample>& train_set,
                                int n_features);
Normalizer fit_output_normalizer(const std::vector<Sample>& train_set,
                                 int n_outputs);
// Expand-only refit: existing bounds never shrink.
void expand_normalizer(Normalizer& nz, const std::vector<Sample>& samples,
                       bool inputs);

struct TrainConfig {
  int epochs = 5000;
  double lr = 4e-3;
  double lr_drop_epoch_fraction = 2.0 / 3.0;
  double lr_drop_factor = 10.0;
  double grad_clip = 5.0;
  std::uint64_t seed = 1;
};

struct TrainLog {
  std::vector<double> train_loss;  // normalized-space MSE per epoch
  std::vector<double> val_loss;
  int best_epoch = -1;
};

// Full-batch GD on normalized MSE. Normalizers must be fitted already.
// Keeps the best-validation parameters (training loss stands in when the
// validation set is empty). Throws on non-finite loss.
TrainLog train(NetworkModel& m, const std::vector<Sample>& train_set,
               const std::vector<Sample>& val_set, const TrainConfig& cfg);

}  // namespace hvacsched
