#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace diffmia {

enum class Activation { SiLU, ReLU };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& s);

// Sinusoidal embedding of the normalized time index t/T. Frequencies form a
// geometric ladder from 1 down to 1/10000; the normalized time is rescaled to
// a nominal 1000-step axis so the same noise level embeds identically across
// schedules of different length.
struct TimeEmbedding {
  int dim = 0;                       // even
  std::vector<double> frequencies;   // dim/2 entries, 1 .. 1e-4

  static TimeEmbedding make(int dim);
  std::vector<double> embed(int t, int total_steps) const;
};

// Dense feed-forward denoiser. Parameters are stored in 32-bit floats; all
// arithmetic promotes to double so gradient checks and loss accumulation
// keep full precision.
struct DenseNet {
  int data_dim = 0;
  TimeEmbedding time_embed;
  Activation activation = Activation::SiLU;
  std::vector<int> layer_dims;              // input, hidden..., output
  std::vector<std::vector<float>> weights;  // per layer, row-major [out x in]
  std::vector<std::vector<float>> biases;   // per layer [out]

  int input_dim() const { return layer_dims.front(); }
  int output_dim() const { return layer_dims.back(); }
  size_t layer_count() const { return weights.size(); }
};

// He-uniform hidden layers, zero-initialized final layer (so the initial
// prediction is the zero vector), zero biases.
DenseNet make_dense_net(int data_dim, const std::vector<int>& hidden_dims,
                        int time_embed_dim, Activation activation, uint64_t seed);

// Parameter-shaped buffers: gradients, Adam moments.
struct ParamGrads {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  static ParamGrads zeros_like(const DenseNet& net);
  void set_zero();
  void axpy(double a, const ParamGrads& other);  // this += a * other
};

// Cached activations for one forward pass over a pre-built input vector.
struct ForwardTrace {
  std::vector<double> input;
  std::vector<std::vector<double>> pre;   // pre-activation per layer
  std::vector<std::vector<double>> post;  // post-activation per layer (last == output)
};

void forward_with_trace(const DenseNet& net, const std::vector<double>& input, ForwardTrace& trace);

// Accumulates d<upstream, output>/dparams into grads given a prior trace.
void backward_from_trace(const DenseNet& net, const ForwardTrace& trace,
                         const std::vector<double>& upstream, ParamGrads& grads);

// Network output for data vector x at step t of a T-step process.
std::vector<double> net_forward(const DenseNet& net, const std::vector<double>& x,
                                int t, int total_steps);

// Exact reverse-mode gradients of <upstream, net_forward(net, x, t, T)>.
ParamGrads net_gradient(const DenseNet& net, const std::vector<double>& x,
                        int t, int total_steps, const std::vector<double>& upstream);

// Bias-corrected adaptive-moment optimizer state.
struct AdamState {
  int64_t step = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  ParamGrads m;
  ParamGrads v;

  static AdamState make(const DenseNet& net, double learning_rate);
};

// One in-place update. Non-finite gradients reject the update.
void adam_step(AdamState& state, DenseNet& net, const ParamGrads& grads);

}  // namespace diffmia
