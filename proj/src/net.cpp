#include "diffmia/net.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "diffmia/rng.hpp"

namespace diffmia {

const char* to_string(Activation a) { return a == Activation::SiLU ? "silu" : "relu"; }

Activation activation_from_string(const std::string& s) {
  if (s == "silu") return Activation::SiLU;
  if (s == "relu") return Activation::ReLU;
  throw std::invalid_argument("unknown activation: " + s);
}

TimeEmbedding TimeEmbedding::make(int dim) {
  if (dim < 2 || dim % 2 != 0) {
    throw std::invalid_argument("TimeEmbedding: dim must be a positive even integer");
  }
  TimeEmbedding emb;
  emb.dim = dim;
  const int half = dim / 2;
  emb.frequencies.resize(static_cast<size_t>(half));
  for (int i = 0; i < half; ++i) {
    emb.frequencies[static_cast<size_t>(i)] =
        half == 1 ? 1.0 : std::pow(1e-4, static_cast<double>(i) / (half - 1));
  }
  return emb;
}

std::vector<double> TimeEmbedding::embed(int t, int total_steps) const {
  std::vector<double> out(static_cast<size_t>(dim));
  const double u = 1000.0 * static_cast<double>(t) / static_cast<double>(total_steps);
  for (size_t i = 0; i < frequencies.size(); ++i) {
    const double angle = frequencies[i] * u;
    out[2 * i] = std::sin(angle);
    out[2 * i + 1] = std::cos(angle);
  }
  return out;
}

DenseNet make_dense_net(int data_dim, const std::vector<int>& hidden_dims,
                        int time_embed_dim, Activation activation, uint64_t seed) {
  if (data_dim < 1) throw std::invalid_argument("make_dense_net: data_dim must be positive");
  for (int h : hidden_dims) {
    if (h < 1) throw std::invalid_argument("make_dense_net: hidden dims must be positive");
  }
  DenseNet net;
  net.data_dim = data_dim;
  net.time_embed = TimeEmbedding::make(time_embed_dim);
  net.activation = activation;
  net.layer_dims.push_back(data_dim + time_embed_dim);
  for (int h : hidden_dims) net.layer_dims.push_back(h);
  net.layer_dims.push_back(data_dim);

  Rng rng(mix_seed({seed, 0x1A17u}));
  const size_t layers = net.layer_dims.size() - 1;
  net.weights.resize(layers);
  net.biases.resize(layers);
  for (size_t l = 0; l < layers; ++l) {
    const int fan_in = net.layer_dims[l];
    const int fan_out = net.layer_dims[l + 1];
    net.weights[l].assign(static_cast<size_t>(fan_in) * fan_out, 0.0f);
    net.biases[l].assign(static_cast<size_t>(fan_out), 0.0f);
    if (l + 1 < layers) {
      const double limit = std::sqrt(6.0 / fan_in);
      for (auto& w : net.weights[l]) {
        w = static_cast<float>((2.0 * rng.uniform() - 1.0) * limit);
      }
    }
    // Final layer stays zero: the untrained net predicts the zero vector.
  }
  return net;
}

ParamGrads ParamGrads::zeros_like(const DenseNet& net) {
  ParamGrads g;
  g.weights.resize(net.layer_count());
  g.biases.resize(net.layer_count());
  for (size_t l = 0; l < net.layer_count(); ++l) {
    g.weights[l].assign(net.weights[l].size(), 0.0);
    g.biases[l].assign(net.biases[l].size(), 0.0);
  }
  return g;
}

void ParamGrads::set_zero() {
  for (auto& w : weights) std::fill(w.begin(), w.end(), 0.0);
  for (auto& b : biases) std::fill(b.begin(), b.end(), 0.0);
}

void ParamGrads::axpy(double a, const ParamGrads& other) {
  for (size_t l = 0; l < weights.size(); ++l) {
    for (size_t i = 0; i < weights[l].size(); ++i) weights[l][i] += a * other.weights[l][i];
    for (size_t i = 0; i < biases[l].size(); ++i) biases[l][i] += a * other.biases[l][i];
  }
}

namespace {

inline double activate(Activation a, double x) {
  if (a == Activation::ReLU) return x > 0.0 ? x : 0.0;
  const double s = 1.0 / (1.0 + std::exp(-x));
  return x * s;
}

inline double activate_grad(Activation a, double x) {
  if (a == Activation::ReLU) return x > 0.0 ? 1.0 : 0.0;
  const double s = 1.0 / (1.0 + std::exp(-x));
  return s * (1.0 + x * (1.0 - s));
}

}  // namespace

void forward_with_trace(const DenseNet& net, const std::vector<double>& input, ForwardTrace& trace) {
  if (static_cast<int>(input.size()) != net.input_dim()) {
    throw std::invalid_argument("forward_with_trace: input dimension mismatch");
  }
  const size_t layers = net.layer_count();
  trace.input = input;
  trace.pre.resize(layers);
  trace.post.resize(layers);
  const std::vector<double>* current = &trace.input;
  for (size_t l = 0; l < layers; ++l) {
    const int rows = net.layer_dims[l + 1];
    const int cols = net.layer_dims[l];
    auto& pre = trace.pre[l];
    pre.assign(static_cast<size_t>(rows), 0.0);
    const std::vector<float>& w = net.weights[l];
    for (int r = 0; r < rows; ++r) {
      double acc = net.biases[l][static_cast<size_t>(r)];
      const float* row = &w[static_cast<size_t>(r) * cols];
      for (int c = 0; c < cols; ++c) {
        acc += static_cast<double>(row[c]) * (*current)[static_cast<size_t>(c)];
      }
      pre[static_cast<size_t>(r)] = acc;
    }
    auto& post = trace.post[l];
    post.resize(static_cast<size_t>(rows));
    const bool is_output = (l + 1 == layers);
    for (int r = 0; r < rows; ++r) {
      post[static_cast<size_t>(r)] =
          is_output ? pre[static_cast<size_t>(r)] : activate(net.activation, pre[static_cast<size_t>(r)]);
    }
    current = &post;
  }
}

void backward_from_trace(const DenseNet& net, const ForwardTrace& trace,
                         const std::vector<double>& upstream, ParamGrads& grads) {
  const size_t layers = net.layer_count();
  std::vector<double> delta = upstream;  // d<upstream, out>/d(pre of output layer)
  for (size_t li = layers; li-- > 0;) {
    const int rows = net.layer_dims[li + 1];
    const int cols = net.layer_dims[li];
    const std::vector<double>& below = li == 0 ? trace.input : trace.post[li - 1];
    for (int r = 0; r < rows; ++r) {
      const double d = delta[static_cast<size_t>(r)];
      grads.biases[li][static_cast<size_t>(r)] += d;
      double* grow = &grads.weights[li][static_cast<size_t>(r) * cols];
      for (int c = 0; c < cols; ++c) {
        grow[c] += d * below[static_cast<size_t>(c)];
      }
    }
    if (li == 0) break;
    std::vector<double> next(static_cast<size_t>(cols), 0.0);
    const std::vector<float>& w = net.weights[li];
    for (int r = 0; r < rows; ++r) {
      const double d = delta[static_cast<size_t>(r)];
      const float* row = &w[static_cast<size_t>(r) * cols];
      for (int c = 0; c < cols; ++c) {
        next[static_cast<size_t>(c)] += d * static_cast<double>(row[c]);
      }
    }
    for (int c = 0; c < cols; ++c) {
      next[static_cast<size_t>(c)] *= activate_grad(net.activation, trace.pre[li - 1][static_cast<size_t>(c)]);
    }
    delta.swap(next);
  }
}

static std::vector<double> build_input(const DenseNet& net, const std::vector<double>& x,
                                       int t, int total_steps) {
  if (static_cast<int>(x.size()) != net.data_dim) {
    throw std::invalid_argument("net_forward: data vector dimension mismatch");
  }
  std::vector<double> input;
  input.reserve(static_cast<size_t>(net.input_dim()));
  input.insert(input.end(), x.begin(), x.end());
  const auto emb = net.time_embed.embed(t, total_steps);
  input.insert(input.end(), emb.begin(), emb.end());
  return input;
}

std::vector<double> net_forward(const DenseNet& net, const std::vector<double>& x,
                                int t, int total_steps) {
  ForwardTrace trace;
  forward_with_trace(net, build_input(net, x, t, total_steps), trace);
  return trace.post.back();
}

ParamGrads net_gradient(const DenseNet& net, const std::vector<double>& x,
                        int t, int total_steps, const std::vector<double>& upstream) {
  if (static_cast<int>(upstream.size()) != net.output_dim()) {
    throw std::invalid_argument("net_gradient: upstream dimension mismatch");
  }
  for (double u : upstream) {
    if (!std::isfinite(u)) throw std::invalid_argument("net_gradient: non-finite upstream");
  }
  ForwardTrace trace;
  forward_with_trace(net, build_input(net, x, t, total_steps), trace);
  ParamGrads grads = ParamGrads::zeros_like(net);
  backward_from_trace(net, trace, upstream, grads);
  return grads;
}

AdamState AdamState::make(const DenseNet& net, double learning_rate) {
  AdamState state;
  state.learning_rate = learning_rate;
  state.m = ParamGrads::zeros_like(net);
  state.v = ParamGrads::zeros_like(net);
  return state;
}

void adam_step(AdamState& state, DenseNet& net, const ParamGrads& grads) {
  for (size_t l = 0; l < net.layer_count(); ++l) {
    if (grads.weights[l].size() != net.weights[l].size() ||
        grads.biases[l].size() != net.biases[l].size()) {
      throw std::invalid_argument("adam_step: gradient shape mismatch");
    }
    for (double g : grads.weights[l]) {
      if (!std::isfinite(g)) throw std::invalid_argument("adam_step: non-finite gradient");
    }
    for (double g : grads.biases[l]) {
      if (!std::isfinite(g)) throw std::invalid_argument("adam_step: non-finite gradient");
    }
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  auto update = [&](std::vector<float>& params, std::vector<double>& m,
                    std::vector<double>& v, const std::vector<double>& g) {
    for (size_t i = 0; i < params.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      const double next = static_cast<double>(params[i]) -
                          state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
      params[i] = static_cast<float>(next);
    }
  };
  for (size_t l = 0; l < net.layer_count(); ++l) {
    update(net.weights[l], state.m.weights[l], state.v.weights[l], grads.weights[l]);
    update(net.biases[l], state.m.biases[l], state.v.biases[l], grads.biases[l]);
  }
}

}  // namespace diffmia
