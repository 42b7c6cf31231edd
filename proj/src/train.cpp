#include "diffmia/train.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "diffmia/rng.hpp"

namespace diffmia {

TrainResult train_model(const std::vector<std::vector<double>>& points, const TrainConfig& config) {
  if (points.empty()) throw std::invalid_argument("train_model: empty training set");
  if (config.batch_size < 1 || config.batch_size > static_cast<int>(points.size())) {
    throw std::invalid_argument("train_model: batch_size must be in [1, training-set size]");
  }
  if (config.steps < 0) throw std::invalid_argument("train_model: negative step count");
  const int dim = static_cast<int>(points.front().size());
  for (const auto& p : points) {
    if (static_cast<int>(p.size()) != dim) {
      throw std::invalid_argument("train_model: ragged training set");
    }
  }

  TrainResult result;
  result.model.data_dim = dim;
  result.model.parameterization = config.parameterization;
  result.model.schedule = build_schedule(config.schedule_kind, config.diffusion_steps);
  result.model.net = make_dense_net(dim, config.hidden_dims, config.time_embed_dim,
                                    config.activation, config.seed);

  DenseNet& net = result.model.net;
  const NoiseSchedule& schedule = result.model.schedule;
  AdamState adam = AdamState::make(net, config.learning_rate);
  Rng rng(mix_seed({0x7241u, config.seed}));

  ParamGrads grads = ParamGrads::zeros_like(net);
  ForwardTrace trace;
  std::vector<double> input(static_cast<size_t>(net.input_dim()));
  std::vector<double> upstream(static_cast<size_t>(dim));
  const int n = static_cast<int>(points.size());
  const int batch = config.batch_size;
  result.loss_log.reserve(static_cast<size_t>(config.steps));

  for (int step = 0; step < config.steps; ++step) {
    grads.set_zero();
    double batch_loss = 0.0;
    for (int b = 0; b < batch; ++b) {
      const auto& x0 = points[static_cast<size_t>(rng.uniform_int(0, n - 1))];
      const int t = rng.uniform_int(1, schedule.steps);
      const auto eps = rng.gaussian_vector(dim);
      const auto x_t = forward_sample(schedule, x0, t, eps);

      for (int j = 0; j < dim; ++j) input[static_cast<size_t>(j)] = x_t[static_cast<size_t>(j)];
      const auto emb = net.time_embed.embed(t, schedule.steps);
      for (size_t j = 0; j < emb.size(); ++j) input[static_cast<size_t>(dim) + j] = emb[j];

      forward_with_trace(net, input, trace);
      const std::vector<double>& out = trace.post.back();
      const std::vector<double>& target =
          config.parameterization == Parameterization::EpsilonPrediction ? eps : x0;
      double sample_loss = 0.0;
      for (int j = 0; j < dim; ++j) {
        const double r = out[static_cast<size_t>(j)] - target[static_cast<size_t>(j)];
        sample_loss += r * r;
        upstream[static_cast<size_t>(j)] = 2.0 * r / batch;
      }
      batch_loss += sample_loss;
      backward_from_trace(net, trace, upstream, grads);
    }
    batch_loss /= batch;
    if (!std::isfinite(batch_loss)) {
      throw std::runtime_error("train_model: non-finite loss at step " + std::to_string(step));
    }
    result.loss_log.emplace_back(step, batch_loss);
    try {
      adam_step(adam, net, grads);
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error("train_model: update rejected at step " + std::to_string(step) +
                               ": " + e.what());
    }
  }
  return result;
}

TrainResult train_shadow(const DiffusionModel& target, int synthetic_count,
                         const TrainConfig& shadow_config, uint64_t sampling_seed) {
  if (synthetic_count < 1) {
    throw std::invalid_argument("train_shadow: synthetic_count must be >= 1");
  }
  if (shadow_config.batch_size > synthetic_count) {
    throw std::invalid_argument("train_shadow: synthetic_count below batch size");
  }
  const ModelDenoiser denoiser(target);
  const auto synthetic = ancestral_sample(denoiser, synthetic_count, sampling_seed);
  return train_model(synthetic, shadow_config);
}

}  // namespace diffmia
