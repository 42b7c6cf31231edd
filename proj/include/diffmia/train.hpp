#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "diffmia/diffusion.hpp"

namespace diffmia {

struct TrainConfig {
  int steps = 20000;
  int batch_size = 64;
  double learning_rate = 1e-3;
  uint64_t seed = 0;
  Parameterization parameterization = Parameterization::EpsilonPrediction;
  ScheduleKind schedule_kind = ScheduleKind::Linear;
  int diffusion_steps = 100;  // T
  std::vector<int> hidden_dims = {64, 64};
  int time_embed_dim = 16;
  Activation activation = Activation::SiLU;
};

struct TrainResult {
  DiffusionModel model;
  std::vector<std::pair<int, double>> loss_log;  // (step, batch loss)
};

// Trains a denoiser on the simple objective: per step, draw a batch, a step
// index t uniform in [1, T] and a noise vector per element, and minimize the
// mean squared prediction error (noise for EpsilonPrediction, clean sample
// for X0Prediction). Deterministic given the config seed.
TrainResult train_model(const std::vector<std::vector<double>>& points, const TrainConfig& config);

// Draws synthetic_count ancestral samples from the target and trains a fresh
// model on them. The shadow config may differ from the target's in
// architecture and step count.
TrainResult train_shadow(const DiffusionModel& target, int synthetic_count,
                         const TrainConfig& shadow_config, uint64_t sampling_seed);

}  // namespace diffmia
