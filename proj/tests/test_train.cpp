#include <cmath>
#include <stdexcept>

#include "diffmia/rng.hpp"
#include "diffmia/train.hpp"
#include "doctest.h"

using namespace diffmia;

namespace {

std::vector<std::vector<double>> mixture_points(int n, double separation, uint64_t seed) {
  // Two clusters straddling the origin along the first axis, roughly
  // standardized.
  Rng rng(seed);
  std::vector<std::vector<double>> points(static_cast<size_t>(n));
  const double half = separation / 2.0;
  for (int i = 0; i < n; ++i) {
    const double cx = i % 2 == 0 ? half : -half;
    points[static_cast<size_t>(i)] = {cx + 0.3 * rng.gaussian(), 0.3 * rng.gaussian()};
  }
  return points;
}

TrainConfig small_config(uint64_t seed) {
  TrainConfig cfg;
  cfg.steps = 2000;
  cfg.batch_size = 2;
  cfg.learning_rate = 1e-3;
  cfg.seed = seed;
  cfg.diffusion_steps = 50;
  cfg.hidden_dims = {32, 32};
  cfg.time_embed_dim = 8;
  return cfg;
}

}  // namespace

TEST_CASE("zero training steps return the freshly initialized network") {
  TrainConfig cfg = small_config(5);
  cfg.steps = 0;
  const auto points = mixture_points(8, 2.0, 1);
  cfg.batch_size = 4;
  const auto result = train_model(points, cfg);
  const auto fresh = make_dense_net(2, cfg.hidden_dims, cfg.time_embed_dim, cfg.activation,
                                    cfg.seed);
  CHECK(result.model.net.weights == fresh.weights);
  CHECK(result.model.net.biases == fresh.biases);
  CHECK(result.loss_log.empty());
}

TEST_CASE("two-point memorization collapses the simple loss") {
  const std::vector<std::vector<double>> points = {{1.0, -0.5}, {-1.0, 0.5}};
  const auto result = train_model(points, small_config(3));
  REQUIRE(result.loss_log.size() == 2000);
  const double initial = result.loss_log.front().second;
  const double final = result.loss_log.back().second;
  CHECK(final < 0.1 * initial);
  for (const auto& [step, loss] : result.loss_log) {
    REQUIRE(std::isfinite(loss));
  }
}

TEST_CASE("training is bit-deterministic in the config seed") {
  const auto points = mixture_points(16, 3.0, 2);
  TrainConfig cfg = small_config(11);
  cfg.steps = 300;
  cfg.batch_size = 8;
  const auto a = train_model(points, cfg);
  const auto b = train_model(points, cfg);
  CHECK(a.model.net.weights == b.model.net.weights);
  CHECK(a.model.net.biases == b.model.net.biases);
  CHECK(a.loss_log == b.loss_log);
}

TEST_CASE("training rejects bad arguments") {
  const auto points = mixture_points(4, 2.0, 2);
  TrainConfig cfg = small_config(1);
  cfg.batch_size = 8;  // larger than the set
  CHECK_THROWS_AS(train_model(points, cfg), std::invalid_argument);
  CHECK_THROWS_AS(train_model({}, small_config(1)), std::invalid_argument);
}

TEST_CASE("loss EMA decays over 500-step windows in the memorization regime") {
  const auto points = mixture_points(16, 3.0, 4);
  TrainConfig cfg = small_config(21);
  cfg.steps = 3000;
  cfg.batch_size = 16;
  const auto result = train_model(points, cfg);
  std::vector<double> ema;
  ema.reserve(result.loss_log.size());
  double value = result.loss_log.front().second;
  for (const auto& [step, loss] : result.loss_log) {
    value = 0.999 * value + 0.001 * loss;
    ema.push_back(value);
  }
  int windows = 0, violations = 0;
  for (size_t i = 0; i + 500 < ema.size(); ++i) {
    ++windows;
    if (ema[i + 500] > ema[i]) ++violations;
  }
  CHECK(static_cast<double>(violations) <= 0.05 * windows);
}

TEST_CASE("a converged two-cluster model generates near the true component means") {
  const auto points = mixture_points(64, 5.0, 8);
  TrainConfig cfg = small_config(31);
  cfg.steps = 6000;
  cfg.batch_size = 32;
  const auto result = train_model(points, cfg);
  const ModelDenoiser denoiser(result.model);
  const auto samples = ancestral_sample(denoiser, 1000, 99);
  // Component spread is 0.3 per coordinate; count samples within 3 of either
  // component mean in units of that spread.
  int close = 0;
  for (const auto& s : samples) {
    for (const double cx : {2.5, -2.5}) {
      const double d2 = (s[0] - cx) * (s[0] - cx) + s[1] * s[1];
      if (std::sqrt(d2) <= 3.0 * 0.3 * std::sqrt(2.0)) {
        ++close;
        break;
      }
    }
  }
  CHECK(close >= 900);
}

TEST_CASE("member trajectories sit below holdout trajectories after overfitting") {
  const auto members = mixture_points(16, 4.0, 101);
  const auto holdout = mixture_points(16, 4.0, 202);
  TrainConfig cfg = small_config(41);
  cfg.steps = 4000;
  cfg.batch_size = 16;
  const auto result = train_model(members, cfg);
  const ModelDenoiser denoiser(result.model);

  const int t_cap = 3 * cfg.diffusion_steps / 4;
  auto mean_low_t = [&](const std::vector<std::vector<double>>& xs) {
    double acc = 0.0;
    int count = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
      const auto traj = exact_trajectory(denoiser, static_cast<int64_t>(i), xs[i], 6, 1);
      for (const auto& [t, v] : traj.values) {
        if (t <= t_cap) {
          acc += v;
          ++count;
        }
      }
    }
    return acc / count;
  };
  CHECK(mean_low_t(members) < mean_low_t(holdout));
}

TEST_CASE("reconstruction losses grow toward the noise end of the trajectory") {
  // Per-step reconstruction errors carry single-draw Monte-Carlo noise, so
  // the rising shape is asserted on binned medians over the top quartile.
  const auto members = mixture_points(32, 4.0, 55);
  TrainConfig cfg = small_config(61);
  cfg.steps = 4000;
  cfg.batch_size = 32;
  const auto result = train_model(members, cfg);
  const ModelDenoiser denoiser(result.model);
  const DenoiserReconstructor facade(denoiser);
  const int T = cfg.diffusion_steps;

  const int bins = 4;  // quartiles of the step range
  std::vector<std::vector<double>> binned(static_cast<size_t>(bins));
  for (int i = 0; i < 32; ++i) {
    const auto traj = estimated_trajectory(facade, i, members[static_cast<size_t>(i)],
                                           result.model.schedule, std::nullopt, 13);
    for (const auto& [t, v] : traj.values) {
      const int b = std::min(bins - 1, (t - 1) * bins / T);
      binned[static_cast<size_t>(b)].push_back(v);
    }
  }
  std::vector<double> medians(static_cast<size_t>(bins));
  for (int b = 0; b < bins; ++b) {
    auto& vals = binned[static_cast<size_t>(b)];
    REQUIRE(!vals.empty());
    std::sort(vals.begin(), vals.end());
    medians[static_cast<size_t>(b)] = vals[vals.size() / 2];
  }
  for (int b = 1; b < bins; ++b) {
    REQUIRE(medians[static_cast<size_t>(b)] > medians[static_cast<size_t>(b - 1)]);
  }
  // The noise-end quartile dominates every earlier one by a wide margin.
  CHECK(medians.back() > 10.0 * medians.front());
}

TEST_CASE("shadow training validates the synthetic count") {
  const auto points = mixture_points(8, 3.0, 5);
  TrainConfig cfg = small_config(71);
  cfg.steps = 50;
  cfg.batch_size = 8;
  const auto target = train_model(points, cfg);
  CHECK_THROWS_AS(train_shadow(target.model, 0, cfg, 1), std::invalid_argument);
  CHECK_THROWS_AS(train_shadow(target.model, 4, cfg, 1), std::invalid_argument);  // below batch

  TrainConfig shadow_cfg = cfg;
  shadow_cfg.steps = 20;
  const auto s1 = train_shadow(target.model, 16, shadow_cfg, 9);
  const auto s2 = train_shadow(target.model, 16, shadow_cfg, 9);
  CHECK(s1.model.net.weights == s2.model.net.weights);
}
