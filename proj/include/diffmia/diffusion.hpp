#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "diffmia/net.hpp"
#include "diffmia/schedule.hpp"

namespace diffmia {

enum class Parameterization { EpsilonPrediction, X0Prediction };

const char* to_string(Parameterization p);
Parameterization parameterization_from_string(const std::string& s);

// Predicted x0 values are clamped to this many standard deviations; data is
// standardized upstream.
constexpr double kPredictClamp = 3.0;

// Variance floor for degenerate (zero-variance) densities on t = 1 paths.
constexpr double kVarianceFloor = 1e-6;

struct Gaussian {
  std::vector<double> mean;
  double variance = 0.0;  // isotropic
};

enum class TrajectoryKind { Exact, Estimated };

// Per-step loss values for one query sample. Exact trajectories carry the
// variational-bound terms (indices 0..T); estimated trajectories carry
// reconstruction errors (indices 1..T, optionally masked).
struct LossTrajectory {
  int64_t sample_id = 0;
  TrajectoryKind kind = TrajectoryKind::Exact;
  std::map<int, double> values;
  int noise_draws = 1;
  std::optional<std::set<int>> mask;
};

class EmptyTrajectoryError : public std::runtime_error {
 public:
  explicit EmptyTrajectoryError(const std::string& what) : std::runtime_error(what) {}
};

// Denoising function interface consumed by the loss machinery. predict()
// returns the predicted noise (EpsilonPrediction) or the predicted clean
// sample before clamping (X0Prediction).
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual std::vector<double> predict(const std::vector<double>& x_t, int t) const = 0;
  virtual Parameterization parameterization() const = 0;
  virtual const NoiseSchedule& schedule() const = 0;
  virtual int data_dim() const = 0;
};

struct DiffusionModel {
  DenseNet net;
  NoiseSchedule schedule;
  Parameterization parameterization = Parameterization::EpsilonPrediction;
  int data_dim = 0;
};

class ModelDenoiser final : public Denoiser {
 public:
  explicit ModelDenoiser(const DiffusionModel& model) : model_(&model) {}
  std::vector<double> predict(const std::vector<double>& x_t, int t) const override {
    return net_forward(model_->net, x_t, t, model_->schedule.steps);
  }
  Parameterization parameterization() const override { return model_->parameterization; }
  const NoiseSchedule& schedule() const override { return model_->schedule; }
  int data_dim() const override { return model_->data_dim; }

 private:
  const DiffusionModel* model_;
};

// Reconstruction-only facade: the surface a generation API exposes. Gray-box
// scoring consumes this interface and nothing else, so it cannot read exact
// loss terms, parameters, or the true schedule.
class Reconstructor {
 public:
  virtual ~Reconstructor() = default;
  virtual std::vector<double> reconstruct(const std::vector<double>& x_t, int t) const = 0;
  virtual int steps() const = 0;
  virtual int data_dim() const = 0;
};

class DenoiserReconstructor final : public Reconstructor {
 public:
  explicit DenoiserReconstructor(const Denoiser& denoiser) : denoiser_(&denoiser) {}
  std::vector<double> reconstruct(const std::vector<double>& x_t, int t) const override;
  int steps() const override { return denoiser_->schedule().steps; }
  int data_dim() const override { return denoiser_->data_dim(); }

 private:
  const Denoiser* denoiser_;
};

// x_t = sqrt(alpha_bar_t) * x0 + sqrt(1 - alpha_bar_t) * eps. t = 0 is the
// identity sentinel.
std::vector<double> forward_sample(const NoiseSchedule& schedule, const std::vector<double>& x0,
                                   int t, const std::vector<double>& eps);

// Predicted clean sample, clamped to [-kPredictClamp, kPredictClamp].
std::vector<double> predict_x0(const Denoiser& denoiser, const std::vector<double>& x_t, int t);

// Closed-form posterior q(x_{t-1} | x_t, x0).
Gaussian posterior_q(const NoiseSchedule& schedule, const std::vector<double>& x_t,
                     const std::vector<double>& x0, int t);

// Modeled reverse step p(x_{t-1} | x_t): posterior mean around the predicted
// x0, variance fixed to the posterior variance.
Gaussian p_theta(const Denoiser& denoiser, const std::vector<double>& x_t, int t);

// KL divergence between isotropic Gaussians of equal dimension, in nats.
// When both variances are zero the mean gap is measured against the floor
// variance so t = 1 paths stay finite.
double kl_gaussian(const Gaussian& q, const Gaussian& p);

// One term of the per-step loss decomposition, stored-index convention:
//   index 0      negative log-likelihood of x0 under p(. | x_1), shifted to >= 0
//   index 1..T-1 KL(q(x_index | x_{index+1}, x0) || p(x_index | x_{index+1}))
//   index T      KL(q(x_T | x0) || N(0, I)), model-independent
// Monte-Carlo noise for (sample, index, draw k) derives from
// (noise_seed, sample_id, index, k).
double loss_term(const Denoiser& denoiser, const std::vector<double>& x0, int index,
                 int noise_draws, uint64_t noise_seed, int64_t sample_id);

// All terms 0..T with the shared deterministic draws.
LossTrajectory exact_trajectory(const Denoiser& denoiser, int64_t sample_id,
                                const std::vector<double>& x0, uint64_t noise_seed,
                                int noise_draws);

// Single-pass total of the per-step decomposition with the same draws;
// exactly equals the sum of exact_trajectory values.
double vlb_total(const Denoiser& denoiser, int64_t sample_id, const std::vector<double>& x0,
                 uint64_t noise_seed, int noise_draws);

// Reconstruction-error trajectory over retained steps of [1, T]:
//   values[t] = || reconstruct(x_t, t) - x0 ||^2
// with x_t formed under guessed_schedule (which may differ from the
// schedule the model was trained with).
LossTrajectory estimated_trajectory(const Reconstructor& reconstructor, int64_t sample_id,
                                    const std::vector<double>& x0,
                                    const NoiseSchedule& guessed_schedule,
                                    const std::optional<std::set<int>>& mask,
                                    uint64_t noise_seed);

// Ancestral sampling: x_T ~ N(0, I), then x_{t-1} ~ p(. | x_t) down to x_0,
// without noise on the final step. Deterministic given seed.
std::vector<std::vector<double>> ancestral_sample(const Denoiser& denoiser, int count,
                                                  uint64_t seed);

}  // namespace diffmia
