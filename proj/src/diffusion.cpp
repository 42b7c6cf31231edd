#include "diffmia/diffusion.hpp"

#include <algorithm>
#include <cmath>

#include "diffmia/rng.hpp"

namespace diffmia {

namespace {
constexpr uint64_t kTrajectoryTag = 0x7261A3ECu;
constexpr uint64_t kEstimateTag = 0x657374A1u;
constexpr uint64_t kAncestralTag = 0x616E63u;

void check_dim(const std::vector<double>& v, int dim, const char* who) {
  if (static_cast<int>(v.size()) != dim) {
    throw std::invalid_argument(std::string(who) + ": dimension mismatch");
  }
}

std::vector<double> noise_for(uint64_t noise_seed, int64_t sample_id, int index, int draw, int dim) {
  Rng rng(mix_seed({kTrajectoryTag, noise_seed, static_cast<uint64_t>(sample_id),
                    static_cast<uint64_t>(index), static_cast<uint64_t>(draw)}));
  return rng.gaussian_vector(dim);
}

}  // namespace

const char* to_string(Parameterization p) {
  return p == Parameterization::EpsilonPrediction ? "epsilon" : "x0";
}

Parameterization parameterization_from_string(const std::string& s) {
  if (s == "epsilon") return Parameterization::EpsilonPrediction;
  if (s == "x0") return Parameterization::X0Prediction;
  throw std::invalid_argument("unknown parameterization: " + s);
}

std::vector<double> DenoiserReconstructor::reconstruct(const std::vector<double>& x_t, int t) const {
  return predict_x0(*denoiser_, x_t, t);
}

std::vector<double> forward_sample(const NoiseSchedule& schedule, const std::vector<double>& x0,
                                   int t, const std::vector<double>& eps) {
  if (t < 0 || t > schedule.steps) {
    throw std::invalid_argument("forward_sample: step index out of range");
  }
  check_dim(eps, static_cast<int>(x0.size()), "forward_sample");
  const double ab = schedule.alpha_bars[static_cast<size_t>(t)];
  const double signal = std::sqrt(ab);
  const double noise = std::sqrt(1.0 - ab);
  std::vector<double> out(x0.size());
  for (size_t i = 0; i < x0.size(); ++i) {
    out[i] = signal * x0[i] + noise * eps[i];
  }
  return out;
}

std::vector<double> predict_x0(const Denoiser& denoiser, const std::vector<double>& x_t, int t) {
  const NoiseSchedule& schedule = denoiser.schedule();
  if (t < 1 || t > schedule.steps) {
    throw std::invalid_argument("predict_x0: step index out of range");
  }
  const double ab = schedule.alpha_bars[static_cast<size_t>(t)];
  if (ab < 1e-12) {
    throw std::domain_error("predict_x0: alpha_bar below 1e-12, inversion is degenerate");
  }
  std::vector<double> x0_hat;
  if (denoiser.parameterization() == Parameterization::X0Prediction) {
    x0_hat = denoiser.predict(x_t, t);
  } else {
    const std::vector<double> eps_hat = denoiser.predict(x_t, t);
    check_dim(eps_hat, static_cast<int>(x_t.size()), "predict_x0");
    const double signal = std::sqrt(ab);
    const double noise = std::sqrt(1.0 - ab);
    x0_hat.resize(x_t.size());
    for (size_t i = 0; i < x_t.size(); ++i) {
      x0_hat[i] = (x_t[i] - noise * eps_hat[i]) / signal;
    }
  }
  for (auto& v : x0_hat) {
    v = std::clamp(v, -kPredictClamp, kPredictClamp);
  }
  return x0_hat;
}

Gaussian posterior_q(const NoiseSchedule& schedule, const std::vector<double>& x_t,
                     const std::vector<double>& x0, int t) {
  const PosteriorCoefficients coef = posterior_coefficients(schedule, t);
  check_dim(x_t, static_cast<int>(x0.size()), "posterior_q");
  Gaussian g;
  g.variance = coef.variance;
  g.mean.resize(x0.size());
  for (size_t i = 0; i < x0.size(); ++i) {
    g.mean[i] = coef.coef_xt * x_t[i] + coef.coef_x0 * x0[i];
  }
  return g;
}

Gaussian p_theta(const Denoiser& denoiser, const std::vector<double>& x_t, int t) {
  const std::vector<double> x0_hat = predict_x0(denoiser, x_t, t);
  return posterior_q(denoiser.schedule(), x_t, x0_hat, t);
}

double kl_gaussian(const Gaussian& q, const Gaussian& p) {
  if (q.variance < 0.0) throw std::invalid_argument("kl_gaussian: negative q variance");
  if (p.variance < 0.0) throw std::invalid_argument("kl_gaussian: negative p variance");
  if (q.mean.size() != p.mean.size()) {
    throw std::invalid_argument("kl_gaussian: dimension mismatch");
  }
  double gap = 0.0;
  for (size_t i = 0; i < q.mean.size(); ++i) {
    const double d = q.mean[i] - p.mean[i];
    gap += d * d;
  }
  if (p.variance == 0.0) {
    if (q.variance > 0.0) {
      throw std::invalid_argument("kl_gaussian: q has mass where p is degenerate");
    }
    return 0.5 * gap / kVarianceFloor;
  }
  const double d = static_cast<double>(q.mean.size());
  const double ratio = q.variance / p.variance;
  return 0.5 * (d * (ratio - 1.0 - std::log(ratio)) + gap / p.variance);
}

namespace {

// Shared implementation of the stored-index loss terms so the trajectory and
// the single-pass total consume identical arithmetic and draws.
double term_at_index(const Denoiser& denoiser, const std::vector<double>& x0, int index,
                     int noise_draws, uint64_t noise_seed, int64_t sample_id) {
  const NoiseSchedule& schedule = denoiser.schedule();
  const int steps = schedule.steps;
  const int dim = static_cast<int>(x0.size());

  if (index == steps) {
    // KL(q(x_T | x0) || N(0, I)) in closed form.
    const double ab = schedule.alpha_bars[static_cast<size_t>(steps)];
    const double var = 1.0 - ab;
    double mean_sq = 0.0;
    for (double v : x0) mean_sq += ab * v * v;
    return 0.5 * (dim * (var - 1.0 - std::log(var)) + mean_sq);
  }

  double acc = 0.0;
  const int wire_step = index + 1;
  for (int k = 0; k < noise_draws; ++k) {
    const auto eps = noise_for(noise_seed, sample_id, index, k, dim);
    const auto x_t = forward_sample(schedule, x0, wire_step, eps);
    if (index == 0) {
      // Gaussian NLL of x0 under p(. | x_1), shifted by its variance-only
      // minimum so the term is nonnegative for continuous data.
      const Gaussian p = p_theta(denoiser, x_t, 1);
      double gap = 0.0;
      for (size_t i = 0; i < x0.size(); ++i) {
        const double d = x0[i] - p.mean[i];
        gap += d * d;
      }
      acc += 0.5 * gap / std::max(p.variance, kVarianceFloor);
    } else {
      const Gaussian q = posterior_q(schedule, x_t, x0, wire_step);
      const Gaussian p = p_theta(denoiser, x_t, wire_step);
      acc += kl_gaussian(q, p);
    }
  }
  return acc / noise_draws;
}

}  // namespace

double loss_term(const Denoiser& denoiser, const std::vector<double>& x0, int index,
                 int noise_draws, uint64_t noise_seed, int64_t sample_id) {
  if (index < 0 || index > denoiser.schedule().steps) {
    throw std::invalid_argument("loss_term: index out of range");
  }
  if (noise_draws < 1) throw std::invalid_argument("loss_term: noise_draws must be >= 1");
  check_dim(x0, denoiser.data_dim(), "loss_term");
  return term_at_index(denoiser, x0, index, noise_draws, noise_seed, sample_id);
}

LossTrajectory exact_trajectory(const Denoiser& denoiser, int64_t sample_id,
                                const std::vector<double>& x0, uint64_t noise_seed,
                                int noise_draws) {
  if (noise_draws < 1) throw std::invalid_argument("exact_trajectory: noise_draws must be >= 1");
  check_dim(x0, denoiser.data_dim(), "exact_trajectory");
  LossTrajectory traj;
  traj.sample_id = sample_id;
  traj.kind = TrajectoryKind::Exact;
  traj.noise_draws = noise_draws;
  const int steps = denoiser.schedule().steps;
  for (int index = 0; index <= steps; ++index) {
    traj.values[index] = term_at_index(denoiser, x0, index, noise_draws, noise_seed, sample_id);
  }
  return traj;
}

double vlb_total(const Denoiser& denoiser, int64_t sample_id, const std::vector<double>& x0,
                 uint64_t noise_seed, int noise_draws) {
  if (noise_draws < 1) throw std::invalid_argument("vlb_total: noise_draws must be >= 1");
  check_dim(x0, denoiser.data_dim(), "vlb_total");
  double total = 0.0;
  const int steps = denoiser.schedule().steps;
  for (int index = 0; index <= steps; ++index) {
    total += term_at_index(denoiser, x0, index, noise_draws, noise_seed, sample_id);
  }
  return total;
}

LossTrajectory estimated_trajectory(const Reconstructor& reconstructor, int64_t sample_id,
                                    const std::vector<double>& x0,
                                    const NoiseSchedule& guessed_schedule,
                                    const std::optional<std::set<int>>& mask,
                                    uint64_t noise_seed) {
  check_dim(x0, reconstructor.data_dim(), "estimated_trajectory");
  const int steps = std::min(reconstructor.steps(), guessed_schedule.steps);
  if (mask && mask->empty()) {
    throw std::invalid_argument("estimated_trajectory: empty mask");
  }
  LossTrajectory traj;
  traj.sample_id = sample_id;
  traj.kind = TrajectoryKind::Estimated;
  traj.noise_draws = 1;
  traj.mask = mask;
  for (int t = 1; t <= steps; ++t) {
    if (mask && mask->count(t) == 0) continue;
    Rng rng(mix_seed({kEstimateTag, noise_seed, static_cast<uint64_t>(sample_id),
                      static_cast<uint64_t>(t)}));
    const auto eps = rng.gaussian_vector(static_cast<int>(x0.size()));
    const auto x_t = forward_sample(guessed_schedule, x0, t, eps);
    const auto recon = reconstructor.reconstruct(x_t, t);
    double err = 0.0;
    for (size_t i = 0; i < x0.size(); ++i) {
      const double d = recon[i] - x0[i];
      err += d * d;
    }
    traj.values[t] = err;
  }
  return traj;
}

std::vector<std::vector<double>> ancestral_sample(const Denoiser& denoiser, int count,
                                                  uint64_t seed) {
  if (count < 0) throw std::invalid_argument("ancestral_sample: negative count");
  const NoiseSchedule& schedule = denoiser.schedule();
  const int dim = denoiser.data_dim();
  std::vector<std::vector<double>> samples;
  samples.reserve(static_cast<size_t>(count));
  for (int k = 0; k < count; ++k) {
    Rng rng(mix_seed({kAncestralTag, seed, static_cast<uint64_t>(k)}));
    std::vector<double> x = rng.gaussian_vector(dim);
    for (int t = schedule.steps; t >= 1; --t) {
      const Gaussian p = p_theta(denoiser, x, t);
      x = p.mean;
      if (t > 1) {
        const double sd = std::sqrt(p.variance);
        for (int i = 0; i < dim; ++i) {
          x[static_cast<size_t>(i)] += sd * rng.gaussian();
        }
      }
    }
    samples.push_back(std::move(x));
  }
  return samples;
}

}  // namespace diffmia
