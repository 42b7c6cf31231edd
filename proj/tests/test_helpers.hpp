#pragma once

#include <cmath>
#include <vector>

#include "diffmia/diffusion.hpp"

namespace diffmia::testing {

// Denoiser that recovers the exact noise algebraically from the clean sample
// it was built around. Every posterior term it produces is zero up to
// floating-point rounding.
class OracleDenoiser final : public Denoiser {
 public:
  OracleDenoiser(std::vector<double> x0, const NoiseSchedule& schedule,
                 Parameterization param = Parameterization::EpsilonPrediction)
      : x0_(std::move(x0)), schedule_(&schedule), param_(param) {}

  std::vector<double> predict(const std::vector<double>& x_t, int t) const override {
    if (param_ == Parameterization::X0Prediction) return x0_;
    const double ab = schedule_->alpha_bars[static_cast<size_t>(t)];
    const double signal = std::sqrt(ab);
    const double noise = std::sqrt(1.0 - ab);
    std::vector<double> eps(x_t.size());
    for (size_t i = 0; i < x_t.size(); ++i) {
      eps[i] = (x_t[i] - signal * x0_[i]) / noise;
    }
    return eps;
  }
  Parameterization parameterization() const override { return param_; }
  const NoiseSchedule& schedule() const override { return *schedule_; }
  int data_dim() const override { return static_cast<int>(x0_.size()); }

 private:
  std::vector<double> x0_;
  const NoiseSchedule* schedule_;
  Parameterization param_;
};

// Denoiser that always predicts zero noise (the state of a freshly
// initialized network).
class ZeroDenoiser final : public Denoiser {
 public:
  ZeroDenoiser(int dim, const NoiseSchedule& schedule,
               Parameterization param = Parameterization::EpsilonPrediction)
      : dim_(dim), schedule_(&schedule), param_(param) {}

  std::vector<double> predict(const std::vector<double>&, int) const override {
    return std::vector<double>(static_cast<size_t>(dim_), 0.0);
  }
  Parameterization parameterization() const override { return param_; }
  const NoiseSchedule& schedule() const override { return *schedule_; }
  int data_dim() const override { return dim_; }

 private:
  int dim_;
  const NoiseSchedule* schedule_;
  Parameterization param_;
};

}  // namespace diffmia::testing
