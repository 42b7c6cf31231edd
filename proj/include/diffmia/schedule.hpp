#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace diffmia {

enum class ScheduleKind { Linear, Cosine };

const char* to_string(ScheduleKind kind);
ScheduleKind schedule_kind_from_string(const std::string& s);

// Construction failed to produce a valid schedule (alpha out of range,
// alpha_bar not strictly decreasing, or terminal alpha_bar too large).
class ScheduleError : public std::runtime_error {
 public:
  explicit ScheduleError(const std::string& what) : std::runtime_error(what) {}
};

// Per-step scaling factors of the forward noising process.
//
// alphas[0] is a sentinel fixed to 1 so that alpha_bars[t] = prod_{s<=t} alphas[s]
// indexes uniformly over t in [0, T]. All arithmetic is double precision:
// alpha_bars[T] underflows in 32-bit for large T.
struct NoiseSchedule {
  ScheduleKind kind;
  int steps;                       // T
  std::vector<double> alphas;      // length T+1, alphas[0] == 1
  std::vector<double> alpha_bars;  // length T+1, alpha_bars[0] == 1
};

// Scalars of the closed-form posterior q(x_{t-1} | x_t, x_0):
//   mean     = coef_xt * x_t + coef_x0 * x_0
//   variance = (1 - alpha_t)(1 - alpha_bar_{t-1}) / (1 - alpha_bar_t)
struct PosteriorCoefficients {
  double coef_xt;
  double coef_x0;
  double variance;
};

// Builds a schedule with T >= 2 steps.
//
// Linear: beta_t linearly spaced from 1e-4 * (1000/T) to 0.02 * (1000/T),
// clipped to <= 0.999 so small-T schedules stay valid. Cosine: alpha_bar_t
// follows g(t)/g(0) with g(t) = cos^2(((t/T + s)/(1 + s)) * pi/2), s = 0.008.
NoiseSchedule build_schedule(ScheduleKind kind, int steps);

// Signal-to-noise ratio alpha_bar_t / (1 - alpha_bar_t), strictly decreasing
// in t. When 1 - alpha_bar_t < 1e-15 the ratio is saturated: a large finite
// value is returned and *saturated (if given) is set.
double snr(const NoiseSchedule& schedule, int t, bool* saturated = nullptr);

PosteriorCoefficients posterior_coefficients(const NoiseSchedule& schedule, int t);

}  // namespace diffmia
