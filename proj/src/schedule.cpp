#include "diffmia/schedule.hpp"

#include <cmath>

namespace diffmia {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kMaxBeta = 0.999;
constexpr double kTerminalAlphaBarMax = 1e-3;
}  // namespace

const char* to_string(ScheduleKind kind) {
  return kind == ScheduleKind::Linear ? "linear" : "cosine";
}

ScheduleKind schedule_kind_from_string(const std::string& s) {
  if (s == "linear") return ScheduleKind::Linear;
  if (s == "cosine") return ScheduleKind::Cosine;
  throw std::invalid_argument("unknown schedule kind: " + s);
}

NoiseSchedule build_schedule(ScheduleKind kind, int steps) {
  if (steps < 2) throw std::invalid_argument("build_schedule: steps must be >= 2");

  NoiseSchedule sched;
  sched.kind = kind;
  sched.steps = steps;
  sched.alphas.assign(static_cast<size_t>(steps) + 1, 1.0);
  sched.alpha_bars.assign(static_cast<size_t>(steps) + 1, 1.0);

  if (kind == ScheduleKind::Linear) {
    const double scale = 1000.0 / steps;
    const double beta_first = 1e-4 * scale;
    const double beta_last = 0.02 * scale;
    for (int t = 1; t <= steps; ++t) {
      double beta = beta_first + (beta_last - beta_first) * (t - 1) / (steps - 1);
      beta = std::min(beta, kMaxBeta);
      sched.alphas[static_cast<size_t>(t)] = 1.0 - beta;
    }
  } else {
    const double s = 0.008;
    auto g = [&](double t) {
      const double c = std::cos(((t / steps + s) / (1.0 + s)) * kPi / 2.0);
      return c * c;
    };
    double g_prev = g(0.0);
    for (int t = 1; t <= steps; ++t) {
      const double g_t = g(static_cast<double>(t));
      sched.alphas[static_cast<size_t>(t)] = g_t / g_prev;
      g_prev = g_t;
    }
  }

  for (int t = 1; t <= steps; ++t) {
    const double alpha = sched.alphas[static_cast<size_t>(t)];
    if (!(alpha > 0.0) || alpha > 1.0) {
      throw ScheduleError("build_schedule: alpha out of (0, 1] at t=" + std::to_string(t));
    }
    sched.alpha_bars[static_cast<size_t>(t)] = sched.alpha_bars[static_cast<size_t>(t) - 1] * alpha;
    if (!(sched.alpha_bars[static_cast<size_t>(t)] < sched.alpha_bars[static_cast<size_t>(t) - 1])) {
      throw ScheduleError("build_schedule: alpha_bar not strictly decreasing at t=" + std::to_string(t));
    }
  }
  if (!(sched.alpha_bars[static_cast<size_t>(steps)] < kTerminalAlphaBarMax)) {
    throw ScheduleError("build_schedule: terminal alpha_bar too large; q(x_T|x_0) not near-normal");
  }
  return sched;
}

static void check_step(const NoiseSchedule& schedule, int t, const char* who) {
  if (t < 1 || t > schedule.steps) {
    throw std::invalid_argument(std::string(who) + ": step index out of range");
  }
}

double snr(const NoiseSchedule& schedule, int t, bool* saturated) {
  check_step(schedule, t, "snr");
  if (saturated) *saturated = false;
  const double ab = schedule.alpha_bars[static_cast<size_t>(t)];
  const double denom = 1.0 - ab;
  if (denom < 1e-15) {
    if (saturated) *saturated = true;
    return ab / 1e-15;
  }
  return ab / denom;
}

PosteriorCoefficients posterior_coefficients(const NoiseSchedule& schedule, int t) {
  check_step(schedule, t, "posterior_coefficients");
  const double alpha = schedule.alphas[static_cast<size_t>(t)];
  const double ab_t = schedule.alpha_bars[static_cast<size_t>(t)];
  const double ab_prev = schedule.alpha_bars[static_cast<size_t>(t) - 1];
  const double denom = 1.0 - ab_t;
  PosteriorCoefficients coef;
  coef.coef_xt = std::sqrt(alpha) * (1.0 - ab_prev) / denom;
  coef.coef_x0 = std::sqrt(ab_prev) * (1.0 - alpha) / denom;
  coef.variance = (1.0 - alpha) * (1.0 - ab_prev) / denom;
  return coef;
}

}  // namespace diffmia
