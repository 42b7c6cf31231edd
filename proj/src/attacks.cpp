#include "diffmia/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "diffmia/rng.hpp"

namespace diffmia {

const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::WhiteBox: return "whitebox";
    case Scenario::GrayBox: return "graybox";
    case Scenario::BlackBoxSpecific: return "blackbox_specific";
    case Scenario::BlackBoxAgnostic: return "blackbox_agnostic";
  }
  return "?";
}

const char* to_string(Statistic s) {
  switch (s) {
    case Statistic::Sum: return "sum";
    case Statistic::Median: return "median";
    case Statistic::Min: return "min";
    case Statistic::Max: return "max";
  }
  return "?";
}

const char* to_string(FeatureMapKind f) {
  return f == FeatureMapKind::Identity ? "identity" : "random_projection";
}

Scenario scenario_from_string(const std::string& s) {
  if (s == "whitebox") return Scenario::WhiteBox;
  if (s == "graybox") return Scenario::GrayBox;
  if (s == "blackbox_specific") return Scenario::BlackBoxSpecific;
  if (s == "blackbox_agnostic") return Scenario::BlackBoxAgnostic;
  throw std::invalid_argument("unknown scenario: " + s);
}

Statistic statistic_from_string(const std::string& s) {
  if (s == "sum") return Statistic::Sum;
  if (s == "median") return Statistic::Median;
  if (s == "min") return Statistic::Min;
  if (s == "max") return Statistic::Max;
  throw std::invalid_argument("unknown statistic: " + s);
}

FeatureMapKind feature_map_from_string(const std::string& s) {
  if (s == "identity") return FeatureMapKind::Identity;
  if (s == "random_projection") return FeatureMapKind::RandomProjection;
  throw std::invalid_argument("unknown feature map: " + s);
}

AttackConfig AttackConfig::whitebox_defaults() {
  AttackConfig c;
  c.scenario = Scenario::WhiteBox;
  c.statistic = Statistic::Max;
  c.truncation_fraction = 0.75;
  return c;
}

AttackConfig AttackConfig::graybox_defaults() {
  AttackConfig c;
  c.scenario = Scenario::GrayBox;
  c.statistic = Statistic::Median;
  c.truncation_fraction = 0.75;
  return c;
}

AttackConfig AttackConfig::blackbox_specific_defaults() {
  AttackConfig c = graybox_defaults();
  c.scenario = Scenario::BlackBoxSpecific;
  return c;
}

AttackConfig AttackConfig::blackbox_agnostic_defaults() {
  AttackConfig c;
  c.scenario = Scenario::BlackBoxAgnostic;
  c.statistic = Statistic::Min;
  c.truncation_fraction = 1.0;
  return c;
}

int truncation_step(double fraction, int total_steps) {
  if (!(fraction > 0.0) || fraction > 1.0) {
    throw std::invalid_argument("truncation_fraction must be in (0, 1]");
  }
  return static_cast<int>(std::lround(fraction * total_steps));
}

LossTrajectory truncate_trajectory(const LossTrajectory& trajectory, int t_trun) {
  if (t_trun < 0) throw std::invalid_argument("truncate_trajectory: negative truncation step");
  LossTrajectory out;
  out.sample_id = trajectory.sample_id;
  out.kind = trajectory.kind;
  out.noise_draws = trajectory.noise_draws;
  std::set<int> retained;
  for (const auto& [t, v] : trajectory.values) {
    if (t <= t_trun) {
      out.values[t] = v;
      retained.insert(t);
    }
  }
  out.mask = retained;
  if (out.values.empty()) {
    throw EmptyTrajectoryError("truncate_trajectory: no entries at or below step " +
                               std::to_string(t_trun));
  }
  return out;
}

LossTrajectory subsample_trajectory(const LossTrajectory& trajectory, double keep) {
  if (!(keep > 0.0) || keep > 1.0) {
    throw std::invalid_argument("subsample_trajectory: keep fraction must be in (0, 1]");
  }
  const size_t n = trajectory.values.size();
  if (n == 0) throw EmptyTrajectoryError("subsample_trajectory: empty trajectory");
  const size_t m = static_cast<size_t>(std::ceil(keep * static_cast<double>(n)));
  if (m >= n) return trajectory;

  std::vector<int> keys;
  keys.reserve(n);
  for (const auto& [t, v] : trajectory.values) keys.push_back(t);

  LossTrajectory out;
  out.sample_id = trajectory.sample_id;
  out.kind = trajectory.kind;
  out.noise_draws = trajectory.noise_draws;
  std::set<int> retained;
  for (size_t i = 0; i < m; ++i) {
    const size_t idx =
        m == 1 ? 0 : static_cast<size_t>(std::llround(static_cast<double>(i) * (n - 1) / (m - 1)));
    retained.insert(keys[idx]);
  }
  for (int t : retained) out.values[t] = trajectory.values.at(t);
  out.mask = retained;
  return out;
}

double apply_statistic(const std::vector<double>& values, Statistic statistic) {
  if (values.empty()) throw std::invalid_argument("apply_statistic: empty input");
  switch (statistic) {
    case Statistic::Sum: {
      double s = 0.0;
      for (double v : values) s += v;
      return s;
    }
    case Statistic::Min:
      return *std::min_element(values.begin(), values.end());
    case Statistic::Max:
      return *std::max_element(values.begin(), values.end());
    case Statistic::Median: {
      std::vector<double> sorted = values;
      std::sort(sorted.begin(), sorted.end());
      const size_t n = sorted.size();
      if (n % 2 == 1) return sorted[n / 2];
      return 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    }
  }
  throw std::invalid_argument("apply_statistic: unknown statistic");
}

double trajectory_score(const LossTrajectory& trajectory, const AttackConfig& config,
                        int total_steps) {
  const int t_trun = truncation_step(config.truncation_fraction, total_steps);
  LossTrajectory reduced = trajectory;
  if (config.suppression_keep && config.suppress_before_truncation) {
    reduced = subsample_trajectory(reduced, *config.suppression_keep);
  }
  reduced = truncate_trajectory(reduced, t_trun);
  if (config.suppression_keep && !config.suppress_before_truncation) {
    reduced = subsample_trajectory(reduced, *config.suppression_keep);
  }
  std::vector<double> values;
  values.reserve(reduced.values.size());
  for (const auto& [t, v] : reduced.values) values.push_back(v);
  return apply_statistic(values, config.statistic);
}

MembershipScores whitebox_scores(const Denoiser& denoiser, const QuerySet& query,
                                 const AttackConfig& config) {
  MembershipScores scores;
  scores.entries.reserve(query.size());
  const int steps = denoiser.schedule().steps;
  for (const auto& sample : query) {
    const LossTrajectory traj =
        exact_trajectory(denoiser, sample.id, sample.x, config.noise_seed, config.noise_draws);
    scores.entries.emplace_back(sample.id, trajectory_score(traj, config, steps));
  }
  return scores;
}

MembershipScores graybox_scores(const Reconstructor& reconstructor, const QuerySet& query,
                                const AttackConfig& config, const NoiseSchedule& guessed_schedule) {
  MembershipScores scores;
  scores.entries.reserve(query.size());
  const int steps = std::min(reconstructor.steps(), guessed_schedule.steps);
  const int t_trun = truncation_step(config.truncation_fraction, steps);
  // Only the steps that can survive truncation are queried from the facade.
  std::set<int> wanted;
  for (int t = 1; t <= std::min(t_trun, steps); ++t) wanted.insert(t);
  if (wanted.empty()) {
    throw EmptyTrajectoryError("graybox_scores: truncation leaves no reconstruction steps");
  }
  for (const auto& sample : query) {
    const LossTrajectory traj = estimated_trajectory(reconstructor, sample.id, sample.x,
                                                     guessed_schedule, wanted, config.noise_seed);
    scores.entries.emplace_back(sample.id, trajectory_score(traj, config, steps));
  }
  return scores;
}

MembershipScores shadow_scores(const DiffusionModel& shadow, const QuerySet& query,
                               const AttackConfig& config) {
  const ModelDenoiser denoiser(shadow);
  if (config.shadow_whitebox) {
    return whitebox_scores(denoiser, query, config);
  }
  const DenoiserReconstructor facade(denoiser);
  return graybox_scores(facade, query, config, shadow.schedule);
}

MembershipScores blackbox_specific_scores(const Denoiser& target, const QuerySet& query,
                                          const TrainConfig& shadow_config,
                                          const AttackConfig& config) {
  if (config.synthetic_count < 1) {
    throw std::invalid_argument("blackbox_specific_scores: synthetic_count must be >= 1");
  }
  const uint64_t sampling_seed = mix_seed({0x5A4Du, config.noise_seed});
  const auto synthetic = ancestral_sample(target, config.synthetic_count, sampling_seed);
  const TrainResult shadow = train_model(synthetic, shadow_config);
  return shadow_scores(shadow.model, query, config);
}

double cosine_distance(const std::vector<double>& u, const std::vector<double>& v) {
  if (u.size() != v.size()) throw std::invalid_argument("cosine_distance: dimension mismatch");
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) return 1.0;
  return 1.0 - dot / std::sqrt(nu * nv);
}

std::vector<double> apply_feature_map(const std::vector<double>& x, const AttackConfig& config) {
  if (config.feature_map == FeatureMapKind::Identity) return x;
  const int in_dim = static_cast<int>(x.size());
  const int out_dim = config.projection_dim > 0 ? config.projection_dim : in_dim;
  // Fixed-seed Gaussian projection; rows are generated in a deterministic
  // order so the map is identical for every input.
  Rng rng(mix_seed({0xFEA7u, config.feature_seed}));
  std::vector<double> out(static_cast<size_t>(out_dim), 0.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(out_dim));
  for (int r = 0; r < out_dim; ++r) {
    double acc = 0.0;
    for (int c = 0; c < in_dim; ++c) {
      acc += rng.gaussian() * x[static_cast<size_t>(c)];
    }
    out[static_cast<size_t>(r)] = scale * acc;
  }
  return out;
}

MembershipScores blackbox_agnostic_scores(const std::vector<std::vector<double>>& synthetic,
                                          const QuerySet& query, const AttackConfig& config) {
  if (synthetic.empty()) {
    throw std::invalid_argument("blackbox_agnostic_scores: empty synthetic set");
  }
  std::vector<std::vector<double>> synthetic_features;
  synthetic_features.reserve(synthetic.size());
  for (const auto& s : synthetic) synthetic_features.push_back(apply_feature_map(s, config));

  MembershipScores scores;
  scores.entries.reserve(query.size());
  for (const auto& sample : query) {
    const auto f = apply_feature_map(sample.x, config);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& sf : synthetic_features) {
      best = std::min(best, cosine_distance(f, sf));
    }
    scores.entries.emplace_back(sample.id, best);
  }
  return scores;
}

std::vector<int> decide(const MembershipScores& scores, double threshold) {
  std::vector<int> bits;
  bits.reserve(scores.entries.size());
  for (const auto& [id, score] : scores.entries) {
    bits.push_back(score < threshold ? 1 : 0);
  }
  return bits;
}

double median_threshold(const MembershipScores& scores) {
  if (scores.entries.empty()) throw std::invalid_argument("median_threshold: no scores");
  std::vector<double> values;
  values.reserve(scores.entries.size());
  for (const auto& [id, score] : scores.entries) values.push_back(score);
  return apply_statistic(values, Statistic::Median);
}

}  // namespace diffmia
