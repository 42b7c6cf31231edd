#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "diffmia/data.hpp"
#include "diffmia/diffusion.hpp"
#include "diffmia/train.hpp"

namespace diffmia {

enum class Scenario { WhiteBox, GrayBox, BlackBoxSpecific, BlackBoxAgnostic };
enum class Statistic { Sum, Median, Min, Max };
enum class FeatureMapKind { Identity, RandomProjection };

const char* to_string(Scenario s);
const char* to_string(Statistic s);
const char* to_string(FeatureMapKind f);
Scenario scenario_from_string(const std::string& s);
Statistic statistic_from_string(const std::string& s);
FeatureMapKind feature_map_from_string(const std::string& s);

struct AttackConfig {
  Scenario scenario = Scenario::WhiteBox;
  Statistic statistic = Statistic::Max;
  double truncation_fraction = 0.75;               // T_trun = round(fraction * T)
  std::optional<double> suppression_keep;          // fraction of steps retained
  bool suppress_before_truncation = false;
  std::optional<ScheduleKind> scheduler_guess;     // gray-box forward-pass guess
  FeatureMapKind feature_map = FeatureMapKind::Identity;
  int projection_dim = 0;                          // 0 -> data_dim
  uint64_t feature_seed = 0;
  int synthetic_count = 512;                       // K, black-box scenarios
  bool shadow_whitebox = false;                    // score the shadow white-box style
  int noise_draws = 1;
  uint64_t noise_seed = 0;

  static AttackConfig whitebox_defaults();   // Max, 0.75
  static AttackConfig graybox_defaults();    // Median, 0.75
  static AttackConfig blackbox_specific_defaults();
  static AttackConfig blackbox_agnostic_defaults();
};

// Per-sample membership scores. Orientation is fixed across the artifact:
// lower score means more likely member.
struct MembershipScores {
  std::vector<std::pair<int64_t, double>> entries;
};

// Number of retained low-t steps for a truncation fraction.
int truncation_step(double fraction, int total_steps);

// Keeps exactly the entries with t <= t_trun (intersected with any existing
// mask). Throws EmptyTrajectoryError when nothing survives.
LossTrajectory truncate_trajectory(const LossTrajectory& trajectory, int t_trun);

// Keeps ceil(keep * n) entries, uniformly spaced over the sorted step keys,
// endpoints included.
LossTrajectory subsample_trajectory(const LossTrajectory& trajectory, double keep);

double apply_statistic(const std::vector<double>& values, Statistic statistic);

// Truncation and suppression applied in the configured order, then the
// summary statistic. total_steps is the T the truncation fraction refers to.
double trajectory_score(const LossTrajectory& trajectory, const AttackConfig& config,
                        int total_steps);

// Exact-trajectory attack. Defaults: Max statistic over the lowest 75% of
// steps.
MembershipScores whitebox_scores(const Denoiser& denoiser, const QuerySet& query,
                                 const AttackConfig& config);

// Reconstruction-only attack through the Reconstructor facade; the forward
// noising uses guessed_schedule, which may differ from the schedule the
// model was trained with. Defaults: Median statistic, 75% truncation.
MembershipScores graybox_scores(const Reconstructor& reconstructor, const QuerySet& query,
                                const AttackConfig& config, const NoiseSchedule& guessed_schedule);

// Trains a shadow on ancestral samples of the target and scores the query
// set against the shadow (gray-box by default, white-box with
// config.shadow_whitebox).
MembershipScores blackbox_specific_scores(const Denoiser& target, const QuerySet& query,
                                          const TrainConfig& shadow_config,
                                          const AttackConfig& config);

// Scores the query set against an already trained shadow; the trained-shadow
// path above reduces to this.
MembershipScores shadow_scores(const DiffusionModel& shadow, const QuerySet& query,
                               const AttackConfig& config);

// Nearest-neighbor cosine distance between query and synthetic features.
MembershipScores blackbox_agnostic_scores(const std::vector<std::vector<double>>& synthetic,
                                          const QuerySet& query, const AttackConfig& config);

// 1 - <u, v> / (|u| |v|); zero-norm inputs get distance 1.
double cosine_distance(const std::vector<double>& u, const std::vector<double>& v);

// Feature map used by the model-agnostic attack.
std::vector<double> apply_feature_map(const std::vector<double>& x, const AttackConfig& config);

// bit = 1 iff score < threshold, aligned with scores.entries.
std::vector<int> decide(const MembershipScores& scores, double threshold);

// Median of the scores (mean of the central pair for even counts).
double median_threshold(const MembershipScores& scores);

}  // namespace diffmia
