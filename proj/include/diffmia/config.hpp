#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "diffmia/attacks.hpp"
#include "diffmia/train.hpp"

namespace diffmia {

// Configuration problems (unknown keys, bad enum values, missing fields).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct DatasetSpec {
  int dim = 8;
  int components = 4;
  double separation = 6.0;
  int size = 1024;        // total points (members + non-member pool)
  int member_count = 64;
  int query_size = 128;   // balanced: half members, half non-members
};

// One attack to execute. Unset fields resolve to the per-scenario defaults.
struct AttackSpec {
  Scenario scenario = Scenario::WhiteBox;
  std::optional<Statistic> statistic;
  std::optional<double> truncation_fraction;
  std::optional<double> suppression_keep;
  bool suppress_before_truncation = false;
  std::optional<ScheduleKind> scheduler_guess;
  FeatureMapKind feature_map = FeatureMapKind::Identity;
  int projection_dim = 0;
  int synthetic_count = 512;
  bool shadow_whitebox = false;
  int noise_draws = 1;
  std::optional<int> shadow_diffusion_steps;  // shadow T override
  std::optional<int> shadow_train_steps;
  std::string samples_path;  // agnostic: pre-generated synthetic samples
};

// Sweep axes; the cartesian product of the listed values is executed.
struct SweepSpec {
  std::vector<std::string> scenarios;
  std::vector<std::string> statistics;
  std::vector<double> truncation_fractions;
  std::vector<int> member_counts;
  std::vector<double> suppression_keeps;   // 0 encodes "no suppression"
  std::vector<std::string> scheduler_guesses;  // "none" encodes no guess
  std::vector<uint64_t> seeds;

  bool empty() const {
    return scenarios.empty() && statistics.empty() && truncation_fractions.empty() &&
           member_counts.empty() && suppression_keeps.empty() && scheduler_guesses.empty() &&
           seeds.empty();
  }
};

struct ExperimentConfig {
  int config_version = 1;
  uint64_t seed = 1;
  std::string out_dir = "runs/out";
  DatasetSpec dataset;
  TrainConfig train;
  std::vector<AttackSpec> attacks;
  SweepSpec sweep;
};

// Strict parse: unknown keys, missing required keys, and invalid enum values
// are errors.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
std::string dump_config(const ExperimentConfig& config);

// Stable content hash of the canonical serialized form.
std::string config_hash(const ExperimentConfig& config);

// Resolves the optional fields of a spec against the scenario defaults.
AttackConfig resolve_attack(const AttackSpec& spec, uint64_t seed);

}  // namespace diffmia
