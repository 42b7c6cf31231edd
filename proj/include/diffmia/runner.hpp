#pragma once

#include <string>
#include <vector>

#include "diffmia/config.hpp"
#include "diffmia/metrics.hpp"

namespace diffmia {

// Dataset, split and query set assembled for one experiment cell. The query
// size is clamped so the member side never exceeds the member pool.
struct Harness {
  Dataset dataset;
  SplitSpec split;
  QuerySet query;
  std::vector<std::vector<double>> member_points;
};

Harness make_harness(const DatasetSpec& spec, int member_count, uint64_t seed);

// Train configuration for one cell: per-cell seed, batch clamped to the
// member pool.
TrainConfig resolve_train(const TrainConfig& base, int training_set_size, uint64_t seed);

// Runs one resolved attack against a trained model and query set.
MembershipScores run_attack(const DiffusionModel& model, const QuerySet& query,
                            const AttackSpec& spec, const TrainConfig& base_train, uint64_t seed);

// Scores + ground truth -> full report.
AttackReport evaluate_scores(const MembershipScores& scores, const QuerySet& query);

std::vector<int> query_labels(const MembershipScores& scores, const QuerySet& query);

// Command entry points shared by the CLI binary and the test suites.
// Each returns 0 on success; config errors and runtime failures surface as
// exceptions (ConfigError / std::exception) for the caller to map to exit
// codes.
void cmd_train(const ExperimentConfig& config);
void cmd_sample(const ExperimentConfig& config, const std::string& checkpoint_path, int count,
                const std::string& out_path);
void cmd_attack(const ExperimentConfig& config);
void cmd_sweep(const ExperimentConfig& config);
void cmd_report(const std::string& scores_csv, const std::string& out_prefix);

// Paths derived from a config.
std::string target_checkpoint_path(const ExperimentConfig& config);
std::string report_csv_path(const ExperimentConfig& config);
std::string scores_csv_path(const ExperimentConfig& config, size_t attack_index,
                            Scenario scenario);
std::string sweep_results_path(const ExperimentConfig& config);

void write_scores_csv(const std::string& path, const MembershipScores& scores,
                      const QuerySet& query, const AttackConfig& config);

}  // namespace diffmia
