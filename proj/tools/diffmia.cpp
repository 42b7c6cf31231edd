// Experiment runner: trains target models, draws samples, executes
// membership-inference attacks, sweeps configurations and emits CSV reports.
//
// Exit codes: 0 success, 1 usage/config error, 2 runtime failure.

#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "diffmia/config.hpp"
#include "diffmia/runner.hpp"

namespace {

diffmia::ExperimentConfig load_with_overrides(const std::string& config_path,
                                              const std::string& out_override,
                                              bool seed_set, uint64_t seed_override) {
  diffmia::ExperimentConfig config = diffmia::load_config(config_path);
  if (!out_override.empty()) config.out_dir = out_override;
  if (seed_set) config.seed = seed_override;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"diffmia: diffusion-model membership-inference laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  uint64_t seed_override = 0;
  bool seed_set = false;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment config (JSON)")->required();
    cmd->add_option("--out", out_override, "output directory override");
    cmd->add_option("--seed", seed_override, "global seed override")
        ->each([&](const std::string&) { seed_set = true; });
  };

  CLI::App* train = app.add_subcommand("train", "train the target model, write checkpoint + loss log");
  add_common(train);

  CLI::App* sample = app.add_subcommand("sample", "draw ancestral samples from a checkpoint");
  add_common(sample);
  std::string sample_ckpt;
  std::string sample_out = "samples.csv";
  int sample_count = 512;
  sample->add_option("--checkpoint", sample_ckpt, "checkpoint path (default: out_dir/target.ckpt)");
  sample->add_option("--count", sample_count, "number of samples");
  sample->add_option("--samples-out", sample_out, "output CSV path");

  CLI::App* attack = app.add_subcommand("attack", "run the configured attacks against the checkpoint");
  add_common(attack);

  CLI::App* sweep = app.add_subcommand("sweep", "run the configured sweep grid");
  add_common(sweep);

  CLI::App* report = app.add_subcommand("report", "recompute metrics + ROC points from a scores CSV");
  std::string scores_path;
  std::string report_prefix = "report";
  report->add_option("--scores", scores_path, "scores CSV path")->required();
  report->add_option("--out-prefix", report_prefix, "output file prefix");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (report->parsed()) {
      diffmia::cmd_report(scores_path, report_prefix);
      return 0;
    }
    const diffmia::ExperimentConfig config =
        load_with_overrides(config_path, out_override, seed_set, seed_override);
    if (train->parsed()) {
      diffmia::cmd_train(config);
    } else if (sample->parsed()) {
      const std::string ckpt =
          sample_ckpt.empty() ? diffmia::target_checkpoint_path(config) : sample_ckpt;
      diffmia::cmd_sample(config, ckpt, sample_count, sample_out);
    } else if (attack->parsed()) {
      diffmia::cmd_attack(config);
    } else if (sweep->parsed()) {
      diffmia::cmd_sweep(config);
    }
  } catch (const diffmia::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
