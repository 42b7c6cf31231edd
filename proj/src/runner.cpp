#include "diffmia/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include "diffmia/csvio.hpp"
#include "diffmia/rng.hpp"

namespace diffmia {

namespace fs = std::filesystem;

Harness make_harness(const DatasetSpec& spec, int member_count, uint64_t seed) {
  Harness h;
  const int query_size = std::min(spec.query_size, 2 * member_count);
  h.dataset = make_gaussian_mixture(spec.size, spec.components, spec.dim, spec.separation,
                                    mix_seed({0xD5u, seed}));
  h.split = split(h.dataset, member_count, query_size, mix_seed({0x59u, seed}));
  // Preprocessing statistics come from the member split only; non-members
  // must not leak into them.
  standardize(h.dataset, h.split.member_ids);
  h.query = make_query_set(h.dataset, h.split);
  h.member_points = gather(h.dataset, h.split.member_ids);
  return h;
}

TrainConfig resolve_train(const TrainConfig& base, int training_set_size, uint64_t seed) {
  TrainConfig cfg = base;
  cfg.seed = mix_seed({0x7EA1u, seed});
  cfg.batch_size = std::min(cfg.batch_size, training_set_size);
  return cfg;
}

std::vector<int> query_labels(const MembershipScores& scores, const QuerySet& query) {
  std::map<int64_t, bool> truth;
  for (const auto& q : query) truth[q.id] = q.is_member;
  std::vector<int> labels;
  labels.reserve(scores.entries.size());
  for (const auto& [id, score] : scores.entries) labels.push_back(truth.at(id) ? 1 : 0);
  return labels;
}

AttackReport evaluate_scores(const MembershipScores& scores, const QuerySet& query) {
  std::vector<double> values;
  values.reserve(scores.entries.size());
  for (const auto& [id, score] : scores.entries) values.push_back(score);
  return evaluate_attack(values, query_labels(scores, query));
}

MembershipScores run_attack(const DiffusionModel& model, const QuerySet& query,
                            const AttackSpec& spec, const TrainConfig& base_train, uint64_t seed) {
  const AttackConfig config = resolve_attack(spec, seed);
  const ModelDenoiser denoiser(model);
  switch (spec.scenario) {
    case Scenario::WhiteBox:
      return whitebox_scores(denoiser, query, config);
    case Scenario::GrayBox: {
      const DenoiserReconstructor facade(denoiser);
      const ScheduleKind guess = config.scheduler_guess.value_or(model.schedule.kind);
      const NoiseSchedule guessed = build_schedule(guess, model.schedule.steps);
      return graybox_scores(facade, query, config, guessed);
    }
    case Scenario::BlackBoxSpecific: {
      TrainConfig shadow_cfg = base_train;
      shadow_cfg.seed = mix_seed({0x5AADu, seed});
      if (spec.shadow_diffusion_steps) shadow_cfg.diffusion_steps = *spec.shadow_diffusion_steps;
      if (spec.shadow_train_steps) shadow_cfg.steps = *spec.shadow_train_steps;
      shadow_cfg.batch_size = std::min(shadow_cfg.batch_size, spec.synthetic_count);
      return blackbox_specific_scores(denoiser, query, shadow_cfg, config);
    }
    case Scenario::BlackBoxAgnostic: {
      std::vector<std::vector<double>> synthetic;
      if (!spec.samples_path.empty()) {
        synthetic = load_vectors_csv(spec.samples_path);
      } else {
        synthetic = ancestral_sample(denoiser, config.synthetic_count,
                                     mix_seed({0xA6A5u, config.noise_seed}));
      }
      return blackbox_agnostic_scores(synthetic, query, config);
    }
  }
  throw std::invalid_argument("run_attack: unknown scenario");
}

std::string target_checkpoint_path(const ExperimentConfig& config) {
  return config.out_dir + "/target.ckpt";
}

std::string report_csv_path(const ExperimentConfig& config) {
  return config.out_dir + "/report.csv";
}

std::string scores_csv_path(const ExperimentConfig& config, size_t attack_index,
                            Scenario scenario) {
  return config.out_dir + "/scores_" + std::to_string(attack_index) + "_" + to_string(scenario) +
         ".csv";
}

std::string sweep_results_path(const ExperimentConfig& config) {
  return config.out_dir + "/sweep/results.csv";
}

void write_scores_csv(const std::string& path, const MembershipScores& scores,
                      const QuerySet& query, const AttackConfig& config) {
  std::map<int64_t, bool> truth;
  for (const auto& q : query) truth[q.id] = q.is_member;
  std::vector<std::vector<std::string>> rows;
  rows.reserve(scores.entries.size());
  for (const auto& [id, score] : scores.entries) {
    rows.push_back({std::to_string(id), format_double(score),
                    truth.at(id) ? "1" : "0", to_string(config.scenario),
                    to_string(config.statistic), format_double(config.truncation_fraction)});
  }
  write_csv(path, {"sample_id", "score", "is_member", "scenario", "statistic",
                   "truncation_fraction"},
            rows);
}

namespace {

void write_loss_log(const std::string& path, const std::vector<std::pair<int, double>>& log) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(log.size());
  for (const auto& [step, loss] : log) {
    rows.push_back({std::to_string(step), format_double(loss)});
  }
  write_csv(path, {"step", "loss"}, rows);
}

std::vector<std::string> report_header() {
  return {"scenario", "statistic",   "truncation_fraction", "suppression_keep",
          "scheduler_guess", "member_count", "seed",        "auc",
          "tpr_at_0.001",    "tpr_at_0.01",  "accuracy",    "f1",
          "error",           "config_hash"};
}

std::vector<std::string> report_row(const AttackSpec& spec, const AttackConfig& attack,
                                    int member_count, uint64_t seed, const AttackReport* report,
                                    const std::string& error, const std::string& hash) {
  auto opt_str = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string("none");
  };
  std::vector<std::string> row;
  row.push_back(to_string(spec.scenario));
  row.push_back(to_string(attack.statistic));
  row.push_back(format_double(attack.truncation_fraction));
  row.push_back(opt_str(attack.suppression_keep));
  row.push_back(attack.scheduler_guess ? to_string(*attack.scheduler_guess) : "none");
  row.push_back(std::to_string(member_count));
  row.push_back(std::to_string(seed));
  if (report) {
    row.push_back(format_double(report->auc));
    row.push_back(format_double(report->tpr_at.at(0.001)));
    row.push_back(format_double(report->tpr_at.at(0.01)));
    row.push_back(format_double(report->accuracy));
    row.push_back(format_double(report->f1));
    row.push_back("");
  } else {
    for (int i = 0; i < 5; ++i) row.push_back("");
    row.push_back(error);
  }
  row.push_back(hash);
  return row;
}

int worker_count(size_t cells) {
  unsigned n = std::thread::hardware_concurrency();
  if (n == 0) n = 1;
  if (const char* env = std::getenv("DIFFMIA_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  return static_cast<int>(std::min<size_t>(n, std::max<size_t>(cells, 1)));
}

}  // namespace

void cmd_train(const ExperimentConfig& config) {
  fs::create_directories(config.out_dir);
  const Harness harness = make_harness(config.dataset, config.dataset.member_count, config.seed);
  const TrainConfig train_cfg =
      resolve_train(config.train, static_cast<int>(harness.member_points.size()), config.seed);
  const TrainResult result = train_model(harness.member_points, train_cfg);
  save_checkpoint(result.model, target_checkpoint_path(config));
  write_loss_log(config.out_dir + "/train_loss.csv", result.loss_log);
  save_dataset(harness.dataset, config.out_dir + "/dataset.csv");
}

void cmd_sample(const ExperimentConfig& config, const std::string& checkpoint_path, int count,
                const std::string& out_path) {
  const DiffusionModel model = load_checkpoint(checkpoint_path);
  const ModelDenoiser denoiser(model);
  const auto samples = ancestral_sample(denoiser, count, mix_seed({0x5A3Fu, config.seed}));
  fs::create_directories(fs::path(out_path).parent_path().empty()
                             ? fs::path(".")
                             : fs::path(out_path).parent_path());
  save_vectors_csv(samples, out_path);
}

void cmd_attack(const ExperimentConfig& config) {
  if (config.attacks.empty()) throw ConfigError("attack: config lists no attacks");
  const std::string ckpt = target_checkpoint_path(config);
  bool needs_checkpoint = false;
  for (const auto& spec : config.attacks) {
    if (spec.scenario != Scenario::BlackBoxAgnostic || spec.samples_path.empty()) {
      needs_checkpoint = true;
    }
    if (!spec.samples_path.empty() && !fs::exists(spec.samples_path)) {
      throw ConfigError("attack: samples file not found: " + spec.samples_path);
    }
  }
  if (needs_checkpoint && !fs::exists(ckpt)) {
    throw ConfigError("attack: checkpoint not found: " + ckpt + " (run train first)");
  }
  fs::create_directories(config.out_dir);

  DiffusionModel model;
  if (needs_checkpoint) model = load_checkpoint(ckpt);
  const Harness harness = make_harness(config.dataset, config.dataset.member_count, config.seed);
  const std::string hash = config_hash(config);

  std::vector<std::vector<std::string>> rows;
  for (size_t i = 0; i < config.attacks.size(); ++i) {
    const AttackSpec& spec = config.attacks[i];
    const AttackConfig attack = resolve_attack(spec, config.seed);
    const MembershipScores scores = run_attack(model, harness.query, spec, config.train, config.seed);
    const AttackReport report = evaluate_scores(scores, harness.query);
    write_scores_csv(scores_csv_path(config, i, spec.scenario), scores, harness.query, attack);
    rows.push_back(report_row(spec, attack, config.dataset.member_count, config.seed, &report,
                              "", hash));
  }
  write_csv(report_csv_path(config), report_header(), rows);
}

namespace {

struct SweepCell {
  AttackSpec spec;
  int member_count;
  uint64_t seed;
};

std::vector<SweepCell> enumerate_cells(const ExperimentConfig& config) {
  const SweepSpec& sweep = config.sweep;
  const std::vector<std::string> scenarios =
      sweep.scenarios.empty() ? std::vector<std::string>{"whitebox"} : sweep.scenarios;
  std::vector<std::optional<Statistic>> statistics;
  if (sweep.statistics.empty()) {
    statistics.push_back(std::nullopt);
  } else {
    for (const auto& s : sweep.statistics) statistics.push_back(statistic_from_string(s));
  }
  const std::vector<double> fractions =
      sweep.truncation_fractions.empty() ? std::vector<double>{0.75} : sweep.truncation_fractions;
  const std::vector<int> member_counts = sweep.member_counts.empty()
                                             ? std::vector<int>{config.dataset.member_count}
                                             : sweep.member_counts;
  const std::vector<double> keeps =
      sweep.suppression_keeps.empty() ? std::vector<double>{0.0} : sweep.suppression_keeps;
  const std::vector<std::string> guesses =
      sweep.scheduler_guesses.empty() ? std::vector<std::string>{"none"} : sweep.scheduler_guesses;
  const std::vector<uint64_t> seeds =
      sweep.seeds.empty() ? std::vector<uint64_t>{config.seed} : sweep.seeds;

  std::vector<SweepCell> cells;
  for (const auto& scenario : scenarios) {
    for (const auto& statistic : statistics) {
      for (double fraction : fractions) {
        for (int member_count : member_counts) {
          for (double keep : keeps) {
            for (const auto& guess : guesses) {
              for (uint64_t seed : seeds) {
                SweepCell cell;
                cell.spec.scenario = scenario_from_string(scenario);
                cell.spec.statistic = statistic;
                cell.spec.truncation_fraction = fraction;
                if (keep > 0.0) cell.spec.suppression_keep = keep;
                if (guess != "none") cell.spec.scheduler_guess = schedule_kind_from_string(guess);
                cell.member_count = member_count;
                cell.seed = seed;
                cells.push_back(std::move(cell));
              }
            }
          }
        }
      }
    }
  }
  return cells;
}

std::string cell_hash(const std::string& base_hash, const SweepCell& cell, size_t index) {
  uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  mix(base_hash);
  mix(to_string(cell.spec.scenario));
  mix(cell.spec.statistic ? to_string(*cell.spec.statistic) : "default");
  mix(format_double(cell.spec.truncation_fraction.value_or(0.75)));
  mix(cell.spec.suppression_keep ? format_double(*cell.spec.suppression_keep) : "none");
  mix(cell.spec.scheduler_guess ? to_string(*cell.spec.scheduler_guess) : "none");
  mix(std::to_string(cell.member_count));
  mix(std::to_string(cell.seed));
  mix(std::to_string(index));
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

void cmd_sweep(const ExperimentConfig& config) {
  const std::vector<SweepCell> cells = enumerate_cells(config);
  const std::string sweep_dir = config.out_dir + "/sweep";
  const std::string cells_dir = sweep_dir + "/cells";
  const std::string models_dir = sweep_dir + "/models";
  fs::create_directories(cells_dir);
  fs::create_directories(models_dir);
  const std::string base_hash = config_hash(config);
  const size_t columns = report_header().size();

  // Models depend only on (member_count, seed); train each once and reuse the
  // checkpoint across cells and across resumed runs.
  std::map<std::pair<int, uint64_t>, DiffusionModel> models;
  std::map<std::pair<int, uint64_t>, Harness> harnesses;
  for (const auto& cell : cells) {
    const auto key = std::make_pair(cell.member_count, cell.seed);
    if (harnesses.count(key)) continue;
    harnesses.emplace(key, make_harness(config.dataset, cell.member_count, cell.seed));
    const std::string model_path = models_dir + "/m" + std::to_string(cell.member_count) + "_s" +
                                   std::to_string(cell.seed) + ".ckpt";
    if (fs::exists(model_path)) {
      models.emplace(key, load_checkpoint(model_path));
    } else {
      const Harness& h = harnesses.at(key);
      const TrainConfig train_cfg =
          resolve_train(config.train, static_cast<int>(h.member_points.size()), cell.seed);
      TrainResult result = train_model(h.member_points, train_cfg);
      save_checkpoint(result.model, model_path);
      models.emplace(key, std::move(result.model));
    }
  }

  std::vector<std::vector<std::string>> rows(cells.size());
  std::atomic<size_t> next{0};
  auto run_cell = [&](size_t index) {
    const SweepCell& cell = cells[index];
    const std::string hash = cell_hash(base_hash, cell, index);
    const std::string cell_path = cells_dir + "/" + hash + ".csv";
    if (fs::exists(cell_path)) {
      std::vector<std::string> header;
      const auto existing = read_csv(cell_path, &header);
      if (existing.size() == 1 && existing.front().size() == columns) {
        rows[index] = existing.front();
        return;
      }
    }
    const auto key = std::make_pair(cell.member_count, cell.seed);
    const Harness& harness = harnesses.at(key);
    const DiffusionModel& model = models.at(key);
    const AttackConfig attack = resolve_attack(cell.spec, cell.seed);
    std::vector<std::string> row;
    try {
      const MembershipScores scores =
          run_attack(model, harness.query, cell.spec, config.train, cell.seed);
      const AttackReport report = evaluate_scores(scores, harness.query);
      row = report_row(cell.spec, attack, cell.member_count, cell.seed, &report, "", hash);
    } catch (const std::exception& e) {
      row = report_row(cell.spec, attack, cell.member_count, cell.seed, nullptr, e.what(), hash);
    }
    write_csv(cell_path, report_header(), {row});
    rows[index] = std::move(row);
  };

  const int workers = worker_count(cells.size());
  if (workers <= 1) {
    for (size_t i = 0; i < cells.size(); ++i) run_cell(i);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&]() {
        for (size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1)) {
          run_cell(i);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  write_csv(sweep_results_path(config), report_header(), rows);
}

void cmd_report(const std::string& scores_csv, const std::string& out_prefix) {
  std::vector<std::string> header;
  const auto rows = read_csv(scores_csv, &header);
  if (rows.empty()) throw std::runtime_error("report: empty scores file " + scores_csv);
  std::vector<double> scores;
  std::vector<int> labels;
  scores.reserve(rows.size());
  labels.reserve(rows.size());
  for (const auto& row : rows) {
    if (row.size() < 3) throw std::runtime_error("report: malformed scores row");
    scores.push_back(std::stod(row[1]));
    labels.push_back(std::stoi(row[2]));
  }
  const RocCurve curve = roc_curve(scores, labels);
  const auto [accuracy, f1] = accuracy_f1_at_median(scores, labels);

  std::vector<std::vector<std::string>> roc_rows;
  roc_rows.reserve(curve.points.size());
  for (const auto& p : curve.points) {
    roc_rows.push_back({format_double(p.fpr), format_double(p.tpr), format_double(p.threshold)});
  }
  write_csv(out_prefix + "_roc.csv", {"fpr", "tpr", "threshold"}, roc_rows);

  write_csv(out_prefix + "_metrics.csv",
            {"auc", "tpr_at_0.001", "tpr_at_0.01", "accuracy", "f1"},
            {{format_double(curve.auc), format_double(tpr_at_fpr(curve, 0.001)),
              format_double(tpr_at_fpr(curve, 0.01)), format_double(accuracy),
              format_double(f1)}});
}

}  // namespace diffmia
