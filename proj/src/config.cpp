#include "diffmia/config.hpp"

#include <cstdio>
#include <fstream>

#include "diffmia/rng.hpp"
#include "json.hpp"

namespace diffmia {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::vector<std::string>& allowed, const std::string& ctx) {
  if (!obj.is_object()) throw ConfigError(ctx + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const auto& a : allowed) {
      if (key == a) {
        ok = true;
        break;
      }
    }
    if (!ok) throw ConfigError(ctx + ": unknown key '" + key + "'");
  }
}

template <typename T>
T require(const json& obj, const std::string& key, const std::string& ctx) {
  if (!obj.contains(key)) throw ConfigError(ctx + ": missing required key '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(ctx + ": bad value for '" + key + "': " + e.what());
  }
}

template <typename T>
T value_or(const json& obj, const std::string& key, const T& fallback, const std::string& ctx) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(ctx + ": bad value for '" + key + "': " + e.what());
  }
}

DatasetSpec parse_dataset(const json& obj) {
  check_keys(obj, {"dim", "components", "separation", "size", "member_count", "query_size"},
             "dataset");
  DatasetSpec spec;
  spec.dim = value_or(obj, "dim", spec.dim, "dataset");
  spec.components = value_or(obj, "components", spec.components, "dataset");
  spec.separation = value_or(obj, "separation", spec.separation, "dataset");
  spec.size = value_or(obj, "size", spec.size, "dataset");
  spec.member_count = value_or(obj, "member_count", spec.member_count, "dataset");
  spec.query_size = value_or(obj, "query_size", spec.query_size, "dataset");
  return spec;
}

TrainConfig parse_train(const json& obj) {
  check_keys(obj,
             {"steps", "batch_size", "learning_rate", "parameterization", "schedule", "T",
              "hidden_dims", "time_embed_dim", "activation"},
             "train");
  TrainConfig cfg;
  cfg.steps = value_or(obj, "steps", cfg.steps, "train");
  cfg.batch_size = value_or(obj, "batch_size", cfg.batch_size, "train");
  cfg.learning_rate = value_or(obj, "learning_rate", cfg.learning_rate, "train");
  if (obj.contains("parameterization")) {
    cfg.parameterization = parameterization_from_string(obj.at("parameterization").get<std::string>());
  }
  if (obj.contains("schedule")) {
    cfg.schedule_kind = schedule_kind_from_string(obj.at("schedule").get<std::string>());
  }
  cfg.diffusion_steps = value_or(obj, "T", cfg.diffusion_steps, "train");
  cfg.hidden_dims = value_or(obj, "hidden_dims", cfg.hidden_dims, "train");
  cfg.time_embed_dim = value_or(obj, "time_embed_dim", cfg.time_embed_dim, "train");
  if (obj.contains("activation")) {
    cfg.activation = activation_from_string(obj.at("activation").get<std::string>());
  }
  return cfg;
}

AttackSpec parse_attack(const json& obj, size_t index) {
  const std::string ctx = "attacks[" + std::to_string(index) + "]";
  check_keys(obj,
             {"scenario", "statistic", "truncation_fraction", "suppression_keep",
              "suppress_before_truncation", "scheduler_guess", "feature_map", "projection_dim",
              "synthetic_count", "shadow_whitebox", "noise_draws", "shadow_T",
              "shadow_train_steps", "samples_path"},
             ctx);
  AttackSpec spec;
  spec.scenario = scenario_from_string(require<std::string>(obj, "scenario", ctx));
  if (obj.contains("statistic")) {
    spec.statistic = statistic_from_string(obj.at("statistic").get<std::string>());
  }
  if (obj.contains("truncation_fraction")) {
    spec.truncation_fraction = obj.at("truncation_fraction").get<double>();
  }
  if (obj.contains("suppression_keep")) {
    spec.suppression_keep = obj.at("suppression_keep").get<double>();
  }
  spec.suppress_before_truncation =
      value_or(obj, "suppress_before_truncation", false, ctx);
  if (obj.contains("scheduler_guess")) {
    spec.scheduler_guess = schedule_kind_from_string(obj.at("scheduler_guess").get<std::string>());
  }
  if (obj.contains("feature_map")) {
    spec.feature_map = feature_map_from_string(obj.at("feature_map").get<std::string>());
  }
  spec.projection_dim = value_or(obj, "projection_dim", 0, ctx);
  spec.synthetic_count = value_or(obj, "synthetic_count", spec.synthetic_count, ctx);
  spec.shadow_whitebox = value_or(obj, "shadow_whitebox", false, ctx);
  spec.noise_draws = value_or(obj, "noise_draws", 1, ctx);
  if (obj.contains("shadow_T")) spec.shadow_diffusion_steps = obj.at("shadow_T").get<int>();
  if (obj.contains("shadow_train_steps")) {
    spec.shadow_train_steps = obj.at("shadow_train_steps").get<int>();
  }
  spec.samples_path = value_or(obj, "samples_path", std::string(), ctx);
  return spec;
}

SweepSpec parse_sweep(const json& obj) {
  check_keys(obj,
             {"scenario", "statistic", "truncation_fraction", "member_count", "suppression_keep",
              "scheduler_guess", "seed"},
             "sweep");
  SweepSpec spec;
  spec.scenarios = value_or(obj, "scenario", spec.scenarios, "sweep");
  spec.statistics = value_or(obj, "statistic", spec.statistics, "sweep");
  spec.truncation_fractions =
      value_or(obj, "truncation_fraction", spec.truncation_fractions, "sweep");
  spec.member_counts = value_or(obj, "member_count", spec.member_counts, "sweep");
  spec.suppression_keeps = value_or(obj, "suppression_keep", spec.suppression_keeps, "sweep");
  spec.scheduler_guesses = value_or(obj, "scheduler_guess", spec.scheduler_guesses, "sweep");
  spec.seeds = value_or(obj, "seed", spec.seeds, "sweep");
  for (const auto& s : spec.scenarios) scenario_from_string(s);
  for (const auto& s : spec.statistics) statistic_from_string(s);
  for (const auto& s : spec.scheduler_guesses) {
    if (s != "none") schedule_kind_from_string(s);
  }
  return spec;
}

json dataset_to_json(const DatasetSpec& spec) {
  return json{{"dim", spec.dim},
              {"components", spec.components},
              {"separation", spec.separation},
              {"size", spec.size},
              {"member_count", spec.member_count},
              {"query_size", spec.query_size}};
}

json train_to_json(const TrainConfig& cfg) {
  return json{{"steps", cfg.steps},
              {"batch_size", cfg.batch_size},
              {"learning_rate", cfg.learning_rate},
              {"parameterization", to_string(cfg.parameterization)},
              {"schedule", to_string(cfg.schedule_kind)},
              {"T", cfg.diffusion_steps},
              {"hidden_dims", cfg.hidden_dims},
              {"time_embed_dim", cfg.time_embed_dim},
              {"activation", to_string(cfg.activation)}};
}

json attack_to_json(const AttackSpec& spec) {
  json obj;
  obj["scenario"] = to_string(spec.scenario);
  if (spec.statistic) obj["statistic"] = to_string(*spec.statistic);
  if (spec.truncation_fraction) obj["truncation_fraction"] = *spec.truncation_fraction;
  if (spec.suppression_keep) obj["suppression_keep"] = *spec.suppression_keep;
  if (spec.suppress_before_truncation) obj["suppress_before_truncation"] = true;
  if (spec.scheduler_guess) obj["scheduler_guess"] = to_string(*spec.scheduler_guess);
  if (spec.feature_map != FeatureMapKind::Identity) obj["feature_map"] = to_string(spec.feature_map);
  if (spec.projection_dim != 0) obj["projection_dim"] = spec.projection_dim;
  obj["synthetic_count"] = spec.synthetic_count;
  if (spec.shadow_whitebox) obj["shadow_whitebox"] = true;
  obj["noise_draws"] = spec.noise_draws;
  if (spec.shadow_diffusion_steps) obj["shadow_T"] = *spec.shadow_diffusion_steps;
  if (spec.shadow_train_steps) obj["shadow_train_steps"] = *spec.shadow_train_steps;
  if (!spec.samples_path.empty()) obj["samples_path"] = spec.samples_path;
  return obj;
}

json sweep_to_json(const SweepSpec& spec) {
  json obj = json::object();
  if (!spec.scenarios.empty()) obj["scenario"] = spec.scenarios;
  if (!spec.statistics.empty()) obj["statistic"] = spec.statistics;
  if (!spec.truncation_fractions.empty()) obj["truncation_fraction"] = spec.truncation_fractions;
  if (!spec.member_counts.empty()) obj["member_count"] = spec.member_counts;
  if (!spec.suppression_keeps.empty()) obj["suppression_keep"] = spec.suppression_keeps;
  if (!spec.scheduler_guesses.empty()) obj["scheduler_guess"] = spec.scheduler_guesses;
  if (!spec.seeds.empty()) obj["seed"] = spec.seeds;
  return obj;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json obj;
  try {
    obj = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    check_keys(obj, {"config_version", "seed", "out_dir", "dataset", "train", "attacks", "sweep"},
               "config");
    ExperimentConfig cfg;
    cfg.config_version = require<int>(obj, "config_version", "config");
    if (cfg.config_version != 1) {
      throw ConfigError("unsupported config_version " + std::to_string(cfg.config_version));
    }
    cfg.seed = value_or(obj, "seed", cfg.seed, "config");
    cfg.out_dir = value_or(obj, "out_dir", cfg.out_dir, "config");
    if (obj.contains("dataset")) cfg.dataset = parse_dataset(obj.at("dataset"));
    if (obj.contains("train")) cfg.train = parse_train(obj.at("train"));
    if (obj.contains("attacks")) {
      const auto& arr = obj.at("attacks");
      if (!arr.is_array()) throw ConfigError("attacks: expected an array");
      for (size_t i = 0; i < arr.size(); ++i) cfg.attacks.push_back(parse_attack(arr[i], i));
    }
    if (obj.contains("sweep")) cfg.sweep = parse_sweep(obj.at("sweep"));
    return cfg;
  } catch (const std::invalid_argument& e) {
    // Bad enum values are config mistakes, same as unknown keys.
    throw ConfigError(e.what());
  }
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config(text);
}

std::string dump_config(const ExperimentConfig& cfg) {
  json obj;
  obj["config_version"] = cfg.config_version;
  obj["seed"] = cfg.seed;
  obj["out_dir"] = cfg.out_dir;
  obj["dataset"] = dataset_to_json(cfg.dataset);
  obj["train"] = train_to_json(cfg.train);
  json attacks = json::array();
  for (const auto& a : cfg.attacks) attacks.push_back(attack_to_json(a));
  obj["attacks"] = attacks;
  if (!cfg.sweep.empty()) obj["sweep"] = sweep_to_json(cfg.sweep);
  return obj.dump(2);
}

std::string config_hash(const ExperimentConfig& cfg) {
  // The hash identifies the experiment; the output location is not part of
  // its identity.
  ExperimentConfig canonical = cfg;
  canonical.out_dir.clear();
  const std::string text = dump_config(canonical);
  // FNV-1a, 64-bit.
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

AttackConfig resolve_attack(const AttackSpec& spec, uint64_t seed) {
  AttackConfig cfg;
  switch (spec.scenario) {
    case Scenario::WhiteBox: cfg = AttackConfig::whitebox_defaults(); break;
    case Scenario::GrayBox: cfg = AttackConfig::graybox_defaults(); break;
    case Scenario::BlackBoxSpecific: cfg = AttackConfig::blackbox_specific_defaults(); break;
    case Scenario::BlackBoxAgnostic: cfg = AttackConfig::blackbox_agnostic_defaults(); break;
  }
  if (spec.statistic) cfg.statistic = *spec.statistic;
  if (spec.truncation_fraction) cfg.truncation_fraction = *spec.truncation_fraction;
  cfg.suppression_keep = spec.suppression_keep;
  cfg.suppress_before_truncation = spec.suppress_before_truncation;
  cfg.scheduler_guess = spec.scheduler_guess;
  cfg.feature_map = spec.feature_map;
  cfg.projection_dim = spec.projection_dim;
  cfg.synthetic_count = spec.synthetic_count;
  cfg.shadow_whitebox = spec.shadow_whitebox;
  cfg.noise_draws = spec.noise_draws;
  cfg.noise_seed = mix_seed({0xA77ACu, seed});
  cfg.feature_seed = mix_seed({0xFEA7u, seed});
  return cfg;
}

}  // namespace diffmia
