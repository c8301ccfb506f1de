#pragma once

#include <filesystem>
#include <map>

#include <json.hpp>

#include "advrl/attacker.hpp"

namespace advrl {

nlohmann::json dqn_to_json(const DqnConfig& c);
DqnConfig dqn_from_json(const nlohmann::json& j);
nlohmann::json attack_to_json(const AttackSpec& s);
AttackSpec attack_from_json(const nlohmann::json& j);
nlohmann::json net_to_json(const NetConfig& c);
NetConfig net_from_json(const nlohmann::json& j);

struct StrategyConfig {
  std::string kind = "learned";  // uniform | strategic | learned
  double p = 0.5;
  double threshold = 0.5;
  bool matched = false;                  // uniform only: p taken from learned reports
  std::string matched_reports;           // JSONL path the matched rate is read from
  std::vector<double> uniform_grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::vector<double> threshold_grid = {0.2, 0.4, 0.6, 0.8};
};

struct PathsConfig {
  std::string victim_checkpoint;
  std::string attacker_checkpoint;
  std::map<std::string, std::string> victim_checkpoints;           // per env (transfer)
  std::map<std::string, std::string> attacker_checkpoints;         // per env (transfer)
  std::map<std::string, std::string> method_attacker_checkpoints;  // per crafting method
};

struct EvalConfig {
  int seeds = 5;
  int episodes = 1;
};

struct AdvTrainSection {
  double finetune_fraction = 0.25;  // of victim max_steps
  double epsilon_start = 0.05;      // gentle exploration re-warm for fine-tuning
};

struct TransferSection {
  std::vector<std::string> envs = {"minipong", "gridchase"};
  std::vector<std::string> methods = {"fgsm", "pgd", "cw"};
};

// The whole experiment file. Serializes to a single JSON document; a resolved
// copy (all defaults expanded) is written next to every run's outputs.
struct ExperimentConfig {
  std::uint64_t master_seed = 1;
  std::string output_dir = "runs/out";
  int jobs = 1;

  std::string env_name = "minipong";
  int env_max_steps = 0;  // 0 keeps the environment default

  NetConfig victim_net;
  DqnConfig victim_dqn;

  double alpha = 0.5;
  NetConfig attacker_net;
  DqnConfig attacker_dqn;
  AttackSpec attack;

  StrategyConfig strategy;
  PathsConfig paths;
  EvalConfig eval;
  AdvTrainSection advtrain;
  TransferSection transfer;

  ExperimentConfig();

  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);

  std::unique_ptr<Env> make_environment() const;
  AttackerConfig make_attacker_config() const;
  std::vector<std::uint64_t> eval_seed_list() const;  // derive_seed(master, "eval-seed-<i>")
  void validate() const;
};

ExperimentConfig load_config_file(const std::filesystem::path& path);

// Overrides with prefix ADVRL_, path segments joined by double underscores,
// e.g. ADVRL_VICTIM__DQN__MAX_STEPS=50000 sets victim.dqn.max_steps. Values
// parse as JSON when possible, else as strings. Applied after the file and
// before command-line flags.
void apply_env_overrides(nlohmann::json& config_json,
                         const std::map<std::string, std::string>& env_vars);
std::map<std::string, std::string> collect_env_overrides();  // from the process environment

void write_resolved_config(const std::filesystem::path& path, const ExperimentConfig& cfg);

}  // namespace advrl
