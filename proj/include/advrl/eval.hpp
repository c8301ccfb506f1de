#pragma once

#include <filesystem>
#include <map>
#include <optional>

#include <json.hpp>

#include "advrl/attacker.hpp"
#include "advrl/baselines.hpp"

namespace advrl {

// One evaluated episode. Derived metrics are validated against their inputs
// whenever a report is written.
struct EpisodeReport {
  std::string env_name;
  std::string strategy;
  std::string method;
  std::uint64_t seed = 0;
  int episode = 0;
  double episode_return = 0.0;
  int episode_length = 0;        // N_t
  long attacks_launched = 0;     // N_s
  long attacks_succeeded = 0;    // N_a
  double r_s = 0.0;
  double r_a = 0.0;
  double r_str = 0.0;
  double r_ltr = 0.0;
  double r_x = 0.0;
  double alpha = 0.5;
  double reward_upper = 0.0;
  double reward_lower = 0.0;
  std::vector<int> attack_steps;
  double mean_l2_dist = 0.0;
  double mean_linf_dist = 0.0;
  long craft_op_count = 0;
};

void validate_report(const EpisodeReport& r);

nlohmann::json report_to_json(const EpisodeReport& r);
EpisodeReport report_from_json(const nlohmann::json& j);

// JSON-lines persistence; every record is validated on write.
void write_reports_jsonl(const std::filesystem::path& path,
                         const std::vector<EpisodeReport>& reports, bool append = false);
std::vector<EpisodeReport> read_reports_jsonl(const std::filesystem::path& path);

struct Aggregate {
  double mean = 0.0;
  double median = 0.0;
  double stddev = 0.0;
  int count = 0;
};
Aggregate aggregate(const std::vector<double>& values);
Aggregate aggregate_r_x(const std::vector<EpisodeReport>& reports);

// Report form of a training episode (strategy label "learned-train").
EpisodeReport training_episode_report(const AttackerEpisodePoint& point, const EnvSpec& env_spec,
                                      AttackMethod method, double alpha, std::uint64_t seed);

struct EvalOptions {
  std::vector<std::uint64_t> seeds;
  int episodes = 1;  // per seed
  double alpha = 0.5;
  int jobs = 1;
  // Optional JSONL step trace: {t, action, reward, done, frame_hash} records
  // plus attack summaries on attacked steps.
  std::optional<std::filesystem::path> trace_path;
};

// Greedy rollouts of victim + timing strategy through the man-in-the-middle.
// Deterministic per seed regardless of the job count.
std::vector<EpisodeReport> evaluate(const Env& env_proto, const LayerStack& victim,
                                    const TimingStrategy& strategy, const AttackSpec& spec,
                                    const EvalOptions& opts);

struct SweepEntry {
  double param = 0.0;
  Aggregate r_x;
  std::vector<EpisodeReport> reports;
};

// Evaluates the strategy over the parameter grid; entries come back in grid
// order. best_of() picks the highest median r_x.
std::vector<SweepEntry> sweep_uniform(const Env& env_proto, const LayerStack& victim,
                                      const AttackSpec& spec, const std::vector<double>& p_grid,
                                      const EvalOptions& opts);
std::vector<SweepEntry> sweep_strategic(const Env& env_proto, const LayerStack& victim,
                                        const AttackSpec& spec,
                                        const std::vector<double>& threshold_grid,
                                        const EvalOptions& opts);
const SweepEntry& best_of(const std::vector<SweepEntry>& entries);

// Matched-budget rate for the Uniform baseline: the learned attacker's mean
// attack rate over its evaluation reports.
double matched_uniform_p(const std::vector<EpisodeReport>& learned_reports);

struct TransferCell {
  std::string from_context;
  std::string to_context;
  double r_x = 0.0;
  double delta_vs_native = 0.0;  // r_x - native r_x of the to-context
};

// A (victim, attacker) pair trained natively on one environment.
struct EnvContext {
  std::string name;
  const Env* env_proto = nullptr;
  const LayerStack* victim = nullptr;
  std::shared_ptr<const LayerStack> attacker;
};

// Full From x To grid of learned-attacker performance across environments.
std::vector<TransferCell> transfer_env(const std::vector<EnvContext>& contexts,
                                       const AttackSpec& spec, const EvalOptions& opts);

// Policy-trained-under-method x eval-time-method grid on one environment.
std::vector<TransferCell> transfer_attack(
    const Env& env_proto, const LayerStack& victim,
    const std::map<AttackMethod, std::shared_ptr<const LayerStack>>& policies,
    const std::vector<AttackMethod>& methods, const AttackSpec& base_spec,
    const EvalOptions& opts);

// Fine-tunes a copy of the victim while the frozen attacker injects
// perturbations (crafted white-box against the evolving copy). Returns the
// robust victim; the attacker is bit-identical before and after.
struct AdvTrainResult {
  LayerStack robust_victim;
  std::vector<EpisodePoint> curve;
};
AdvTrainResult adversarial_train(Env& env, const LayerStack& victim, const LayerStack& attacker,
                                 const DqnConfig& finetune_cfg, const AttackSpec& spec,
                                 std::uint64_t seed);

// Clean and attacked mean returns for the original and robust victims,
// attacked by the frozen attacker under each crafting method.
struct AdvTrainReport {
  double clean_original = 0.0;
  double clean_robust = 0.0;
  std::map<AttackMethod, double> attacked_original;
  std::map<AttackMethod, double> attacked_robust;
};
AdvTrainReport advtrain_report(const Env& env_proto, const LayerStack& original,
                               const LayerStack& robust, std::shared_ptr<const LayerStack> attacker,
                               const AttackSpec& base_spec, const std::vector<AttackMethod>& methods,
                               const EvalOptions& opts);

// Per-method perturbation sizes over frames visited in clean greedy rollouts,
// plus the deterministic op-count cost model. Frames where every method
// succeeds are aggregated separately.
struct DistanceRow {
  std::string method;
  double mean_l2 = 0.0;
  double mean_linf = 0.0;
  long op_count = 0;
  int frames_attacked = 0;
  int frames_succeeded = 0;
  double mean_l2_all_succeed = 0.0;
};
struct DistanceReport {
  std::vector<DistanceRow> rows;
  int frames_sampled = 0;
  int frames_all_succeed = 0;
};
DistanceReport distance_report(const Env& env_proto, const LayerStack& victim,
                               const std::vector<AttackSpec>& specs, const EvalOptions& opts,
                               int frame_stride = 5);

}  // namespace advrl
