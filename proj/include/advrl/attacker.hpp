#pragma once

#include "advrl/attacks.hpp"
#include "advrl/env.hpp"
#include "advrl/qlearning.hpp"

namespace advrl {

// Running per-episode counters feeding the attacker's reward. All ratios are
// computed exactly; rounding happens only at display time.
struct AttackStats {
  long successful_attacks = 0;  // N_a
  long launched_attacks = 0;    // N_s
  long victim_steps = 0;        // N_t
  double accumulated_reward = 0.0;
  double reward_upper = 0.0;  // R_u
  double reward_lower = 0.0;  // R_l

  static AttackStats for_env(const EnvSpec& spec);
  void reset_counters();
};

// N_a / N_s; 0 when no attack has been launched yet.
double success_rate(const AttackStats& stats);
// N_s / N_t; 0 before the first victim step.
double attack_rate(const AttackStats& stats);
// r_str = r_s - r_a, in [-1, 1].
double short_term_reward(const AttackStats& stats);
// r_ltr = (R_u - r) / (R_u - R_l), clamped to [0, 1].
double long_term_reward(const AttackStats& stats);
// r_X = alpha * r_str + (1 - alpha) * r_ltr.
double combined_reward(const AttackStats& stats, double alpha);

struct AttackerConfig {
  double alpha = 0.5;
  DqnConfig dqn;
  AttackSpec attack;
  NetConfig net;  // attacker policy network shape (2 outputs)
  AttackerConfig();
  void validate() const;
};

struct MitmOutcome {
  int executed_action = 0;
  StepResult step;
  bool attacked = false;
  bool attack_success = false;
  double linf_dist = 0.0;
  double l2_dist = 0.0;
  long craft_ops = 0;
};

// One environment step through the man-in-the-middle. With no attack the
// victim acts greedily on the clean frame; with an attack the frame is
// perturbed first and the victim acts on the perturbed frame. Success means
// the perturbation changed the victim's greedy action. Counters and the
// accumulated reward are updated in place.
MitmOutcome mitm_step(const LayerStack& victim, bool attack, Env& env, const AttackSpec& spec,
                      AttackStats& stats);

struct AttackerEpisodePoint {
  int episode = 0;
  double r_x = 0.0;
  double r_str = 0.0;
  double r_ltr = 0.0;
  double r_s = 0.0;
  double r_a = 0.0;
  double victim_return = 0.0;
  double epsilon = 0.0;
  double loss_mean = 0.0;
  int episode_length = 0;
  long attacks_launched = 0;
  long attacks_succeeded = 0;
  std::vector<int> attack_steps;
  double mean_l2_dist = 0.0;
  double mean_linf_dist = 0.0;
  long craft_op_count = 0;
};

struct AttackerTrainResult {
  LayerStack net;
  Optimizer optimizer;
  std::vector<AttackerEpisodePoint> curve;
};

// DQN training of the attacker over {None, Attack} against a frozen victim.
// The attacker observes the same clean frame the victim would see; its
// replay stores those observations. Deterministic per (config, seed); the
// victim's parameters are bit-identical before and after.
AttackerTrainResult train_attacker(Env& env, const LayerStack& victim, const AttackerConfig& cfg,
                                   std::uint64_t seed,
                                   const std::function<void(const AttackerEpisodePoint&)>& on_episode = {});

void write_attacker_curve_csv(const std::filesystem::path& path,
                              const std::vector<AttackerEpisodePoint>& curve);

}  // namespace advrl
