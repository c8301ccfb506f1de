#include "advrl/attacker.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace advrl {

AttackStats AttackStats::for_env(const EnvSpec& spec) {
  if (spec.reward_upper <= spec.reward_lower)
    throw std::invalid_argument("attack stats: R_u must exceed R_l");
  AttackStats s;
  s.reward_upper = spec.reward_upper;
  s.reward_lower = spec.reward_lower;
  return s;
}

void AttackStats::reset_counters() {
  successful_attacks = 0;
  launched_attacks = 0;
  victim_steps = 0;
  accumulated_reward = 0.0;
}

double success_rate(const AttackStats& stats) {
  if (stats.launched_attacks == 0) return 0.0;
  return static_cast<double>(stats.successful_attacks) / static_cast<double>(stats.launched_attacks);
}

double attack_rate(const AttackStats& stats) {
  if (stats.victim_steps == 0) return 0.0;
  return static_cast<double>(stats.launched_attacks) / static_cast<double>(stats.victim_steps);
}

double short_term_reward(const AttackStats& stats) {
  return success_rate(stats) - attack_rate(stats);
}

double long_term_reward(const AttackStats& stats) {
  const double span = stats.reward_upper - stats.reward_lower;
  if (span <= 0.0) throw std::invalid_argument("long_term_reward: R_u must exceed R_l");
  const double v = (stats.reward_upper - stats.accumulated_reward) / span;
  return std::clamp(v, 0.0, 1.0);
}

double combined_reward(const AttackStats& stats, double alpha) {
  if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("combined_reward: alpha outside [0,1]");
  return alpha * short_term_reward(stats) + (1.0 - alpha) * long_term_reward(stats);
}

AttackerConfig::AttackerConfig() {
  // Attacker horizon defaults are shorter than the victim's: it adapts an
  // existing game rather than learning one from scratch.
  dqn.max_steps = 60000;
  dqn.learning_rate = 1e-4;
}

void AttackerConfig::validate() const {
  if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("attacker config: alpha outside [0,1]");
  dqn.validate();
  attack.validate();
}

MitmOutcome mitm_step(const LayerStack& victim, bool attack, Env& env, const AttackSpec& spec,
                      AttackStats& stats) {
  if (env.done()) throw std::logic_error("mitm_step: episode already finished");
  const Tensor clean = env.render_frame();
  const int clean_action = argmax(forward(victim, clean));

  MitmOutcome out;
  out.attacked = attack;
  int executed = clean_action;
  if (attack) {
    const AttackResult result = craft(victim, clean, spec);
    const int new_action = argmax(forward(victim, result.adv_frame));
    executed = new_action;
    out.attack_success = new_action != clean_action;
    out.linf_dist = result.linf_dist;
    out.l2_dist = result.l2_dist;
    out.craft_ops = result.op_count;
    ++stats.launched_attacks;
    if (out.attack_success) ++stats.successful_attacks;
  }
  ++stats.victim_steps;
  out.executed_action = executed;
  out.step = env.step(executed);
  stats.accumulated_reward += out.step.reward;
  return out;
}

AttackerTrainResult train_attacker(Env& env, const LayerStack& victim, const AttackerConfig& cfg,
                                   std::uint64_t seed,
                                   const std::function<void(const AttackerEpisodePoint&)>& on_episode) {
  cfg.validate();
  const std::uint64_t victim_hash_before = victim.param_hash();

  Rng init_rng(derive_seed(seed, "attacker-net-init"));
  Rng train_rng(derive_seed(seed, "attacker-train"));

  AttackerTrainResult result{build_net(env.spec(), cfg.net, init_rng, /*action_count=*/2),
                             cfg.dqn.make_optimizer(),
                             {}};
  LayerStack& net = result.net;
  LayerStack target = net;
  ReplayBuffer buffer(cfg.dqn.buffer_capacity);

  EpsilonSchedule schedule = cfg.dqn.epsilon;
  if (schedule.total_steps <= 0) schedule.total_steps = cfg.dqn.max_steps;

  AttackStats stats = AttackStats::for_env(env.spec());
  int episode = 0;
  int episode_step = 0;
  env.reset(derive_seed(seed, "attacker-episode-0"));
  Tensor s = env.render_frame();
  double loss_sum = 0.0;
  long loss_count = 0;
  std::vector<int> attack_steps;
  double l2_sum = 0.0, linf_sum = 0.0;
  long craft_ops = 0;

  for (long t = 0; t < cfg.dqn.max_steps; ++t) {
    const double eps = schedule.value(t);
    const int a = select_action(net, s, eps, train_rng);  // 0 = None, 1 = Attack
    const MitmOutcome mo = mitm_step(victim, a == 1, env, cfg.attack, stats);
    if (mo.attacked) {
      attack_steps.push_back(episode_step);
      l2_sum += mo.l2_dist;
      linf_sum += mo.linf_dist;
      craft_ops += mo.craft_ops;
    }
    ++episode_step;
    const double reward = combined_reward(stats, cfg.alpha);
    const Tensor s_next = env.done() ? mo.step.frame : env.render_frame();
    buffer.push({s, a, reward, s_next, mo.step.done});

    if (t >= cfg.dqn.learn_start_steps && (t + 1) % cfg.dqn.update_every == 0 &&
        buffer.size() >= static_cast<std::size_t>(cfg.dqn.batch_size)) {
      const double loss = dqn_update(net, target, buffer, cfg.dqn, result.optimizer, train_rng);
      if (!std::isfinite(loss))
        throw std::runtime_error("attacker training diverged: non-finite loss at step " +
                                 std::to_string(t));
      loss_sum += loss;
      ++loss_count;
    }
    if ((t + 1) % cfg.dqn.target_sync_every == 0) sync_target(net, target);

    if (mo.step.done) {
      AttackerEpisodePoint point;
      point.episode = episode;
      point.r_x = combined_reward(stats, cfg.alpha);
      point.r_str = short_term_reward(stats);
      point.r_ltr = long_term_reward(stats);
      point.r_s = success_rate(stats);
      point.r_a = attack_rate(stats);
      point.victim_return = stats.accumulated_reward;
      point.epsilon = eps;
      point.loss_mean = loss_count > 0 ? loss_sum / loss_count : 0.0;
      point.episode_length = static_cast<int>(stats.victim_steps);
      point.attacks_launched = stats.launched_attacks;
      point.attacks_succeeded = stats.successful_attacks;
      point.attack_steps = attack_steps;
      if (!attack_steps.empty()) {
        point.mean_l2_dist = l2_sum / static_cast<double>(attack_steps.size());
        point.mean_linf_dist = linf_sum / static_cast<double>(attack_steps.size());
      }
      point.craft_op_count = craft_ops;
      result.curve.push_back(point);
      if (on_episode) on_episode(point);
      ++episode;
      episode_step = 0;
      loss_sum = 0.0;
      loss_count = 0;
      attack_steps.clear();
      l2_sum = linf_sum = 0.0;
      craft_ops = 0;
      stats.reset_counters();
      env.reset(derive_seed(seed, "attacker-episode-" + std::to_string(episode)));
      s = env.render_frame();
    } else {
      s = s_next;
    }
  }

  if (victim.param_hash() != victim_hash_before)
    throw std::logic_error("train_attacker: victim parameters changed during training");
  return result;
}

void write_attacker_curve_csv(const std::filesystem::path& path,
                              const std::vector<AttackerEpisodePoint>& curve) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open curve csv: " + path.string());
  os << "episode,r_x,r_str,r_ltr,r_s,r_a,victim_return,epsilon,loss_mean\n";
  char buf[320];
  for (const auto& p : curve) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  p.episode, p.r_x, p.r_str, p.r_ltr, p.r_s, p.r_a, p.victim_return, p.epsilon,
                  p.loss_mean);
    os << buf;
  }
}

}  // namespace advrl
