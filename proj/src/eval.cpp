#include "advrl/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace advrl {

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void check_compatible(const Env& env, const LayerStack& net, const char* who) {
  const auto& fs = env.spec().frame_shape;
  const std::vector<int> expect = {fs[0], fs[1], fs[2]};
  if (net.input_shape != expect)
    throw std::invalid_argument(std::string(who) +
                                ": network input shape does not match env frames on " +
                                env.spec().name);
}

// Index-parallel worker pool; results land in caller-provided slots, so the
// outcome is independent of the job count.
template <typename F>
void parallel_for(int n, int jobs, F&& body) {
  jobs = std::max(1, std::min(jobs, n));
  if (jobs <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  workers.reserve(static_cast<std::size_t>(jobs));
  for (int w = 0; w < jobs; ++w) {
    workers.emplace_back([&]() {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (first_error) std::rethrow_exception(first_error);
}

EpisodeReport run_mitm_episode(const Env& proto, const LayerStack& victim,
                               const TimingStrategy& strategy, const AttackSpec& spec,
                               double alpha, std::uint64_t seed, int episode,
                               std::vector<nlohmann::json>* trace) {
  auto env = proto.clone_fresh();
  env->reset(derive_seed(seed, "eval-episode-" + std::to_string(episode)));
  Rng decide_rng(derive_seed(seed, "eval-decide-" + std::to_string(episode)));
  AttackStats stats = AttackStats::for_env(env->spec());

  EpisodeReport r;
  r.env_name = env->spec().name;
  r.strategy = strategy_label(strategy);
  r.method = to_string(spec.method);
  r.seed = seed;
  r.episode = episode;
  r.alpha = alpha;
  r.reward_upper = env->spec().reward_upper;
  r.reward_lower = env->spec().reward_lower;

  double l2_sum = 0.0, linf_sum = 0.0;
  int t = 0;
  while (!env->done()) {
    const Tensor s = env->render_frame();
    const bool attack = decide(strategy, victim, s, decide_rng);
    const MitmOutcome mo = mitm_step(victim, attack, *env, spec, stats);
    if (attack) {
      r.attack_steps.push_back(t);
      l2_sum += mo.l2_dist;
      linf_sum += mo.linf_dist;
      r.craft_op_count += mo.craft_ops;
    }
    if (trace) {
      nlohmann::json rec{{"t", t},
                         {"action", mo.executed_action},
                         {"reward", mo.step.reward},
                         {"done", mo.step.done},
                         {"frame_hash", hex64(tensor_hash(mo.step.frame))},
                         {"seed", seed},
                         {"episode", episode}};
      if (attack)
        rec["attack"] = {{"method", r.method},
                         {"success", mo.attack_success},
                         {"linf", mo.linf_dist},
                         {"l2", mo.l2_dist}};
      trace->push_back(std::move(rec));
    }
    ++t;
  }

  r.episode_return = stats.accumulated_reward;
  r.episode_length = static_cast<int>(stats.victim_steps);
  r.attacks_launched = stats.launched_attacks;
  r.attacks_succeeded = stats.successful_attacks;
  r.r_s = success_rate(stats);
  r.r_a = attack_rate(stats);
  r.r_str = short_term_reward(stats);
  r.r_ltr = long_term_reward(stats);
  r.r_x = combined_reward(stats, alpha);
  if (!r.attack_steps.empty()) {
    r.mean_l2_dist = l2_sum / static_cast<double>(r.attack_steps.size());
    r.mean_linf_dist = linf_sum / static_cast<double>(r.attack_steps.size());
  }
  validate_report(r);
  return r;
}

}  // namespace

void validate_report(const EpisodeReport& r) {
  auto fail = [](const char* why) {
    throw std::logic_error(std::string("episode report inconsistent: ") + why);
  };
  if (r.reward_upper <= r.reward_lower) fail("reward bounds");
  if (static_cast<long>(r.attack_steps.size()) != r.attacks_launched)
    fail("attack_steps length != attacks launched");
  if (r.attacks_succeeded < 0 || r.attacks_succeeded > r.attacks_launched) fail("N_a range");
  if (r.attacks_launched > r.episode_length) fail("N_s exceeds N_t");
  const double expect_rs =
      r.attacks_launched == 0
          ? 0.0
          : static_cast<double>(r.attacks_succeeded) / static_cast<double>(r.attacks_launched);
  const double expect_ra =
      r.episode_length == 0
          ? 0.0
          : static_cast<double>(r.attacks_launched) / static_cast<double>(r.episode_length);
  if (std::fabs(r.r_s - expect_rs) > 1e-12 || std::fabs(r.r_a - expect_ra) > 1e-12)
    fail("ratios do not match counters");
  if (std::fabs(r.r_str - (r.r_s - r.r_a)) > 1e-9) fail("r_str");
  const double expect_ltr = std::clamp(
      (r.reward_upper - r.episode_return) / (r.reward_upper - r.reward_lower), 0.0, 1.0);
  if (std::fabs(r.r_ltr - expect_ltr) > 1e-9) fail("r_ltr");
  if (std::fabs(r.r_x - (r.alpha * r.r_str + (1.0 - r.alpha) * r.r_ltr)) > 1e-9) fail("r_x");
  for (int step : r.attack_steps)
    if (step < 0 || step >= r.episode_length) fail("attack step index out of range");
}

nlohmann::json report_to_json(const EpisodeReport& r) {
  return nlohmann::json{{"env", r.env_name},
                        {"strategy", r.strategy},
                        {"method", r.method},
                        {"seed", r.seed},
                        {"episode", r.episode},
                        {"episode_return", r.episode_return},
                        {"episode_length", r.episode_length},
                        {"attacks_launched", r.attacks_launched},
                        {"attacks_succeeded", r.attacks_succeeded},
                        {"r_s", r.r_s},
                        {"r_a", r.r_a},
                        {"r_str", r.r_str},
                        {"r_ltr", r.r_ltr},
                        {"r_x", r.r_x},
                        {"alpha", r.alpha},
                        {"reward_upper", r.reward_upper},
                        {"reward_lower", r.reward_lower},
                        {"attack_steps", r.attack_steps},
                        {"mean_l2_dist", r.mean_l2_dist},
                        {"mean_linf_dist", r.mean_linf_dist},
                        {"craft_op_count", r.craft_op_count}};
}

EpisodeReport report_from_json(const nlohmann::json& j) {
  EpisodeReport r;
  r.env_name = j.value("env", "");
  r.strategy = j.value("strategy", "");
  r.method = j.value("method", "");
  r.seed = j.value("seed", std::uint64_t{0});
  r.episode = j.value("episode", 0);
  r.episode_return = j.at("episode_return").get<double>();
  r.episode_length = j.value("episode_length", 0);
  r.attacks_launched = j.value("attacks_launched", 0L);
  r.attacks_succeeded = j.value("attacks_succeeded", 0L);
  r.r_s = j.value("r_s", 0.0);
  r.r_a = j.value("r_a", 0.0);
  r.alpha = j.value("alpha", 0.5);
  r.reward_upper = j.at("reward_upper").get<double>();
  r.reward_lower = j.at("reward_lower").get<double>();
  // Derived metrics are recomputed when absent so fixture traces can carry
  // only the raw inputs.
  r.r_str = j.contains("r_str") ? j.at("r_str").get<double>() : r.r_s - r.r_a;
  const double ltr = std::clamp(
      (r.reward_upper - r.episode_return) / (r.reward_upper - r.reward_lower), 0.0, 1.0);
  r.r_ltr = j.contains("r_ltr") ? j.at("r_ltr").get<double>() : ltr;
  r.r_x = j.contains("r_x") ? j.at("r_x").get<double>()
                            : r.alpha * r.r_str + (1.0 - r.alpha) * r.r_ltr;
  if (j.contains("attack_steps")) r.attack_steps = j.at("attack_steps").get<std::vector<int>>();
  r.mean_l2_dist = j.value("mean_l2_dist", 0.0);
  r.mean_linf_dist = j.value("mean_linf_dist", 0.0);
  r.craft_op_count = j.value("craft_op_count", 0L);
  return r;
}

void write_reports_jsonl(const std::filesystem::path& path,
                         const std::vector<EpisodeReport>& reports, bool append) {
  std::ofstream os(path, append ? std::ios::app : std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open reports file: " + path.string());
  for (const auto& r : reports) {
    validate_report(r);
    os << report_to_json(r).dump() << '\n';
  }
}

std::vector<EpisodeReport> read_reports_jsonl(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open reports file: " + path.string());
  std::vector<EpisodeReport> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    out.push_back(report_from_json(nlohmann::json::parse(line)));
  }
  return out;
}

Aggregate aggregate(const std::vector<double>& values) {
  Aggregate a;
  a.count = static_cast<int>(values.size());
  if (values.empty()) return a;
  double sum = 0.0;
  for (double v : values) sum += v;
  a.mean = sum / a.count;
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  a.median = a.count % 2 == 1 ? sorted[a.count / 2]
                              : 0.5 * (sorted[a.count / 2 - 1] + sorted[a.count / 2]);
  if (a.count > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    a.stddev = std::sqrt(ss / (a.count - 1));
  }
  return a;
}

Aggregate aggregate_r_x(const std::vector<EpisodeReport>& reports) {
  std::vector<double> v;
  v.reserve(reports.size());
  for (const auto& r : reports) v.push_back(r.r_x);
  return aggregate(v);
}

EpisodeReport training_episode_report(const AttackerEpisodePoint& point, const EnvSpec& env_spec,
                                      AttackMethod method, double alpha, std::uint64_t seed) {
  EpisodeReport r;
  r.env_name = env_spec.name;
  r.strategy = "learned-train";
  r.method = to_string(method);
  r.seed = seed;
  r.episode = point.episode;
  r.episode_return = point.victim_return;
  r.episode_length = point.episode_length;
  r.attacks_launched = point.attacks_launched;
  r.attacks_succeeded = point.attacks_succeeded;
  r.r_s = point.r_s;
  r.r_a = point.r_a;
  r.r_str = point.r_str;
  r.r_ltr = point.r_ltr;
  r.r_x = point.r_x;
  r.alpha = alpha;
  r.reward_upper = env_spec.reward_upper;
  r.reward_lower = env_spec.reward_lower;
  r.attack_steps = point.attack_steps;
  r.mean_l2_dist = point.mean_l2_dist;
  r.mean_linf_dist = point.mean_linf_dist;
  r.craft_op_count = point.craft_op_count;
  validate_report(r);
  return r;
}

std::vector<EpisodeReport> evaluate(const Env& env_proto, const LayerStack& victim,
                                    const TimingStrategy& strategy, const AttackSpec& spec,
                                    const EvalOptions& opts) {
  if (opts.seeds.empty()) throw std::invalid_argument("evaluate: no seeds given");
  if (opts.episodes <= 0) throw std::invalid_argument("evaluate: episodes must be positive");
  spec.validate();
  check_compatible(env_proto, victim, "evaluate victim");
  if (const auto* learned = std::get_if<LearnedAttacker>(&strategy)) {
    if (!learned->policy) throw std::invalid_argument("evaluate: learned strategy without policy");
    check_compatible(env_proto, *learned->policy, "evaluate attacker");
  }

  const int n = static_cast<int>(opts.seeds.size()) * opts.episodes;
  std::vector<EpisodeReport> reports(static_cast<std::size_t>(n));
  std::vector<std::vector<nlohmann::json>> traces(
      opts.trace_path ? static_cast<std::size_t>(n) : 0);

  parallel_for(n, opts.jobs, [&](int i) {
    const std::uint64_t seed = opts.seeds[static_cast<std::size_t>(i) / opts.episodes];
    const int episode = i % opts.episodes;
    reports[static_cast<std::size_t>(i)] =
        run_mitm_episode(env_proto, victim, strategy, spec, opts.alpha, seed, episode,
                         opts.trace_path ? &traces[static_cast<std::size_t>(i)] : nullptr);
  });

  if (opts.trace_path) {
    std::ofstream os(*opts.trace_path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open trace file: " + opts.trace_path->string());
    for (const auto& episode_trace : traces)
      for (const auto& rec : episode_trace) os << rec.dump() << '\n';
  }
  return reports;
}

std::vector<SweepEntry> sweep_uniform(const Env& env_proto, const LayerStack& victim,
                                      const AttackSpec& spec, const std::vector<double>& p_grid,
                                      const EvalOptions& opts) {
  std::vector<SweepEntry> entries;
  for (double p : p_grid) {
    SweepEntry e;
    e.param = p;
    e.reports = evaluate(env_proto, victim, Uniform{p}, spec, opts);
    e.r_x = aggregate_r_x(e.reports);
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<SweepEntry> sweep_strategic(const Env& env_proto, const LayerStack& victim,
                                        const AttackSpec& spec,
                                        const std::vector<double>& threshold_grid,
                                        const EvalOptions& opts) {
  std::vector<SweepEntry> entries;
  for (double th : threshold_grid) {
    SweepEntry e;
    e.param = th;
    e.reports = evaluate(env_proto, victim, StrategicallyTimed{th}, spec, opts);
    e.r_x = aggregate_r_x(e.reports);
    entries.push_back(std::move(e));
  }
  return entries;
}

const SweepEntry& best_of(const std::vector<SweepEntry>& entries) {
  if (entries.empty()) throw std::invalid_argument("best_of: empty sweep");
  const SweepEntry* best = &entries.front();
  for (const auto& e : entries)
    if (e.r_x.median > best->r_x.median) best = &e;
  return *best;
}

double matched_uniform_p(const std::vector<EpisodeReport>& learned_reports) {
  if (learned_reports.empty()) throw std::invalid_argument("matched_uniform_p: no reports");
  double sum = 0.0;
  for (const auto& r : learned_reports) sum += r.r_a;
  return std::clamp(sum / static_cast<double>(learned_reports.size()), 0.0, 1.0);
}

std::vector<TransferCell> transfer_env(const std::vector<EnvContext>& contexts,
                                       const AttackSpec& spec, const EvalOptions& opts) {
  if (contexts.empty()) throw std::invalid_argument("transfer_env: no contexts");
  for (const auto& c : contexts)
    if (!c.env_proto || !c.victim || !c.attacker)
      throw std::invalid_argument("transfer_env: incomplete context " + c.name);

  const int k = static_cast<int>(contexts.size());
  std::vector<std::vector<double>> grid(static_cast<std::size_t>(k),
                                        std::vector<double>(static_cast<std::size_t>(k), 0.0));
  for (int from = 0; from < k; ++from) {
    for (int to = 0; to < k; ++to) {
      const auto reports = evaluate(*contexts[to].env_proto, *contexts[to].victim,
                                    LearnedAttacker{contexts[from].attacker}, spec, opts);
      grid[from][to] = aggregate_r_x(reports).mean;
    }
  }
  std::vector<TransferCell> cells;
  for (int from = 0; from < k; ++from)
    for (int to = 0; to < k; ++to)
      cells.push_back({contexts[from].name, contexts[to].name, grid[from][to],
                       grid[from][to] - grid[to][to]});
  return cells;
}

std::vector<TransferCell> transfer_attack(
    const Env& env_proto, const LayerStack& victim,
    const std::map<AttackMethod, std::shared_ptr<const LayerStack>>& policies,
    const std::vector<AttackMethod>& methods, const AttackSpec& base_spec,
    const EvalOptions& opts) {
  if (policies.empty() || methods.empty())
    throw std::invalid_argument("transfer_attack: empty grid axes");

  std::map<AttackMethod, std::map<AttackMethod, double>> grid;
  for (const auto& [policy_method, policy] : policies) {
    for (AttackMethod eval_method : methods) {
      AttackSpec spec = base_spec;
      spec.method = eval_method;
      const auto reports = evaluate(env_proto, victim, LearnedAttacker{policy}, spec, opts);
      grid[policy_method][eval_method] = aggregate_r_x(reports).mean;
    }
  }
  std::vector<TransferCell> cells;
  for (const auto& [policy_method, row] : grid) {
    for (const auto& [eval_method, value] : row) {
      // Native point of an eval-time method is the matching-policy diagonal.
      double native = value;
      auto diag = grid.find(eval_method);
      if (diag != grid.end()) {
        auto it = diag->second.find(eval_method);
        if (it != diag->second.end()) native = it->second;
      }
      cells.push_back({"policy:" + to_string(policy_method), "atk:" + to_string(eval_method),
                       value, value - native});
    }
  }
  return cells;
}

AdvTrainResult adversarial_train(Env& env, const LayerStack& victim, const LayerStack& attacker,
                                 const DqnConfig& finetune_cfg, const AttackSpec& spec,
                                 std::uint64_t seed) {
  AdvTrainResult out{victim, {}};
  if (finetune_cfg.max_steps == 0) return out;  // zero budget: robust copy == original
  finetune_cfg.validate();
  spec.validate();
  check_compatible(env, victim, "adversarial_train victim");
  check_compatible(env, attacker, "adversarial_train attacker");
  const std::uint64_t attacker_hash = attacker.param_hash();

  LayerStack& robust = out.robust_victim;
  LayerStack target = robust;
  Optimizer opt = finetune_cfg.make_optimizer();
  ReplayBuffer buffer(finetune_cfg.buffer_capacity);
  Rng train_rng(derive_seed(seed, "advtrain"));
  EpsilonSchedule schedule = finetune_cfg.epsilon;
  if (schedule.total_steps <= 0) schedule.total_steps = finetune_cfg.max_steps;

  // The frozen attacker decides when to perturb; perturbations are crafted
  // white-box against the network being fine-tuned.
  auto observe = [&](const Tensor& clean) -> Tensor {
    if (argmax(forward(attacker, clean)) == 1) return craft(robust, clean, spec).adv_frame;
    return clean;
  };

  int episode = 0;
  env.reset(derive_seed(seed, "advtrain-episode-0"));
  Tensor obs = observe(env.render_frame());
  double ep_return = 0.0, loss_sum = 0.0;
  long loss_count = 0;

  for (long t = 0; t < finetune_cfg.max_steps; ++t) {
    const double eps = schedule.value(t);
    const int a = select_action(robust, obs, eps, train_rng);
    const StepResult sr = env.step(a);
    ep_return += sr.reward;
    const Tensor next_obs = sr.done ? sr.frame : observe(env.render_frame());
    buffer.push({obs, a, sr.reward, next_obs, sr.done});

    if (t >= finetune_cfg.learn_start_steps && (t + 1) % finetune_cfg.update_every == 0 &&
        buffer.size() >= static_cast<std::size_t>(finetune_cfg.batch_size)) {
      const double loss = dqn_update(robust, target, buffer, finetune_cfg, opt, train_rng);
      if (!std::isfinite(loss))
        throw std::runtime_error("adversarial fine-tuning diverged at step " + std::to_string(t));
      loss_sum += loss;
      ++loss_count;
    }
    if ((t + 1) % finetune_cfg.target_sync_every == 0) sync_target(robust, target);

    if (sr.done) {
      out.curve.push_back({episode, ep_return, eps, loss_count > 0 ? loss_sum / loss_count : 0.0});
      ++episode;
      ep_return = 0.0;
      loss_sum = 0.0;
      loss_count = 0;
      env.reset(derive_seed(seed, "advtrain-episode-" + std::to_string(episode)));
      obs = observe(env.render_frame());
    } else {
      obs = next_obs;
    }
  }

  if (attacker.param_hash() != attacker_hash)
    throw std::logic_error("adversarial_train: attacker parameters changed");
  return out;
}

AdvTrainReport advtrain_report(const Env& env_proto, const LayerStack& original,
                               const LayerStack& robust, std::shared_ptr<const LayerStack> attacker,
                               const AttackSpec& base_spec, const std::vector<AttackMethod>& methods,
                               const EvalOptions& opts) {
  auto mean_return = [&](const LayerStack& victim, const TimingStrategy& strategy,
                         const AttackSpec& spec) {
    const auto reports = evaluate(env_proto, victim, strategy, spec, opts);
    std::vector<double> rets;
    rets.reserve(reports.size());
    for (const auto& r : reports) rets.push_back(r.episode_return);
    return aggregate(rets).mean;
  };

  AdvTrainReport rep;
  rep.clean_original = mean_return(original, Uniform{0.0}, base_spec);
  rep.clean_robust = mean_return(robust, Uniform{0.0}, base_spec);
  for (AttackMethod m : methods) {
    AttackSpec spec = base_spec;
    spec.method = m;
    rep.attacked_original[m] = mean_return(original, LearnedAttacker{attacker}, spec);
    rep.attacked_robust[m] = mean_return(robust, LearnedAttacker{attacker}, spec);
  }
  return rep;
}

DistanceReport distance_report(const Env& env_proto, const LayerStack& victim,
                               const std::vector<AttackSpec>& specs, const EvalOptions& opts,
                               int frame_stride) {
  if (specs.empty()) throw std::invalid_argument("distance_report: no attack specs");
  if (frame_stride < 1) frame_stride = 1;
  check_compatible(env_proto, victim, "distance_report victim");

  const std::size_t k = specs.size();
  DistanceReport rep;
  rep.rows.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    rep.rows[i].method = to_string(specs[i].method);
    rep.rows[i].op_count = specs[i].op_count();
  }
  std::vector<double> l2_sum(k, 0.0), linf_sum(k, 0.0), l2_common_sum(k, 0.0);

  for (std::uint64_t seed : opts.seeds) {
    for (int ep = 0; ep < opts.episodes; ++ep) {
      auto env = env_proto.clone_fresh();
      env->reset(derive_seed(seed, "distance-episode-" + std::to_string(ep)));
      int t = 0;
      while (!env->done()) {
        const Tensor frame = env->render_frame();
        if (t % frame_stride == 0) {
          ++rep.frames_sampled;
          std::vector<AttackResult> results;
          results.reserve(k);
          bool all = true;
          for (std::size_t i = 0; i < k; ++i) {
            results.push_back(craft(victim, frame, specs[i]));
            const auto& res = results.back();
            ++rep.rows[i].frames_attacked;
            l2_sum[i] += res.l2_dist;
            linf_sum[i] += res.linf_dist;
            if (res.success)
              ++rep.rows[i].frames_succeeded;
            else
              all = false;
          }
          if (all) {
            ++rep.frames_all_succeed;
            for (std::size_t i = 0; i < k; ++i) l2_common_sum[i] += results[i].l2_dist;
          }
        }
        env->step(argmax(forward(victim, frame)));
        ++t;
      }
    }
  }

  for (std::size_t i = 0; i < k; ++i) {
    if (rep.rows[i].frames_attacked > 0) {
      rep.rows[i].mean_l2 = l2_sum[i] / rep.rows[i].frames_attacked;
      rep.rows[i].mean_linf = linf_sum[i] / rep.rows[i].frames_attacked;
    }
    if (rep.frames_all_succeed > 0)
      rep.rows[i].mean_l2_all_succeed = l2_common_sum[i] / rep.frames_all_succeed;
  }
  return rep;
}

}  // namespace advrl
